// Command-line front end: ingest or generate trajectories, run the
// kernel -> graph -> spectral -> cluster -> attractor pipeline, and write
// machine-readable results.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "attractorscope/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Multi-attractor sub-dynamics clustering and attractor localization"};

    std::string config_path;
    attractorscope::PipelineConfig config;
    double sigma = -1.0, theta_r = -1.0, sigma_f = -1.0, epsilon = -1.0;
    long long seed = -1;
    int subsample = -1, embed_dim_cap = -1;
    int diffeo_layers = -1, diffeo_features = -1, diffeo_epochs = -1;
    double diffeo_lr = -1.0;
    bool baselines = false, diffeo = false;
    std::string benchmark, input, out, truth;
    double freq = -1.0;

    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--benchmark", benchmark, "benchmark system: heart | pendulum | duffing");
    app.add_option("--input", input, "trajectory CSV input");
    app.add_option("--freq", freq, "sampling frequency in Hz (required with --input)");
    app.add_option("--out", out, "output directory");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--subsample", subsample, "keep every n-th sample");
    app.add_option("--sigma", sigma, "kernel locality bandwidth override");
    app.add_option("--theta-r", theta_r, "kernel reference angle (rad)");
    app.add_option("--sigma-f", sigma_f, "speed-filter bandwidth override");
    app.add_option("--epsilon", epsilon, "adjacency threshold");
    app.add_option("--embed-dim-cap", embed_dim_cap, "per-cluster embedding dimension cap");
    app.add_flag("--baselines", baselines, "run baseline clusterers");
    app.add_flag("--diffeo", diffeo, "train the per-cluster diffeomorphism");
    app.add_option("--diffeo-layers", diffeo_layers, "coupling layers");
    app.add_option("--diffeo-features", diffeo_features, "Fourier features per net");
    app.add_option("--diffeo-epochs", diffeo_epochs, "training epochs");
    app.add_option("--diffeo-learning-rate", diffeo_lr, "initial learning rate");
    app.add_option("--truth", truth, "ground-truth sidecar JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) config = attractorscope::parse_config_file(config_path);
        // flags override config-file values
        if (!benchmark.empty()) config.benchmark = benchmark;
        if (!input.empty()) config.input_csv = input;
        if (freq > 0) config.frequency = freq;
        if (!out.empty()) config.out_dir = out;
        if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
        if (subsample > 0) config.subsample = subsample;
        if (sigma > 0) config.sigma = sigma;
        if (theta_r > 0) config.theta_r = theta_r;
        if (sigma_f >= 0) config.sigma_f = sigma_f;
        if (epsilon > 0) config.epsilon = epsilon;
        if (embed_dim_cap > 0) config.embed_dim_cap = embed_dim_cap;
        if (baselines) config.run_baselines = true;
        if (diffeo) config.run_diffeo = true;
        if (diffeo_layers > 0) config.diffeo_layers = diffeo_layers;
        if (diffeo_features > 0) config.diffeo_features = diffeo_features;
        if (diffeo_epochs > 0) config.diffeo_epochs = diffeo_epochs;
        if (diffeo_lr > 0) config.diffeo_learning_rate = diffeo_lr;
        if (!truth.empty()) config.truth_json = truth;
        if (config.out_dir.empty()) throw std::runtime_error("--out is required");

        const attractorscope::PipelineReport report = attractorscope::run_pipeline(config);
        attractorscope::export_results(report, config.out_dir);

        std::printf("Q = %d\n", report.Q);
        for (const auto& cr : report.clusters) {
            std::printf("cluster %d: attractor (", cr.cluster);
            for (int k = 0; k < cr.attractor_original.size(); ++k)
                std::printf("%s%.6g", k ? ", " : "", cr.attractor_original[k]);
            std::printf(")%s", cr.fallback_used ? " [terminal-centroid fallback]" : "");
            if (std::isfinite(cr.error)) std::printf("  error %.4f", cr.error);
            std::printf("\n");
        }
        if (std::isfinite(report.accuracy))
            std::printf("clustering accuracy %.4f\n", report.accuracy);
        for (const auto& b : report.baselines)
            std::printf("baseline %s: mean accuracy %.4f over %d runs\n", b.method.c_str(),
                        b.mean_accuracy, b.runs);
        for (const auto& d : report.diffeo)
            std::printf("diffeo cluster %d: loss %.6g -> %.6g, dtwd %.4g\n", d.cluster,
                        d.loss_history.front(), d.loss_history.back(), d.reproduction.dtwd);
        for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        return 0;
    } catch (const attractorscope::StageError& e) {
        std::fprintf(stderr, "error in module %s\n", e.what());
        if (!config.out_dir.empty()) {
            try {
                attractorscope::export_results(e.partial, config.out_dir, /*partial=*/true);
            } catch (const std::exception& io) {
                std::fprintf(stderr, "could not flush partial artifacts: %s\n", io.what());
            }
        }
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

#include "attractorscope/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "attractorscope/dsgraph.hpp"
#include "attractorscope/vkernel.hpp"

namespace attractorscope {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

BenchmarkPreset benchmark_preset(const std::string& name) {
    BenchmarkPreset preset;
    preset.system = BenchmarkSystem::from_name(name);
    if (name == "heart") {
        preset.duration = 10.0;
        preset.frequency = 100.0;
        preset.subsample = 5;
        preset.initial_conditions = {
            {0.5, 0.5},  {2.0, 3.0},  {1.5, 0.8},
            {-0.5, 0.5}, {-2.0, 3.0}, {-1.5, 0.8},
        };
    } else if (name == "pendulum") {
        preset.duration = 60.0;
        preset.frequency = 10.0;
        preset.subsample = 3;
        preset.initial_conditions = {
            {2.4, 0.0}, {1.2, 0.4},  {2.9, -0.2},
            {3.9, 0.0}, {5.1, -0.4}, {3.4, 0.2},
        };
    } else if (name == "duffing") {
        // damping such that the 5 s horizon contains the full approach
        // (exp(-5) contraction, like the heart run); starts are staggered
        // states along one inflow so the trio rides a common curve
        preset.system = BenchmarkSystem::duffing(2.0, -1.2, 0.3);
        preset.duration = 5.0;
        preset.frequency = 200.0;
        preset.subsample = 5;
        preset.initial_conditions = {
            {2.7, 0.3},
            {2.48626719534851, -0.6984863786628265},
            {2.111185960184292, -0.4679365916409552},
            {-2.7, -0.3},
            {-2.48626719534851, 0.6984863786628265},
            {-2.111185960184292, 0.4679365916409552},
        };
    } else {
        throw std::invalid_argument("unknown benchmark: " + name);
    }
    return preset;
}

TrajectorySet benchmark_dataset(const std::string& name, int subsample_override) {
    const BenchmarkPreset preset = benchmark_preset(name);
    TrajectorySet data = make_dataset(preset.system, preset.initial_conditions, preset.duration,
                                      preset.frequency);
    const int factor = subsample_override > 0 ? subsample_override : preset.subsample;
    return data.subsample(factor);
}

TrajectorySet ingest_csv(const std::string& path, double sampling_frequency) {
    if (sampling_frequency <= 0)
        throw std::invalid_argument("ingest_csv: sampling frequency must be positive");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ingest_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("ingest_csv: empty file " + path);
    // header traj_id,x0..x{d-1},v0..v{d-1}
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) header.push_back(tok);
    }
    if (header.size() < 3 || header[0] != "traj_id")
        throw std::runtime_error("ingest_csv: malformed header at line 1");
    if ((header.size() - 1) % 2 != 0)
        throw std::runtime_error("ingest_csv: header must pair x and v columns (line 1)");
    const int d = static_cast<int>((header.size() - 1) / 2);
    for (int k = 0; k < d; ++k) {
        if (header[1 + k] != "x" + std::to_string(k) ||
            header[1 + d + k] != "v" + std::to_string(k))
            throw std::runtime_error("ingest_csv: unexpected column names at line 1");
    }

    TrajectorySet data;
    data.sampling_frequency = sampling_frequency;
    long last_id = -1;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> values;
        bool first = true;
        long traj_id = -1;
        while (std::getline(ss, tok, ',')) {
            try {
                if (first) {
                    traj_id = std::stol(tok);
                    first = false;
                } else {
                    values.push_back(std::stod(tok));
                }
            } catch (const std::exception&) {
                throw std::runtime_error("ingest_csv: unparsable value at line " +
                                         std::to_string(line_no));
            }
        }
        if (static_cast<int>(values.size()) != 2 * d)
            throw std::runtime_error("ingest_csv: expected " + std::to_string(2 * d) +
                                     " values at line " + std::to_string(line_no));
        for (double v : values)
            if (!std::isfinite(v))
                throw std::runtime_error("ingest_csv: non-finite value at line " +
                                         std::to_string(line_no));
        if (traj_id < last_id)
            throw std::runtime_error("ingest_csv: trajectory ids must be ascending (line " +
                                     std::to_string(line_no) + ")");
        if (traj_id != last_id) {
            data.trajectories.emplace_back();
            data.trajectories.back().dt = 1.0 / sampling_frequency;
            last_id = traj_id;
        }
        StateSample s;
        s.position = Eigen::Map<Eigen::VectorXd>(values.data(), d);
        s.velocity = Eigen::Map<Eigen::VectorXd>(values.data() + d, d);
        data.trajectories.back().samples.push_back(std::move(s));
    }
    if (data.trajectories.empty()) throw std::runtime_error("ingest_csv: no rows in " + path);
    for (std::size_t q = 0; q < data.trajectories.size(); ++q)
        if (data.trajectories[q].samples.empty())
            throw std::runtime_error("ingest_csv: empty trajectory " + std::to_string(q));
    return data;
}

void write_trajectory_csv(const TrajectorySet& data, const std::string& path) {
    const int d = data.dim();
    std::string out = "traj_id";
    for (int k = 0; k < d; ++k) out += ",x" + std::to_string(k);
    for (int k = 0; k < d; ++k) out += ",v" + std::to_string(k);
    out += "\n";
    for (std::size_t q = 0; q < data.trajectories.size(); ++q) {
        for (const auto& s : data.trajectories[q].samples) {
            out += std::to_string(q);
            for (int k = 0; k < d; ++k) out += "," + format_double(s.position[k]);
            for (int k = 0; k < d; ++k) out += "," + format_double(s.velocity[k]);
            out += "\n";
        }
    }
    write_file(path, out);
}

namespace {

struct GroundTruth {
    std::vector<Eigen::VectorXd> attractors;
    std::vector<int> labels;  // per point, may be empty
};

GroundTruth load_truth(const PipelineConfig& config) {
    GroundTruth truth;
    if (!config.truth_json.empty()) {
        std::ifstream in(config.truth_json);
        if (!in) throw std::runtime_error("cannot open truth sidecar: " + config.truth_json);
        nlohmann::json j;
        in >> j;
        if (j.contains("attractors"))
            for (const auto& a : j["attractors"]) {
                Eigen::VectorXd v(a.size());
                for (std::size_t k = 0; k < a.size(); ++k) v[k] = a[k].get<double>();
                truth.attractors.push_back(std::move(v));
            }
        if (j.contains("labels")) truth.labels = j["labels"].get<std::vector<int>>();
    } else if (!config.benchmark.empty()) {
        for (const auto& a : BenchmarkSystem::from_name(config.benchmark).attractors())
            truth.attractors.push_back(a);
    }
    return truth;
}

Eigen::VectorXd terminal_centroid(const TrajectorySet& data, const std::vector<int>& labels,
                                  int cluster) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(data.dim());
    int count = 0;
    int flat = 0;
    for (const auto& traj : data.trajectories) {
        const int terminal = flat + traj.size() - 1;
        if (labels[terminal] == cluster) {
            sum += traj.samples.back().position;
            ++count;
        }
        flat += traj.size();
    }
    if (count > 0) return sum / count;
    // fragment cluster without any trajectory terminal: report its centroid
    flat = 0;
    for (const auto& traj : data.trajectories)
        for (const auto& s : traj.samples) {
            if (labels[flat++] == cluster) {
                sum += s.position;
                ++count;
            }
        }
    if (count == 0) throw std::runtime_error("empty cluster");
    return sum / count;
}

double data_diameter(const std::vector<Eigen::VectorXd>& points) {
    double diameter = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            diameter = std::max(diameter, (points[i] - points[j]).norm());
    return diameter;
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& config) {
    PipelineReport report;
    std::string stage = "dynamics";
    try {
        TrajectorySet data;
        if (!config.benchmark.empty()) {
            data = benchmark_dataset(config.benchmark, config.subsample);
        } else if (!config.input_csv.empty()) {
            stage = "cli";
            data = ingest_csv(config.input_csv, config.frequency);
            if (config.subsample > 1) data = data.subsample(config.subsample);
        } else {
            throw std::invalid_argument("config needs either a benchmark or an input CSV");
        }

        stage = "vkernel";
        KernelParams params = default_params(data);
        if (config.sigma > 0) params.sigma = config.sigma;
        if (config.theta_r > 0) params.theta_r = config.theta_r;
        if (config.sigma_f >= 0) params.sigma_f = config.sigma_f;
        if (config.epsilon > 0) params.epsilon = config.epsilon;
        WeightedGraph graph = build_adjacency(data, params);
        for (const auto& w : graph.warnings) report.warnings.push_back("vkernel: " + w);

        stage = "dsgraph";
        const LaplacianMatrix lap = laplacian(graph);
        const auto components = connected_components(graph);
        const int Q = static_cast<int>(components.size());
        report.Q = Q;

        stage = "spectral";
        const SpectralDecomposition dec = eigendecompose(lap);
        report.spectrum = dec.eigenvalues;
        const int q_spectral = count_subdynamics(dec);
        if (q_spectral != Q)
            report.warnings.push_back(
                "spectral: zero-eigenvalue multiplicity " + std::to_string(q_spectral) +
                " disagrees with " + std::to_string(Q) + " reachability components");
        report.labels = label_points(dec, Q, graph);
        std::vector<int> relevant = relevant_components(dec, Q, config.embed_dim_cap);
        SubdynamicsPartition part = assign_and_embed(dec, report.labels, relevant);
        // extend until every cluster spans a plane (bounded by the spectrum)
        int next = relevant.empty() ? Q : relevant.back() + 1;
        auto deficient = [&part] {
            for (const auto& v : part.assigned_eigvecs)
                if (v.size() < 2) return true;
            return false;
        };
        while (deficient() && next < dec.size() &&
               next < Q * std::max(config.embed_dim_cap, 2) + Q) {
            relevant.push_back(next++);
            part = assign_and_embed(dec, report.labels, relevant);
        }
        // cap the per-cluster embedding dimension
        bool truncated = false;
        for (auto& v : part.assigned_eigvecs)
            if (static_cast<int>(v.size()) > config.embed_dim_cap) {
                v.resize(config.embed_dim_cap);
                truncated = true;
            }
        if (truncated) {
            std::vector<int> trimmed;
            for (const auto& v : part.assigned_eigvecs)
                trimmed.insert(trimmed.end(), v.begin(), v.end());
            std::sort(trimmed.begin(), trimmed.end());
            part = assign_and_embed(dec, report.labels, trimmed);
        }
        for (const auto& w : part.warnings) report.warnings.push_back("spectral: " + w);
        report.embeddings = part.embeddings;

        stage = "attractor";
        const GroundTruth truth = load_truth(config);
        for (int q = 0; q < Q; ++q) {
            ClusterReport cr;
            cr.cluster = q;
            cr.eigenvectors = part.assigned_eigvecs[q];
            try {
                const auto lines = extract_lines(part, q, graph, &report.warnings);
                const AttractorEstimate est = find_attractor(lines, part, q, data);
                cr.attractor_embedding = est.embedding_point;
                cr.attractor_original = est.original_point;
                cr.intersection_spread = est.intersection_spread;
            } catch (const std::exception& e) {
                report.warnings.push_back("attractor: cluster " + std::to_string(q) + ": " +
                                          e.what() + "; falling back to terminal centroid");
                cr.fallback_used = true;
                cr.attractor_original = terminal_centroid(data, report.labels, q);
                cr.attractor_embedding =
                    Eigen::VectorXd::Zero(part.embeddings[q].cols());
            }
            if (!truth.attractors.empty()) {
                AttractorEstimate est;
                est.original_point = cr.attractor_original;
                double best = std::numeric_limits<double>::max();
                for (const auto& t : truth.attractors)
                    best = std::min(best, attractor_error(est, t, data));
                cr.error = best;
            }
            report.clusters.push_back(std::move(cr));
        }
        if (!truth.attractors.empty()) {
            const std::vector<int> truth_labels =
                truth.labels.empty() ? labels_from_attractors(data, truth.attractors)
                                     : truth.labels;
            if (truth_labels.size() == report.labels.size()) {
                if (Q <= 8) {
                    report.accuracy = permutation_accuracy(report.labels, truth_labels);
                } else {
                    report.warnings.push_back(
                        "attractor: accuracy skipped, too many clusters (" +
                        std::to_string(Q) + ") for permutation matching");
                }
            }
        }

        if (config.run_baselines) {
            stage = "evalbench";
            const std::vector<int> truth_labels =
                !truth.labels.empty()
                    ? truth.labels
                    : (!truth.attractors.empty() ? labels_from_attractors(data, truth.attractors)
                                                 : std::vector<int>{});
            const std::vector<int>* tl = truth_labels.empty() ? nullptr : &truth_labels;
            const double sigma = default_sigma(data);
            BaselineSummary kk{"kernel_kmeans", 0.0, 10}, gm{"gmm_em", 0.0, 10},
                sp{"spectral_baseline", 0.0, 1};
            for (std::uint64_t s = 0; s < 10; ++s) {
                kk.mean_accuracy += kernel_kmeans(data, Q, sigma, s, tl).accuracy;
                gm.mean_accuracy += gmm_em(data, Q, s, tl).accuracy;
            }
            kk.mean_accuracy /= 10.0;
            gm.mean_accuracy /= 10.0;
            sp.mean_accuracy = spectral_baseline(data, Q, 10, tl).accuracy;
            report.baselines = {kk, gm, sp};
        }

        if (config.run_diffeo) {
            stage = "diffeo";
            for (int q = 0; q < Q; ++q) {
                const auto& cr = report.clusters[q];
                DiffeoTrainingSet training =
                    prepare_targets(part, q, data, cr.attractor_embedding);
                std::vector<Eigen::VectorXd> positions;
                positions.reserve(training.pairs.size());
                for (const auto& p : training.pairs) positions.push_back(p.input);
                const double bandwidth = 0.45 * data_diameter(positions);
                CouplingStack stack =
                    make_coupling_stack(data.dim(), config.diffeo_layers, config.diffeo_features,
                                        bandwidth, config.seed + static_cast<std::uint64_t>(q));
                TrainConfig tc;
                tc.learning_rate = config.diffeo_learning_rate;
                tc.epochs = config.diffeo_epochs;
                DiffeoReport dr;
                dr.cluster = q;
                dr.loss_history = train(stack, training.pairs, tc);
                dr.model_json = save_coupling_stack(stack);

                // the reconstruction takes the original-space attractor; no
                // inverse map is involved
                const Eigen::VectorXd psi_star = forward(stack, cr.attractor_original);
                std::vector<Trajectory> cluster_trajectories;
                {
                    int flat = 0;
                    for (const auto& traj : data.trajectories) {
                        if (report.labels[flat] == q) cluster_trajectories.push_back(traj);
                        flat += traj.size();
                    }
                }
                dr.reproduction = metrics(
                    cluster_trajectories, [&stack, &psi_star](const Eigen::VectorXd& x) {
                        return reconstruct_field_at(stack, x, psi_star);
                    });
                report.diffeo.push_back(std::move(dr));
            }
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what(), std::move(report));
    }
    return report;
}

namespace {

std::string spectrum_csv(const PipelineReport& report) {
    std::string out = "index,eigenvalue\n";
    for (int i = 0; i < report.spectrum.size(); ++i)
        out += std::to_string(i) + "," + format_double(report.spectrum[i]) + "\n";
    return out;
}

std::string labels_csv(const PipelineReport& report) {
    std::string out = "point_index,label\n";
    for (std::size_t i = 0; i < report.labels.size(); ++i)
        out += std::to_string(i) + "," + std::to_string(report.labels[i]) + "\n";
    return out;
}

std::string embedding_csv(const Eigen::MatrixXd& embedding) {
    std::string out = "point_index";
    for (int c = 0; c < embedding.cols(); ++c) out += ",coord_" + std::to_string(c);
    out += "\n";
    for (int r = 0; r < embedding.rows(); ++r) {
        out += std::to_string(r);
        for (int c = 0; c < embedding.cols(); ++c) out += "," + format_double(embedding(r, c));
        out += "\n";
    }
    return out;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json j = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

}  // namespace

std::vector<ManifestEntry> export_results(const PipelineReport& report, const std::string& dir,
                                          bool partial) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<ManifestEntry> manifest;
    auto emit = [&](const std::string& name, const std::string& content) {
        write_file((fs::path(dir) / name).string(), content);
        char hash[20];
        std::snprintf(hash, sizeof(hash), "%016llx",
                      static_cast<unsigned long long>(fnv1a(content)));
        manifest.push_back({name, std::string("fnv1a:") + hash, content.size()});
    };

    if (report.spectrum.size() > 0) emit("spectrum.csv", spectrum_csv(report));
    if (!report.labels.empty()) emit("labels.csv", labels_csv(report));
    for (std::size_t q = 0; q < report.embeddings.size(); ++q)
        emit("embedding_" + std::to_string(q) + ".csv", embedding_csv(report.embeddings[q]));

    if (!report.clusters.empty()) {
        nlohmann::json attractors = nlohmann::json::array();
        for (const auto& cr : report.clusters) {
            nlohmann::json j;
            j["cluster"] = cr.cluster;
            j["eigenvectors"] = cr.eigenvectors;
            j["embedding"] = vector_to_json(cr.attractor_embedding);
            j["original"] = vector_to_json(cr.attractor_original);
            j["intersection_spread"] = cr.intersection_spread;
            j["fallback_used"] = cr.fallback_used;
            if (std::isfinite(cr.error)) j["error"] = cr.error;
            attractors.push_back(std::move(j));
        }
        emit("attractors.json", attractors.dump(2) + "\n");
    }

    {
        nlohmann::json j;
        j["Q"] = report.Q;
        if (std::isfinite(report.accuracy)) j["accuracy"] = report.accuracy;
        if (!report.baselines.empty()) {
            nlohmann::json b = nlohmann::json::array();
            for (const auto& s : report.baselines)
                b.push_back({{"method", s.method},
                             {"mean_accuracy", s.mean_accuracy},
                             {"runs", s.runs}});
            j["baselines"] = std::move(b);
        }
        if (!report.diffeo.empty()) {
            nlohmann::json d = nlohmann::json::array();
            for (const auto& dr : report.diffeo) {
                nlohmann::json e;
                e["cluster"] = dr.cluster;
                e["initial_loss"] = dr.loss_history.front();
                e["final_loss"] = dr.loss_history.back();
                e["epochs"] = dr.loss_history.size() - 1;
                e["rmse"] = dr.reproduction.rmse;
                e["cosine_err"] = dr.reproduction.cosine_err;
                e["dtwd"] = dr.reproduction.dtwd;
                d.push_back(std::move(e));
            }
            j["diffeo"] = std::move(d);
        }
        if (!report.warnings.empty()) j["warnings"] = report.warnings;
        emit("metrics.json", j.dump(2) + "\n");
    }

    for (const auto& dr : report.diffeo)
        emit("diffeo_" + std::to_string(dr.cluster) + ".json", dr.model_json + "\n");

    nlohmann::json m;
    m["partial"] = partial;
    m["files"] = nlohmann::json::array();
    for (const auto& entry : manifest)
        m["files"].push_back(
            {{"name", entry.name}, {"hash", entry.hash}, {"bytes", entry.bytes}});
    write_file((fs::path(dir) / "manifest.json").string(), m.dump(2) + "\n");
    return manifest;
}

void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value) {
    auto as_double = [&value, &key] {
        try {
            return std::stod(value);
        } catch (const std::exception&) {
            throw std::runtime_error("config: bad numeric value for " + key);
        }
    };
    auto as_int = [&value, &key] {
        try {
            return std::stoi(value);
        } catch (const std::exception&) {
            throw std::runtime_error("config: bad integer value for " + key);
        }
    };
    auto as_bool = [&value, &key] {
        if (value == "true" || value == "1") return true;
        if (value == "false" || value == "0") return false;
        throw std::runtime_error("config: bad boolean value for " + key);
    };
    if (key == "benchmark") config.benchmark = value;
    else if (key == "input") config.input_csv = value;
    else if (key == "freq") config.frequency = as_double();
    else if (key == "subsample") config.subsample = as_int();
    else if (key == "out") config.out_dir = value;
    else if (key == "seed") config.seed = std::stoull(value);
    else if (key == "sigma") config.sigma = as_double();
    else if (key == "theta_r") config.theta_r = as_double();
    else if (key == "sigma_f") config.sigma_f = as_double();
    else if (key == "epsilon") config.epsilon = as_double();
    else if (key == "embed_dim_cap") config.embed_dim_cap = as_int();
    else if (key == "baselines") config.run_baselines = as_bool();
    else if (key == "diffeo") config.run_diffeo = as_bool();
    else if (key == "diffeo_layers") config.diffeo_layers = as_int();
    else if (key == "diffeo_features") config.diffeo_features = as_int();
    else if (key == "diffeo_epochs") config.diffeo_epochs = as_int();
    else if (key == "diffeo_learning_rate") config.diffeo_learning_rate = as_double();
    else if (key == "truth") config.truth_json = value;
    else throw std::runtime_error("config: unknown key '" + key + "'");
}

PipelineConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    PipelineConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto trim = [](std::string s) {
            const auto from = s.find_first_not_of(" \t\r");
            if (from == std::string::npos) return std::string{};
            const auto to = s.find_last_not_of(" \t\r");
            return s.substr(from, to - from + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: missing '=' at line " + std::to_string(line_no));
        apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

}  // namespace attractorscope

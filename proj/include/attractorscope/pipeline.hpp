#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "attractorscope/attractor.hpp"
#include "attractorscope/diffeo.hpp"
#include "attractorscope/dynamics.hpp"
#include "attractorscope/evalbench.hpp"
#include "attractorscope/spectral.hpp"

namespace attractorscope {

struct PipelineConfig {
    std::string benchmark;  // heart | pendulum | duffing, or empty
    std::string input_csv;  // used when benchmark is empty
    double frequency = 0.0;  // required with input_csv
    int subsample = 0;       // 0 = preset default (1 for CSV input)
    std::string out_dir;
    std::uint64_t seed = 0;

    // kernel overrides; non-positive values mean "derive from the data"
    double sigma = 0.0;
    double theta_r = 0.35;
    double sigma_f = -1.0;
    double epsilon = 0.5;

    int embed_dim_cap = 8;

    bool run_baselines = false;
    bool run_diffeo = false;
    int diffeo_layers = 10;
    int diffeo_features = 200;
    int diffeo_epochs = 1000;
    double diffeo_learning_rate = 0.5;

    std::string truth_json;  // optional sidecar with attractors and/or labels
};

struct ClusterReport {
    int cluster = -1;
    std::vector<int> eigenvectors;
    Eigen::VectorXd attractor_embedding;
    Eigen::VectorXd attractor_original;
    double intersection_spread = 0.0;
    bool fallback_used = false;
    double error = std::numeric_limits<double>::quiet_NaN();
};

struct BaselineSummary {
    std::string method;
    double mean_accuracy = std::numeric_limits<double>::quiet_NaN();
    int runs = 0;
};

struct DiffeoReport {
    int cluster = -1;
    std::vector<double> loss_history;
    std::string model_json;
    FieldMetrics reproduction;
};

struct PipelineReport {
    int Q = 0;
    std::vector<int> labels;
    Eigen::VectorXd spectrum;
    std::vector<Eigen::MatrixXd> embeddings;  // per cluster, all points x dim
    std::vector<ClusterReport> clusters;
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    std::vector<BaselineSummary> baselines;
    std::vector<DiffeoReport> diffeo;
    std::vector<std::string> warnings;
};

/// Error in a named pipeline stage; carries whatever the run produced so far
/// so partial artifacts can still be flushed.
struct StageError : std::runtime_error {
    StageError(const std::string& module_in, const std::string& message,
               PipelineReport partial_in)
        : std::runtime_error(module_in + ": " + message),
          module(module_in),
          partial(std::move(partial_in)) {}
    std::string module;
    PipelineReport partial;
};

/// Fixed initial conditions, horizon and desk-scale subsampling for the named
/// benchmark.
struct BenchmarkPreset {
    BenchmarkSystem system;
    std::vector<Eigen::Vector2d> initial_conditions;
    double duration = 0.0;
    double frequency = 0.0;
    int subsample = 1;
};

BenchmarkPreset benchmark_preset(const std::string& name);
TrajectorySet benchmark_dataset(const std::string& name, int subsample_override = 0);

/// kernel -> graph -> spectral -> clustering -> attractors, plus the optional
/// baseline and diffeomorphism stages.
PipelineReport run_pipeline(const PipelineConfig& config);

/// Trajectory CSV: header traj_id,x0..x{d-1},v0..v{d-1}; rows ordered by
/// (traj_id, time); LF line endings.
TrajectorySet ingest_csv(const std::string& path, double sampling_frequency);
void write_trajectory_csv(const TrajectorySet& data, const std::string& path);

struct ManifestEntry {
    std::string name;
    std::string hash;
    std::uint64_t bytes = 0;
};

/// Writes spectrum.csv, labels.csv, embedding_<q>.csv, attractors.json,
/// metrics.json plus manifest.json and returns the manifest.
std::vector<ManifestEntry> export_results(const PipelineReport& report, const std::string& dir,
                                          bool partial = false);

/// Flat `key = value` config text with # comments; unknown keys are rejected.
PipelineConfig parse_config_file(const std::string& path);
void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value);

}  // namespace attractorscope

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "attractorscope/dynamics.hpp"

namespace attractorscope {

struct ClusteringResult {
    std::vector<int> labels;
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    std::string method;
    int iterations = 0;
    // per-iteration objective: kernel k-means distortion (non-increasing) or
    // GMM log-likelihood (non-decreasing)
    std::vector<double> objective_history;
};

/// Best label-permutation point accuracy against ground truth.
double permutation_accuracy(const std::vector<int>& labels, const std::vector<int>& truth);

/// Ground-truth labels by nearest attractor to each trajectory's terminal
/// sample (every point inherits its trajectory's label).
std::vector<int> labels_from_attractors(const TrajectorySet& data,
                                        const std::vector<Eigen::VectorXd>& attractors);

/// Kernel k-means with an RBF kernel over concatenated (position, velocity)
/// features. Empty clusters are re-seeded from the farthest point.
ClusteringResult kernel_kmeans(const TrajectorySet& data, int Q, double sigma,
                               std::uint64_t seed, const std::vector<int>* truth = nullptr);

/// Full-covariance Gaussian mixture EM on (position, velocity) features with
/// k-means++-style seeding; hard labels by max responsibility.
ClusteringResult gmm_em(const TrajectorySet& data, int Q, std::uint64_t seed,
                        const std::vector<int>* truth = nullptr);

/// Mutual k-NN graph, symmetric normalized Laplacian, row-normalized
/// eigenvectors, k-means with fixed seeds.
ClusteringResult spectral_baseline(const TrajectorySet& data, int Q, int k_neighbors,
                                   const std::vector<int>* truth = nullptr);

/// Quasi-zero-velocity heuristic: positions slower than fraction * mean
/// speed, single-linkage merged within the consecutive-sample radius.
std::vector<Eigen::VectorXd> zero_velocity_candidates(const TrajectorySet& data,
                                                      double fraction);

struct FieldMetrics {
    double rmse = 0.0;
    double cosine_err = 0.0;
    double dtwd = 0.0;
};

/// Reproduction metrics of a velocity field against reference trajectories:
/// mean speed error, mean |1 - cos| alignment error (near-zero velocities
/// skipped), and the average DTW distance between each reference path and the
/// path integrated from its start.
FieldMetrics metrics(const std::vector<Trajectory>& reference,
                     const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& field);

/// Dynamic time warping distance with Euclidean point cost, unconstrained.
double dtw_distance(const std::vector<Eigen::VectorXd>& a,
                    const std::vector<Eigen::VectorXd>& b);

}  // namespace attractorscope

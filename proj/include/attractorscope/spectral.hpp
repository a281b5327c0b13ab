#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "attractorscope/dsgraph.hpp"

namespace attractorscope {

/// Full symmetric eigendecomposition, eigenvalues ascending, eigenvector i in
/// column i. Deterministic: fixed algorithm, and each eigenvector's
/// largest-magnitude entry is made positive.
struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;

    int size() const { return static_cast<int>(eigenvalues.size()); }
};

/// Cluster labels plus the per-cluster eigenvector assignment and embeddings.
/// embeddings[q] has one row per data point (off-cluster rows collapse to
/// zero) and one column per assigned eigenvector.
struct SubdynamicsPartition {
    std::vector<int> labels;
    int Q = 0;
    std::vector<std::vector<int>> assigned_eigvecs;
    std::vector<Eigen::MatrixXd> embeddings;
    std::vector<std::string> warnings;
};

/// Householder tridiagonalization followed by implicit-shift QL. Input must be
/// symmetric to 1e-12; convergence failure reports the offending off-diagonal.
SpectralDecomposition eigendecompose(const LaplacianMatrix& laplacian);
SpectralDecomposition eigendecompose(const Eigen::MatrixXd& symmetric);

/// Number of eigenvalues below 1e-8 * max(lambda_max, 1): the zero-eigenvalue
/// multiplicity, equal to the number of sub-dynamics.
int count_subdynamics(const SpectralDecomposition& dec);

/// Labels each point by the dominant entry across the Q kernel eigenvectors,
/// after rotating the kernel basis onto component indicators. The graph
/// provides exact reachability groups; the overload without it clusters the
/// kernel-block rows instead. Labels are renumbered by smallest member index.
std::vector<int> label_points(const SpectralDecomposition& dec, int Q,
                              const WeightedGraph& graph);
std::vector<int> label_points(const SpectralDecomposition& dec, int Q);

/// Indices of the non-zero-eigenvalue components before the largest relative
/// gap in the spectrum, searched within the first Q*k_max entries. Falls back
/// to the 2Q smallest non-zero components when no usable gap exists.
std::vector<int> relevant_components(const SpectralDecomposition& dec, int Q, int k_max = 8);

/// Assigns every relevant eigenvector to the cluster carrying most of its
/// mass and builds the per-cluster embeddings.
SubdynamicsPartition assign_and_embed(const SpectralDecomposition& dec,
                                      const std::vector<int>& labels,
                                      const std::vector<int>& relevant);

}  // namespace attractorscope

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "attractorscope/dynamics.hpp"

namespace attractorscope {

/// Kernel weight matrix plus the thresholded binary adjacency derived from it.
/// Data-built graphs also carry the node payloads and (trajectory, position)
/// index of every node; synthetic graphs carry path_index only.
struct WeightedGraph {
    Eigen::MatrixXd weights;                      // symmetric, unit diagonal
    Eigen::MatrixXi adjacency;                    // symmetric 0/1, zero diagonal
    std::vector<StateSample> node_payloads;       // optional
    std::vector<std::pair<int, int>> path_index;  // optional (trajectory id, position)
    std::vector<std::string> warnings;

    int size() const { return static_cast<int>(adjacency.rows()); }
    int degree(int i) const { return adjacency.row(i).sum(); }
};

/// L = D - A on the binary adjacency. Rows sum to zero exactly.
struct LaplacianMatrix {
    Eigen::MatrixXd entries;
    Eigen::VectorXi degree;

    int size() const { return static_cast<int>(entries.rows()); }
};

LaplacianMatrix laplacian(const WeightedGraph& g);

/// Partition of node indices by adjacency reachability, ordered by smallest
/// contained index.
std::vector<std::vector<int>> connected_components(const WeightedGraph& g);

/// K path graphs of N nodes each, terminal nodes joined in a K-cycle
/// (a single edge for K = 2, nothing for K = 1). Node numbering runs path by
/// path, so path k occupies nodes (k-1)N .. kN-1.
WeightedGraph build_theory_graph(int K, int N);

/// Disjoint union of Q theory graphs.
WeightedGraph build_multi_theory_graph(int Q, int K, int N);

/// Block-circulant decomposition of the theory-graph Laplacian,
/// L = 2I - J with J = circ(B0, B1, 0, ..., 0, B1).
struct CirculantBlocks {
    Eigen::MatrixXd J;                // KN x KN
    Eigen::MatrixXd B0;               // N x N tridiagonal
    Eigen::MatrixXd B1;               // N x N, single corner entry
    std::vector<Eigen::MatrixXd> H;   // H_j = B0 + 2 cos(2 pi j / K) B1, j = 0..K-1
};

/// Requires K >= 3, N >= 2. For N >= 3 the identity L(theory graph) = 2I - J
/// is asserted entrywise against build_theory_graph.
CirculantBlocks circulant_blocks(int K, int N);

}  // namespace attractorscope

#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace attractorscope {

/// Parameters of the path-graph eigenvector recursion.
struct RecursionSpec {
    double lambda = 0.0;
    double u1 = 1.0;
    int length = 3;  // p_k >= 3
};

/// u_2 = (1 - lambda) u_1, u_n = (2 - lambda) u_{n-1} - u_{n-2}.
Eigen::VectorXd recursion_sequence(const RecursionSpec& spec);

/// Closed form of the recursion with theta = acos(1 - lambda/2):
/// u_n = u_1 [cos((n-1) theta) - (lambda/2) sin((n-1) theta) / sin(theta)].
/// Requires lambda in (0, 4).
double chebyshev_closed_form(int n, double lambda, double u1);

/// Largest eigenvalue preserving monotone path coordinates:
/// 2 [1 - cos(pi / (p_k - 1/2))].
double monotonicity_bound(int p_k);

/// True when the sequence is strictly increasing or strictly decreasing.
bool is_strictly_monotone(const Eigen::VectorXd& seq);

struct MultiplicityCensus {
    int pairs = 0;
    Eigen::VectorXd spectrum;  // ascending
};

/// Counts eigenvalue pairs of the (K, N) theory-graph Laplacian that agree
/// within 1e-6 * lambda_max.
MultiplicityCensus multiplicity_census(int K, int N);

struct EigBoundCheck {
    double lower = 0.0;       // 1 - 2 cos(pi / N), strict
    double upper = 0.0;       // 2 (1 - cos(pi / (N - 1/2))), weak
    double lambda_min2 = 0.0; // smallest eigenvalue with algebraic multiplicity 2
    bool ok = false;
};

/// Locates the smallest multiplicity-2 eigenvalue of the (K, N) theory graph
/// and checks it against the stated bounds. Throws if no repeated eigenvalue
/// exists.
EigBoundCheck eig_bound_check(int K, int N);

/// Max interior deviation of |r(u_{n+1}) - r(u_n) + lambda u_n| over the given
/// paths, where r(u_n) = u_n - u_{n-1}. Each slice is (first index, length).
double rate_of_change_check(const Eigen::VectorXd& u, double lambda,
                            const std::vector<std::pair<int, int>>& path_slices);

struct LinearityReport {
    double max_residual = 0.0;         // perpendicular deviation / segment length
    double max_slope_deviation = 0.0;  // vs the first-coordinate ratio
};

/// Fits the line through the first and last point of each path (rows of a
/// p x 2 coordinate matrix) and reports the worst relative perpendicular
/// deviation; the slope is checked against y_1/x_1 where well-defined.
LinearityReport linearity_check(const std::vector<Eigen::MatrixXd>& paths);

/// Balanced (first, length) slices of a K-path, N-node theory graph.
std::vector<std::pair<int, int>> theory_path_slices(int K, int N);

}  // namespace attractorscope

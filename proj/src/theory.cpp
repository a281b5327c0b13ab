#include "attractorscope/theory.hpp"

#include <cmath>
#include <stdexcept>

#include "attractorscope/dsgraph.hpp"
#include "attractorscope/spectral.hpp"

namespace attractorscope {

Eigen::VectorXd recursion_sequence(const RecursionSpec& spec) {
    if (spec.length < 3) throw std::invalid_argument("recursion_sequence: length must be >= 3");
    Eigen::VectorXd u(spec.length);
    u[0] = spec.u1;
    u[1] = (1.0 - spec.lambda) * spec.u1;
    for (int n = 2; n < spec.length; ++n)
        u[n] = (2.0 - spec.lambda) * u[n - 1] - u[n - 2];
    return u;
}

double chebyshev_closed_form(int n, double lambda, double u1) {
    if (n < 1) throw std::invalid_argument("chebyshev_closed_form: n must be >= 1");
    if (!(lambda > 0.0 && lambda < 4.0))
        throw std::invalid_argument("chebyshev_closed_form: lambda must lie in (0, 4)");
    const double theta = std::acos(1.0 - lambda / 2.0);
    const double arg = (n - 1) * theta;
    return u1 * (std::cos(arg) - (lambda / 2.0) * std::sin(arg) / std::sin(theta));
}

double monotonicity_bound(int p_k) {
    if (p_k < 3) throw std::invalid_argument("monotonicity_bound: p_k must be >= 3");
    return 2.0 * (1.0 - std::cos(M_PI / (p_k - 0.5)));
}

bool is_strictly_monotone(const Eigen::VectorXd& seq) {
    if (seq.size() < 2) return true;
    bool increasing = true, decreasing = true;
    for (int i = 1; i < seq.size(); ++i) {
        if (!(seq[i] > seq[i - 1])) increasing = false;
        if (!(seq[i] < seq[i - 1])) decreasing = false;
    }
    return increasing || decreasing;
}

MultiplicityCensus multiplicity_census(int K, int N) {
    const auto dec = eigendecompose(laplacian(build_theory_graph(K, N)));
    MultiplicityCensus census;
    census.spectrum = dec.eigenvalues;
    const double tol = 1e-6 * std::max(dec.eigenvalues[dec.size() - 1], 1.0);
    int i = 0;
    while (i < dec.size()) {
        int run = 1;
        while (i + run < dec.size() &&
               dec.eigenvalues[i + run] - dec.eigenvalues[i + run - 1] <= tol)
            ++run;
        census.pairs += run / 2;
        i += run;
    }
    return census;
}

EigBoundCheck eig_bound_check(int K, int N) {
    const auto dec = eigendecompose(laplacian(build_theory_graph(K, N)));
    const double tol = 1e-6 * std::max(dec.eigenvalues[dec.size() - 1], 1.0);
    EigBoundCheck check;
    check.lower = 1.0 - 2.0 * std::cos(M_PI / N);
    check.upper = 2.0 * (1.0 - std::cos(M_PI / (N - 0.5)));
    double lambda_min2 = -1.0;
    for (int i = 0; i + 1 < dec.size(); ++i) {
        if (dec.eigenvalues[i + 1] - dec.eigenvalues[i] <= tol) {
            lambda_min2 = dec.eigenvalues[i];
            break;
        }
    }
    if (lambda_min2 < 0.0)
        throw std::runtime_error("eig_bound_check: no multiplicity-2 eigenvalue found");
    check.lambda_min2 = lambda_min2;
    check.ok = check.lower < lambda_min2 && lambda_min2 <= check.upper + 1e-12;
    return check;
}

double rate_of_change_check(const Eigen::VectorXd& u, double lambda,
                            const std::vector<std::pair<int, int>>& path_slices) {
    double worst = 0.0;
    for (const auto& [first, length] : path_slices) {
        if (first < 0 || first + length > u.size())
            throw std::invalid_argument("rate_of_change_check: slice out of range");
        // r(u_{n+1}) = r(u_n) - lambda u_n on interior nodes
        for (int n = 1; n + 1 < length; ++n) {
            const double r_next = u[first + n + 1] - u[first + n];
            const double r_cur = u[first + n] - u[first + n - 1];
            worst = std::max(worst, std::abs(r_next - r_cur + lambda * u[first + n]));
        }
    }
    return worst;
}

LinearityReport linearity_check(const std::vector<Eigen::MatrixXd>& paths) {
    LinearityReport report;
    for (const auto& coords : paths) {
        const int p = static_cast<int>(coords.rows());
        if (p < 2 || coords.cols() != 2)
            throw std::invalid_argument("linearity_check: each path needs >= 2 rows of 2-D points");
        const Eigen::Vector2d a = coords.row(0);
        const Eigen::Vector2d b = coords.row(p - 1);
        const Eigen::Vector2d seg = b - a;
        const double len = seg.norm();
        if (len < 1e-15) throw std::invalid_argument("linearity_check: degenerate path");
        const Eigen::Vector2d dir = seg / len;
        for (int i = 0; i < p; ++i) {
            const Eigen::Vector2d rel = Eigen::Vector2d(coords.row(i)) - a;
            const double perp = std::abs(rel.x() * dir.y() - rel.y() * dir.x());
            report.max_residual = std::max(report.max_residual, perp / len);
        }
        if (std::abs(coords(0, 0)) > 1e-9 && std::abs(seg.x()) > 1e-15) {
            const double slope_fit = seg.y() / seg.x();
            const double slope_ref = coords(0, 1) / coords(0, 0);
            report.max_slope_deviation =
                std::max(report.max_slope_deviation, std::abs(slope_fit - slope_ref));
        }
    }
    return report;
}

std::vector<std::pair<int, int>> theory_path_slices(int K, int N) {
    std::vector<std::pair<int, int>> slices;
    slices.reserve(K);
    for (int k = 0; k < K; ++k) slices.emplace_back(k * N, N);
    return slices;
}

}  // namespace attractorscope

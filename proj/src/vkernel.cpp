#include "attractorscope/vkernel.hpp"

#include <cmath>
#include <stdexcept>

#include "attractorscope/parallel.hpp"

namespace attractorscope {

namespace {
constexpr double kTiny = 1e-300;
}

void KernelParams::validate() const {
    if (sigma <= 0) throw std::invalid_argument("kernel params: sigma must be positive");
    if (!(theta_r > 0 && theta_r < M_PI / 2))
        throw std::invalid_argument("kernel params: theta_r must lie in (0, pi/2)");
    if (sigma_f < 0) throw std::invalid_argument("kernel params: sigma_f must be >= 0");
    if (!(epsilon > 0 && epsilon < 1))
        throw std::invalid_argument("kernel params: epsilon must lie in (0, 1)");
}

double cosine_alignment(const StateSample& xi, const StateSample& xj, double sigma_f) {
    const double speed_product = xi.velocity.norm() * xj.velocity.norm();
    double filter;
    if (sigma_f > 0) {
        filter = std::exp(-speed_product * speed_product / (2.0 * sigma_f * sigma_f));
    } else {
        filter = speed_product == 0.0 ? 1.0 : 0.0;
    }
    const Eigen::VectorXd delta = xj.position - xi.position;
    const double dist = delta.norm();
    const double speed = xi.velocity.norm();
    double cosine = 0.0;
    if (dist > kTiny && speed > kTiny) cosine = delta.dot(xi.velocity) / (dist * speed);
    // alignment magnitude: anti-alignment is as good as alignment (the
    // backward-looking term of a consecutive pair is always -1), and the
    // low-speed filter lifts the magnitude toward 1 instead of cancelling
    // against negative cosines
    return std::min(1.0, filter + std::abs(cosine));
}

double gamma_map(double g, const KernelParams& params) {
    const double span = 1.0 - std::cos(params.theta_r);
    const double value = 3.0 * params.sigma * (1.0 - g) / span;
    return std::clamp(value, 0.0, 3.0 * params.sigma);
}

double kernel(const StateSample& xi, const StateSample& xj, const KernelParams& params) {
    const double dist2 = (xi.position - xj.position).squaredNorm();
    if (dist2 <= kTiny) return 1.0;  // coincident samples are maximally similar
    const double gij = gamma_map(cosine_alignment(xi, xj, params.sigma_f), params);
    const double gji = gamma_map(cosine_alignment(xj, xi, params.sigma_f), params);
    // summing the penalties in magnitude order keeps k(i,j) == k(j,i) bitwise
    const double lo = std::min(gij * gij, gji * gji);
    const double hi = std::max(gij * gij, gji * gji);
    return std::exp(-(dist2 + hi + lo) / (2.0 * params.sigma * params.sigma));
}

WeightedGraph build_adjacency(const TrajectorySet& data, const KernelParams& params) {
    params.validate();
    const auto samples = data.flatten();
    const int m = static_cast<int>(samples.size());
    if (m < 2) throw std::invalid_argument("build_adjacency: need at least 2 samples");

    WeightedGraph g;
    g.weights = Eigen::MatrixXd::Zero(m, m);
    g.adjacency = Eigen::MatrixXi::Zero(m, m);
    parallel_for(0, m, [&](int i) {
        g.weights(i, i) = 1.0;
        for (int j = i + 1; j < m; ++j) {
            const double w = kernel(*samples[i], *samples[j], params);
            g.weights(i, j) = w;
            g.weights(j, i) = w;
            if (w >= params.epsilon) {
                g.adjacency(i, j) = 1;
                g.adjacency(j, i) = 1;
            }
        }
    });

    for (int i = 0; i < m; ++i)
        if (g.degree(i) == 0)
            g.warnings.push_back("node " + std::to_string(i) +
                                 " is isolated (degree 0); it forms its own component");

    g.node_payloads.reserve(m);
    for (const auto* s : samples) g.node_payloads.push_back(*s);
    g.path_index = data.sample_index();
    return g;
}

double default_sigma(const TrajectorySet& data) {
    if (data.trajectories.empty()) throw std::invalid_argument("default_sigma: empty dataset");
    if (data.sampling_frequency <= 0)
        throw std::invalid_argument("default_sigma: sampling frequency must be positive");
    double max_speed = 0.0;
    for (const auto& t : data.trajectories)
        for (const auto& s : t.samples) max_speed = std::max(max_speed, s.velocity.norm());
    if (max_speed == 0.0)
        throw std::runtime_error("default_sigma: all velocities are zero, bandwidth undefined");
    return max_speed / data.sampling_frequency;
}

KernelParams default_params(const TrajectorySet& data) {
    KernelParams p;
    p.sigma = default_sigma(data);
    double speed_sum = 0.0;
    int count = 0;
    for (const auto& t : data.trajectories)
        for (const auto& s : t.samples) {
            speed_sum += s.velocity.norm();
            ++count;
        }
    p.sigma_f = 1e-3 * (count > 0 ? speed_sum / count : 0.0);
    return p;
}

}  // namespace attractorscope

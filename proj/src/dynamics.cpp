#include "attractorscope/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace attractorscope {

int TrajectorySet::total_samples() const {
    int m = 0;
    for (const auto& t : trajectories) m += t.size();
    return m;
}

std::vector<const StateSample*> TrajectorySet::flatten() const {
    std::vector<const StateSample*> out;
    out.reserve(total_samples());
    for (const auto& t : trajectories)
        for (const auto& s : t.samples) out.push_back(&s);
    return out;
}

std::vector<std::pair<int, int>> TrajectorySet::sample_index() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(total_samples());
    for (int q = 0; q < static_cast<int>(trajectories.size()); ++q)
        for (int i = 0; i < trajectories[q].size(); ++i) out.emplace_back(q, i);
    return out;
}

TrajectorySet TrajectorySet::subsample(int factor) const {
    if (factor < 1) throw std::invalid_argument("subsample: factor must be >= 1");
    if (factor == 1) return *this;
    TrajectorySet out;
    out.sampling_frequency = sampling_frequency / factor;
    out.trajectories.reserve(trajectories.size());
    for (const auto& t : trajectories) {
        Trajectory s;
        s.dt = t.dt * factor;
        for (int i = 0; i < t.size(); i += factor) s.samples.push_back(t.samples[i]);
        out.trajectories.push_back(std::move(s));
    }
    return out;
}

BenchmarkSystem BenchmarkSystem::heart() { return {SystemKind::Heart}; }

BenchmarkSystem BenchmarkSystem::pendulum(double length, double gravity, double friction) {
    if (length <= 0 || gravity <= 0)
        throw std::invalid_argument("pendulum: length and gravity must be positive");
    return {SystemKind::Pendulum, length, gravity, friction};
}

BenchmarkSystem BenchmarkSystem::duffing(double delta, double alpha, double beta) {
    // two stable equilibria require a double-well potential
    if (!(alpha < 0) || !(beta > 0))
        throw std::invalid_argument("duffing: need alpha < 0 and beta > 0");
    return {SystemKind::Duffing, delta, alpha, beta};
}

BenchmarkSystem BenchmarkSystem::from_name(const std::string& name) {
    if (name == "heart") return heart();
    if (name == "pendulum") return pendulum();
    if (name == "duffing") return duffing();
    throw std::invalid_argument("unknown benchmark system: " + name);
}

std::string BenchmarkSystem::name() const {
    switch (kind) {
        case SystemKind::Heart: return "heart";
        case SystemKind::Pendulum: return "pendulum";
        case SystemKind::Duffing: return "duffing";
    }
    throw std::logic_error("unreachable");
}

std::vector<Eigen::Vector2d> BenchmarkSystem::attractors() const {
    switch (kind) {
        case SystemKind::Heart:
            return {Eigen::Vector2d(-1.0, 2.0), Eigen::Vector2d(1.0, 2.0)};
        case SystemKind::Pendulum:
            return {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(2.0 * M_PI, 0.0)};
        case SystemKind::Duffing: {
            const double r = std::sqrt(-p1 / p2);
            return {Eigen::Vector2d(-r, 0.0), Eigen::Vector2d(r, 0.0)};
        }
    }
    throw std::logic_error("unreachable");
}

Eigen::Vector2d eval_field(const BenchmarkSystem& system, const Eigen::Vector2d& x) {
    if (!x.allFinite()) throw std::invalid_argument("eval_field: non-finite input state");
    switch (system.kind) {
        case SystemKind::Heart:
            return {2.0 * x[0] - x[0] * x[1], 2.0 * x[0] * x[0] - x[1]};
        case SystemKind::Pendulum: {
            const double l = system.p0, g = system.p1, k = system.p2;
            return {x[1], -(l / g) * std::sin(x[0]) - k * l * x[1]};
        }
        case SystemKind::Duffing: {
            const double delta = system.p0, alpha = system.p1, beta = system.p2;
            return {x[1], -delta * x[1] - alpha * x[0] - beta * x[0] * x[0] * x[0]};
        }
    }
    throw std::logic_error("unreachable");
}

namespace {

constexpr double kOverflowGuard = 1e9;

Eigen::VectorXd rk4_step(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& x, double h) {
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory integrate_field(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& field,
                           const Eigen::VectorXd& x0, double duration, double frequency,
                           double max_internal_step) {
    if (duration <= 0) throw std::invalid_argument("integrate: duration must be positive");
    if (frequency <= 0) throw std::invalid_argument("integrate: frequency must be positive");
    const double record_dt = 1.0 / frequency;
    // truncate, never resample: only whole recording intervals are kept
    const int intervals = static_cast<int>(std::floor(duration * frequency + 1e-9));
    const int substeps =
        std::max(1, static_cast<int>(std::ceil(record_dt / max_internal_step - 1e-12)));
    const double h = record_dt / substeps;

    Trajectory traj;
    traj.dt = record_dt;
    traj.samples.reserve(intervals + 1);
    Eigen::VectorXd x = x0;
    traj.samples.push_back({x, field(x)});
    for (int i = 0; i < intervals; ++i) {
        for (int s = 0; s < substeps; ++s) x = rk4_step(field, x, h);
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kOverflowGuard)
            throw std::runtime_error("integrate: trajectory diverged at recorded step " +
                                     std::to_string(i + 1));
        traj.samples.push_back({x, field(x)});
    }
    return traj;
}

Trajectory integrate(const BenchmarkSystem& system, const Eigen::Vector2d& x0, double duration,
                     double frequency) {
    auto f = [&system](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return eval_field(system, Eigen::Vector2d(x));
    };
    return integrate_field(f, x0, duration, frequency);
}

TrajectorySet make_dataset(const BenchmarkSystem& system,
                           const std::vector<Eigen::Vector2d>& initial_conditions,
                           double duration, double frequency) {
    if (initial_conditions.empty())
        throw std::invalid_argument("make_dataset: need at least one initial condition");
    TrajectorySet set;
    set.sampling_frequency = frequency;
    set.trajectories.reserve(initial_conditions.size());
    for (const auto& x0 : initial_conditions)
        set.trajectories.push_back(integrate(system, x0, duration, frequency));
    return set;
}

}  // namespace attractorscope

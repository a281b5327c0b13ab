#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace attractorscope {

/// One position-velocity observation of the system state.
struct StateSample {
    Eigen::VectorXd position;
    Eigen::VectorXd velocity;

    int dim() const { return static_cast<int>(position.size()); }
};

/// An ordered run of samples recorded at a fixed interval dt.
struct Trajectory {
    std::vector<StateSample> samples;
    double dt = 0.0;

    int dim() const { return samples.empty() ? 0 : samples.front().dim(); }
    int size() const { return static_cast<int>(samples.size()); }
};

/// A batch of trajectories sharing one sampling frequency.
struct TrajectorySet {
    std::vector<Trajectory> trajectories;
    double sampling_frequency = 0.0;

    int dim() const { return trajectories.empty() ? 0 : trajectories.front().dim(); }
    int total_samples() const;
    /// All samples in trajectory order, then sample order.
    std::vector<const StateSample*> flatten() const;
    /// (trajectory id, position within trajectory) for each flattened index.
    std::vector<std::pair<int, int>> sample_index() const;
    /// Keep every `factor`-th sample of each trajectory (the first sample
    /// always survives). Frequency is divided accordingly.
    TrajectorySet subsample(int factor) const;
};

enum class SystemKind { Heart, Pendulum, Duffing };

/// A named 2-D benchmark vector field with its parameters.
struct BenchmarkSystem {
    SystemKind kind;
    // pendulum: length, gravity, friction; duffing: delta, alpha, beta
    double p0 = 0.0, p1 = 0.0, p2 = 0.0;

    static BenchmarkSystem heart();
    static BenchmarkSystem pendulum(double length = 1.0, double gravity = 9.81,
                                    double friction = 0.5);
    static BenchmarkSystem duffing(double delta = 0.3, double alpha = -1.2,
                                   double beta = 0.3);
    static BenchmarkSystem from_name(const std::string& name);

    std::string name() const;
    /// Documented stable equilibria of the field.
    std::vector<Eigen::Vector2d> attractors() const;
};

/// Right-hand side of the named system at x.
Eigen::Vector2d eval_field(const BenchmarkSystem& system, const Eigen::Vector2d& x);

/// Classical RK4 with a fixed internal step, recording every `record_dt`.
/// Stored velocities are field evaluations at the recorded positions.
/// Throws on divergence (any |entry| > 1e9), naming the step index.
Trajectory integrate(const BenchmarkSystem& system, const Eigen::Vector2d& x0,
                     double duration, double frequency);

/// Same integrator over an arbitrary field; used by reconstruction metrics.
Trajectory integrate_field(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& field,
                           const Eigen::VectorXd& x0, double duration, double frequency,
                           double max_internal_step = 1e-3);

/// One trajectory per initial condition.
TrajectorySet make_dataset(const BenchmarkSystem& system,
                           const std::vector<Eigen::Vector2d>& initial_conditions,
                           double duration, double frequency);

}  // namespace attractorscope

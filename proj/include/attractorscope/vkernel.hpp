#pragma once

#include "attractorscope/dsgraph.hpp"
#include "attractorscope/dynamics.hpp"

namespace attractorscope {

/// Hyperparameters of the velocity-augmented kernel.
struct KernelParams {
    double sigma = 0.0;     // locality bandwidth (state units)
    double theta_r = 0.35;  // reference angle, 0 < theta_r < pi/2
    double sigma_f = 0.0;   // speed-filter bandwidth, >= 0
    double epsilon = 0.5;   // adjacency threshold in (0, 1)

    void validate() const;
};

/// Alignment magnitude between the displacement x_j - x_i and the velocity at
/// i, lifted by a low-speed filter that releases the directionality penalty
/// near attractors. Lies in [0, 1]; 1 means no penalty.
double cosine_alignment(const StateSample& xi, const StateSample& xj, double sigma_f);

/// Affine map sending alignment 1 -> 0 and cos(theta_r) -> 3 sigma, clamped to
/// [0, 3 sigma].
double gamma_map(double g, const KernelParams& params);

/// exp(-(|xi-xj|^2 + gamma(g_ij)^2 + gamma(g_ji)^2) / (2 sigma^2)).
/// Symmetric in its arguments; coincident positions evaluate to 1.
double kernel(const StateSample& xi, const StateSample& xj, const KernelParams& params);

/// Dense kernel matrix with a unit diagonal, thresholded into the binary
/// adjacency A_ij = [W_ij >= epsilon], A_ii = 0. Isolated nodes produce a
/// warning on the returned graph.
WeightedGraph build_adjacency(const TrajectorySet& data, const KernelParams& params);

/// d_max = max_i |v_i| / f_sampling, the largest consecutive-sample distance.
double default_sigma(const TrajectorySet& data);

/// sigma from default_sigma, sigma_f at 1e-3 of the mean speed, the
/// documented theta_r / epsilon defaults.
KernelParams default_params(const TrajectorySet& data);

}  // namespace attractorscope

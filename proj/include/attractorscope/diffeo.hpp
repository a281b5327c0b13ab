#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "attractorscope/dynamics.hpp"
#include "attractorscope/spectral.hpp"

namespace attractorscope {

/// Random-Fourier-feature regressor phi(z) = sqrt(2/D_f) cos(W z + b) with
/// frozen W, b; only the output weights train.
struct FourierFeatureNet {
    Eigen::MatrixXd frequencies;  // D_f x in_dim, frozen
    Eigen::VectorXd phases;       // D_f, frozen
    Eigen::MatrixXd out_weights;  // out_dim x D_f
    double bandwidth = 1.0;

    Eigen::VectorXd features(const Eigen::VectorXd& z) const;
    Eigen::VectorXd evaluate(const Eigen::VectorXd& z) const;
    /// d(evaluate)/dz, out_dim x in_dim.
    Eigen::MatrixXd input_jacobian(const Eigen::VectorXd& z) const;
};

/// One affine coupling transform: the pass coordinates go through untouched,
/// the rest are scaled by exp(s(pass)) and shifted by t(pass).
struct CouplingLayer {
    std::vector<int> pass_mask;  // identity coordinates
    std::vector<int> act_mask;   // transformed coordinates
    FourierFeatureNet scale_net;
    FourierFeatureNet translate_net;
};

struct CouplingStack {
    std::vector<CouplingLayer> layers;
    int dim = 0;
};

/// Alternating-mask stack with zero output weights, so it starts as the
/// identity map.
CouplingStack make_coupling_stack(int dim, int n_layers, int n_features, double bandwidth,
                                  std::uint64_t seed);

Eigen::VectorXd forward(const CouplingStack& stack, const Eigen::VectorXd& x);
Eigen::VectorXd inverse(const CouplingStack& stack, const Eigen::VectorXd& u);
Eigen::MatrixXd jacobian(const CouplingStack& stack, const Eigen::VectorXd& x);

struct TrainConfig {
    double learning_rate = 0.5;
    int epochs = 1000;
    int batch = 0;  // <= 0 or >= N: full batch
};

struct TrainingPair {
    Eigen::VectorXd input;
    Eigen::VectorXd target;
};

double mse_loss(const CouplingStack& stack, const std::vector<TrainingPair>& pairs);

struct LayerGradient {
    Eigen::MatrixXd scale_weights;
    Eigen::MatrixXd translate_weights;
};

/// Analytic gradient of mse_loss with respect to every layer's output
/// weights.
std::vector<LayerGradient> mse_gradient(const CouplingStack& stack,
                                        const std::vector<TrainingPair>& pairs);

/// Gradient descent on the output weights with a halving backoff on any loss
/// increase; the returned history (initial loss first) is non-increasing.
std::vector<double> train(CouplingStack& stack, const std::vector<TrainingPair>& pairs,
                          const TrainConfig& config);

/// x_dot = J_psi^{-1} (psi(x*) - psi(x)), by linear solve.
Eigen::VectorXd reconstruct_field(const CouplingStack& stack, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& x_star);
/// Same field with psi(x*) precomputed; for integration loops.
Eigen::VectorXd reconstruct_field_at(const CouplingStack& stack, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& psi_star);

/// 0.5 |psi(x*) - psi(x)|^2.
double lyapunov_potential(const CouplingStack& stack, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& x_star);

/// "diffeo-v1" JSON document round-trip.
std::string save_coupling_stack(const CouplingStack& stack);
CouplingStack load_coupling_stack(const std::string& json_text);

/// Training data for one cluster: inputs are the member positions, targets
/// the member coordinates in the cluster's d smallest-eigenvalue
/// eigenvectors, affinely normalized per axis to zero mean and the position
/// axis variance. The embedding attractor u* receives the same map.
struct DiffeoTrainingSet {
    std::vector<TrainingPair> pairs;
    Eigen::VectorXd target_attractor;
};

DiffeoTrainingSet prepare_targets(const SubdynamicsPartition& partition, int cluster,
                                  const TrajectorySet& data, const Eigen::VectorXd& u_star);

}  // namespace attractorscope

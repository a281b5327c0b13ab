#include "attractorscope/diffeo.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace attractorscope {

Eigen::VectorXd FourierFeatureNet::features(const Eigen::VectorXd& z) const {
    const double norm = std::sqrt(2.0 / static_cast<double>(frequencies.rows()));
    return (norm * ((frequencies * z + phases).array().cos())).matrix();
}

Eigen::VectorXd FourierFeatureNet::evaluate(const Eigen::VectorXd& z) const {
    return out_weights * features(z);
}

Eigen::MatrixXd FourierFeatureNet::input_jacobian(const Eigen::VectorXd& z) const {
    const double norm = std::sqrt(2.0 / static_cast<double>(frequencies.rows()));
    const Eigen::ArrayXd sines = -norm * (frequencies * z + phases).array().sin();
    return out_weights * sines.matrix().asDiagonal() * frequencies;
}

namespace {

FourierFeatureNet make_net(int in_dim, int out_dim, int n_features, double bandwidth,
                           std::mt19937_64& rng) {
    if (bandwidth <= 0) throw std::invalid_argument("fourier net: bandwidth must be positive");
    FourierFeatureNet net;
    net.bandwidth = bandwidth;
    net.frequencies.resize(n_features, in_dim);
    net.phases.resize(n_features);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * M_PI);
    for (int r = 0; r < n_features; ++r)
        for (int c = 0; c < in_dim; ++c) net.frequencies(r, c) = gauss(rng) / bandwidth;
    for (int r = 0; r < n_features; ++r) net.phases[r] = uniform(rng);
    net.out_weights = Eigen::MatrixXd::Zero(out_dim, n_features);
    return net;
}

Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<int>& idx) {
    Eigen::VectorXd out(static_cast<int>(idx.size()));
    for (int i = 0; i < out.size(); ++i) out[i] = x[idx[i]];
    return out;
}

}  // namespace

CouplingStack make_coupling_stack(int dim, int n_layers, int n_features, double bandwidth,
                                  std::uint64_t seed) {
    if (dim < 2) throw std::invalid_argument("coupling stack: dim must be >= 2");
    if (n_layers < 1) throw std::invalid_argument("coupling stack: need at least one layer");
    std::mt19937_64 rng(seed);
    CouplingStack stack;
    stack.dim = dim;
    const int half = dim / 2;
    for (int l = 0; l < n_layers; ++l) {
        CouplingLayer layer;
        for (int i = 0; i < dim; ++i) {
            const bool first_half = i < half;
            if (first_half == (l % 2 == 0))
                layer.pass_mask.push_back(i);
            else
                layer.act_mask.push_back(i);
        }
        const int n_pass = static_cast<int>(layer.pass_mask.size());
        const int n_act = static_cast<int>(layer.act_mask.size());
        layer.scale_net = make_net(n_pass, n_act, n_features, bandwidth, rng);
        layer.translate_net = make_net(n_pass, n_act, n_features, bandwidth, rng);
        stack.layers.push_back(std::move(layer));
    }
    return stack;
}

Eigen::VectorXd forward(const CouplingStack& stack, const Eigen::VectorXd& x) {
    if (x.size() != stack.dim) throw std::invalid_argument("forward: dimension mismatch");
    Eigen::VectorXd z = x;
    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        const auto& layer = stack.layers[l];
        const Eigen::VectorXd pass = gather(z, layer.pass_mask);
        const Eigen::VectorXd scale = layer.scale_net.evaluate(pass);
        const Eigen::VectorXd shift = layer.translate_net.evaluate(pass);
        for (std::size_t a = 0; a < layer.act_mask.size(); ++a) {
            const int i = layer.act_mask[a];
            z[i] = z[i] * std::exp(scale[a]) + shift[a];
        }
        if (!z.allFinite())
            throw std::runtime_error("forward: non-finite output at coupling layer " +
                                     std::to_string(l));
    }
    return z;
}

Eigen::VectorXd inverse(const CouplingStack& stack, const Eigen::VectorXd& u) {
    if (u.size() != stack.dim) throw std::invalid_argument("inverse: dimension mismatch");
    Eigen::VectorXd z = u;
    for (std::size_t l = stack.layers.size(); l-- > 0;) {
        const auto& layer = stack.layers[l];
        const Eigen::VectorXd pass = gather(z, layer.pass_mask);
        const Eigen::VectorXd scale = layer.scale_net.evaluate(pass);
        const Eigen::VectorXd shift = layer.translate_net.evaluate(pass);
        for (std::size_t a = 0; a < layer.act_mask.size(); ++a) {
            const int i = layer.act_mask[a];
            z[i] = (z[i] - shift[a]) * std::exp(-scale[a]);
        }
        if (!z.allFinite())
            throw std::runtime_error("inverse: non-finite output at coupling layer " +
                                     std::to_string(l));
    }
    return z;
}

Eigen::MatrixXd jacobian(const CouplingStack& stack, const Eigen::VectorXd& x) {
    if (x.size() != stack.dim) throw std::invalid_argument("jacobian: dimension mismatch");
    const int d = stack.dim;
    Eigen::MatrixXd total = Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd z = x;
    Eigen::VectorXd pass, arg, phi, sins, scale, shift;
    Eigen::MatrixXd weighted, ds, dt, J(d, d), next(d, d);
    for (const auto& layer : stack.layers) {
        const int n_pass = static_cast<int>(layer.pass_mask.size());
        pass.resize(n_pass);
        for (int p = 0; p < n_pass; ++p) pass[p] = z[layer.pass_mask[p]];

        const double norm_s = std::sqrt(2.0 / layer.scale_net.frequencies.rows());
        arg.noalias() = layer.scale_net.frequencies * pass;
        arg += layer.scale_net.phases;
        phi = norm_s * arg.array().cos();
        scale.noalias() = layer.scale_net.out_weights * phi;
        sins = -norm_s * arg.array().sin();
        weighted = layer.scale_net.out_weights.array().rowwise() * sins.transpose().array();
        ds.noalias() = weighted * layer.scale_net.frequencies;

        const double norm_t = std::sqrt(2.0 / layer.translate_net.frequencies.rows());
        arg.noalias() = layer.translate_net.frequencies * pass;
        arg += layer.translate_net.phases;
        phi = norm_t * arg.array().cos();
        shift.noalias() = layer.translate_net.out_weights * phi;
        sins = -norm_t * arg.array().sin();
        weighted = layer.translate_net.out_weights.array().rowwise() * sins.transpose().array();
        dt.noalias() = weighted * layer.translate_net.frequencies;

        J.setZero();
        for (int p : layer.pass_mask) J(p, p) = 1.0;
        for (std::size_t a = 0; a < layer.act_mask.size(); ++a) {
            const int i = layer.act_mask[a];
            const double e = std::exp(scale[a]);
            J(i, i) = e;
            for (int p = 0; p < n_pass; ++p)
                J(i, layer.pass_mask[p]) = z[i] * e * ds(a, p) + dt(a, p);
        }
        next.noalias() = J * total;
        total.swap(next);
        for (std::size_t a = 0; a < layer.act_mask.size(); ++a) {
            const int i = layer.act_mask[a];
            z[i] = z[i] * std::exp(scale[a]) + shift[a];
        }
    }
    return total;
}

namespace {

// allocation-free forward pass over reusable buffers
struct ForwardWorkspace {
    Eigen::VectorXd z, pass, arg, phi, scale, shift;
};

void forward_into(const CouplingStack& stack, const Eigen::VectorXd& x, ForwardWorkspace& ws) {
    ws.z = x;
    for (const auto& layer : stack.layers) {
        const int n_pass = static_cast<int>(layer.pass_mask.size());
        ws.pass.resize(n_pass);
        for (int p = 0; p < n_pass; ++p) ws.pass[p] = ws.z[layer.pass_mask[p]];
        const double norm_s = std::sqrt(2.0 / layer.scale_net.frequencies.rows());
        ws.arg.noalias() = layer.scale_net.frequencies * ws.pass;
        ws.arg += layer.scale_net.phases;
        ws.phi = norm_s * ws.arg.array().cos();
        ws.scale.noalias() = layer.scale_net.out_weights * ws.phi;
        const double norm_t = std::sqrt(2.0 / layer.translate_net.frequencies.rows());
        ws.arg.noalias() = layer.translate_net.frequencies * ws.pass;
        ws.arg += layer.translate_net.phases;
        ws.phi = norm_t * ws.arg.array().cos();
        ws.shift.noalias() = layer.translate_net.out_weights * ws.phi;
        for (std::size_t a = 0; a < layer.act_mask.size(); ++a) {
            const int i = layer.act_mask[a];
            ws.z[i] = ws.z[i] * std::exp(ws.scale[a]) + ws.shift[a];
        }
    }
}

}  // namespace

double mse_loss(const CouplingStack& stack, const std::vector<TrainingPair>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("mse_loss: empty training set");
    ForwardWorkspace ws;
    double sum = 0.0;
    for (const auto& p : pairs) {
        forward_into(stack, p.input, ws);
        sum += (p.target - ws.z).squaredNorm();
    }
    return sum / static_cast<double>(pairs.size());
}

std::vector<LayerGradient> mse_gradient(const CouplingStack& stack,
                                        const std::vector<TrainingPair>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("mse_gradient: empty training set");
    const std::size_t L = stack.layers.size();
    std::vector<LayerGradient> grads(L);
    for (std::size_t l = 0; l < L; ++l) {
        grads[l].scale_weights =
            Eigen::MatrixXd::Zero(stack.layers[l].scale_net.out_weights.rows(),
                                  stack.layers[l].scale_net.out_weights.cols());
        grads[l].translate_weights =
            Eigen::MatrixXd::Zero(stack.layers[l].translate_net.out_weights.rows(),
                                  stack.layers[l].translate_net.out_weights.cols());
    }
    const double inv_n = 1.0 / static_cast<double>(pairs.size());

    // workspaces reused across samples
    std::vector<Eigen::VectorXd> inputs(L, Eigen::VectorXd(stack.dim));
    Eigen::VectorXd z(stack.dim), grad_out(stack.dim), grad_in(stack.dim);
    Eigen::VectorXd pass, phi_s, phi_t, arg_s, arg_t, scale, shift;
    Eigen::VectorXd g_act, act_in, exp_s, g_scale, via_scale, via_shift;

    for (const auto& pair : pairs) {
        // forward pass keeping every layer input
        z = pair.input;
        for (std::size_t l = 0; l < L; ++l) {
            inputs[l] = z;
            const auto& layer = stack.layers[l];
            const int n_pass = static_cast<int>(layer.pass_mask.size());
            pass.resize(n_pass);
            for (int p = 0; p < n_pass; ++p) pass[p] = z[layer.pass_mask[p]];
            const double norm_s = std::sqrt(2.0 / layer.scale_net.frequencies.rows());
            const double norm_t = std::sqrt(2.0 / layer.translate_net.frequencies.rows());
            arg_s.noalias() = layer.scale_net.frequencies * pass;
            arg_s += layer.scale_net.phases;
            arg_t.noalias() = layer.translate_net.frequencies * pass;
            arg_t += layer.translate_net.phases;
            phi_s = norm_s * arg_s.array().cos();
            phi_t = norm_t * arg_t.array().cos();
            scale.noalias() = layer.scale_net.out_weights * phi_s;
            shift.noalias() = layer.translate_net.out_weights * phi_t;
            for (std::size_t a = 0; a < layer.act_mask.size(); ++a) {
                const int i = layer.act_mask[a];
                z[i] = z[i] * std::exp(scale[a]) + shift[a];
            }
        }
        grad_out = 2.0 * inv_n * (z - pair.target);

        for (std::size_t l = L; l-- > 0;) {
            const auto& layer = stack.layers[l];
            const Eigen::VectorXd& zin = inputs[l];
            const int n_pass = static_cast<int>(layer.pass_mask.size());
            const int n_act = static_cast<int>(layer.act_mask.size());
            pass.resize(n_pass);
            for (int p = 0; p < n_pass; ++p) pass[p] = zin[layer.pass_mask[p]];
            const double norm_s = std::sqrt(2.0 / layer.scale_net.frequencies.rows());
            const double norm_t = std::sqrt(2.0 / layer.translate_net.frequencies.rows());
            arg_s.noalias() = layer.scale_net.frequencies * pass;
            arg_s += layer.scale_net.phases;
            arg_t.noalias() = layer.translate_net.frequencies * pass;
            arg_t += layer.translate_net.phases;
            phi_s = norm_s * arg_s.array().cos();
            phi_t = norm_t * arg_t.array().cos();
            scale.noalias() = layer.scale_net.out_weights * phi_s;

            g_act.resize(n_act);
            act_in.resize(n_act);
            for (int a = 0; a < n_act; ++a) {
                g_act[a] = grad_out[layer.act_mask[a]];
                act_in[a] = zin[layer.act_mask[a]];
            }
            exp_s = scale.array().exp();
            g_scale = (g_act.array() * act_in.array() * exp_s.array()).matrix();

            grads[l].translate_weights.noalias() += g_act * phi_t.transpose();
            grads[l].scale_weights.noalias() += g_scale * phi_s.transpose();

            // propagate to the layer input; d(phi)/dz = -norm sin(Wz+b) W
            grad_in.setZero();
            for (int p : layer.pass_mask) grad_in[p] = grad_out[p];
            arg_s = (layer.scale_net.out_weights.transpose() * g_scale).array() *
                    (-norm_s * arg_s.array().sin());
            via_scale.noalias() = layer.scale_net.frequencies.transpose() * arg_s;
            arg_t = (layer.translate_net.out_weights.transpose() * g_act).array() *
                    (-norm_t * arg_t.array().sin());
            via_shift.noalias() = layer.translate_net.frequencies.transpose() * arg_t;
            for (int p = 0; p < n_pass; ++p)
                grad_in[layer.pass_mask[p]] += via_scale[p] + via_shift[p];
            for (int a = 0; a < n_act; ++a)
                grad_in[layer.act_mask[a]] = g_act[a] * exp_s[a];
            grad_out = grad_in;
        }
    }
    return grads;
}

std::vector<double> train(CouplingStack& stack, const std::vector<TrainingPair>& pairs,
                          const TrainConfig& config) {
    if (pairs.empty()) throw std::invalid_argument("train: empty training set");
    for (const auto& p : pairs)
        if (p.input.size() != stack.dim || p.target.size() != stack.dim)
            throw std::invalid_argument("train: dimension mismatch in training pair");
    const int n = static_cast<int>(pairs.size());
    const int batch = (config.batch <= 0 || config.batch >= n) ? n : config.batch;

    double lr = config.learning_rate;
    std::vector<double> history;
    history.push_back(mse_loss(stack, pairs));
    std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> saved(stack.layers.size());
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t l = 0; l < stack.layers.size(); ++l) {
            saved[l].first = stack.layers[l].scale_net.out_weights;
            saved[l].second = stack.layers[l].translate_net.out_weights;
        }
        for (int start = 0; start < n; start += batch) {
            const int end = std::min(n, start + batch);
            const std::vector<TrainingPair> slice(pairs.begin() + start, pairs.begin() + end);
            const auto grads = mse_gradient(stack, slice);
            for (std::size_t l = 0; l < stack.layers.size(); ++l) {
                stack.layers[l].scale_net.out_weights -= lr * grads[l].scale_weights;
                stack.layers[l].translate_net.out_weights -= lr * grads[l].translate_weights;
            }
        }
        const double loss = mse_loss(stack, pairs);
        if (!std::isfinite(loss))
            throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
        if (loss > history.back()) {
            // reject the step, halve the rate
            for (std::size_t l = 0; l < stack.layers.size(); ++l) {
                stack.layers[l].scale_net.out_weights = saved[l].first;
                stack.layers[l].translate_net.out_weights = saved[l].second;
            }
            lr *= 0.5;
            history.push_back(history.back());
        } else {
            history.push_back(loss);
        }
    }
    return history;
}

Eigen::VectorXd reconstruct_field_at(const CouplingStack& stack, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& psi_star) {
    thread_local ForwardWorkspace ws;
    forward_into(stack, x, ws);
    const Eigen::VectorXd rhs = psi_star - ws.z;
    const Eigen::MatrixXd J = jacobian(stack, x);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    const Eigen::VectorXd v = lu.solve(rhs);
    if (!v.allFinite() ||
        (J * v - rhs).norm() > 1e-6 * std::max(1.0, rhs.norm()))
        throw std::runtime_error("reconstruct_field: Jacobian solve failed");
    return v;
}

Eigen::VectorXd reconstruct_field(const CouplingStack& stack, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& x_star) {
    return reconstruct_field_at(stack, x, forward(stack, x_star));
}

double lyapunov_potential(const CouplingStack& stack, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& x_star) {
    return 0.5 * (forward(stack, x_star) - forward(stack, x)).squaredNorm();
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const int rows = static_cast<int>(j.size());
    const int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
    return m;
}

nlohmann::json net_to_json(const FourierFeatureNet& net) {
    nlohmann::json j;
    j["bandwidth"] = net.bandwidth;
    j["frequencies"] = matrix_to_json(net.frequencies);
    j["phases"] = matrix_to_json(net.phases);
    j["out_weights"] = matrix_to_json(net.out_weights);
    return j;
}

FourierFeatureNet net_from_json(const nlohmann::json& j) {
    FourierFeatureNet net;
    net.bandwidth = j.at("bandwidth").get<double>();
    net.frequencies = matrix_from_json(j.at("frequencies"));
    net.phases = matrix_from_json(j.at("phases"));
    net.out_weights = matrix_from_json(j.at("out_weights"));
    return net;
}

}  // namespace

std::string save_coupling_stack(const CouplingStack& stack) {
    nlohmann::json j;
    j["format"] = "diffeo-v1";
    j["dim"] = stack.dim;
    j["layers"] = nlohmann::json::array();
    for (const auto& layer : stack.layers) {
        nlohmann::json lj;
        lj["pass_mask"] = layer.pass_mask;
        lj["scale"] = net_to_json(layer.scale_net);
        lj["translate"] = net_to_json(layer.translate_net);
        j["layers"].push_back(std::move(lj));
    }
    return j.dump(2);
}

CouplingStack load_coupling_stack(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    if (j.at("format").get<std::string>() != "diffeo-v1")
        throw std::runtime_error("load_coupling_stack: unsupported format tag");
    CouplingStack stack;
    stack.dim = j.at("dim").get<int>();
    for (const auto& lj : j.at("layers")) {
        CouplingLayer layer;
        layer.pass_mask = lj.at("pass_mask").get<std::vector<int>>();
        std::vector<bool> is_pass(stack.dim, false);
        for (int p : layer.pass_mask) is_pass.at(p) = true;
        for (int i = 0; i < stack.dim; ++i)
            if (!is_pass[i]) layer.act_mask.push_back(i);
        layer.scale_net = net_from_json(lj.at("scale"));
        layer.translate_net = net_from_json(lj.at("translate"));
        stack.layers.push_back(std::move(layer));
    }
    return stack;
}

DiffeoTrainingSet prepare_targets(const SubdynamicsPartition& partition, int cluster,
                                  const TrajectorySet& data, const Eigen::VectorXd& u_star) {
    const int d = data.dim();
    const Eigen::MatrixXd& embedding = partition.embeddings.at(cluster);
    if (embedding.cols() < d)
        throw std::runtime_error("prepare_targets: cluster " + std::to_string(cluster) +
                                 " has only " + std::to_string(embedding.cols()) +
                                 " eigenvectors, need " + std::to_string(d));
    const auto samples = data.flatten();

    std::vector<int> members;
    for (int i = 0; i < static_cast<int>(samples.size()); ++i)
        if (partition.labels[i] == cluster) members.push_back(i);
    if (members.empty()) throw std::runtime_error("prepare_targets: empty cluster");
    const int n = static_cast<int>(members.size());

    // assigned eigenvectors are stored in ascending eigenvalue order; the
    // first d columns are the smoothest directions
    Eigen::MatrixXd u_raw(n, d), x_raw(n, d);
    for (int r = 0; r < n; ++r) {
        u_raw.row(r) = embedding.row(members[r]).head(d);
        x_raw.row(r) = samples[members[r]]->position.transpose();
    }
    const Eigen::RowVectorXd u_mean = u_raw.colwise().mean();
    const Eigen::RowVectorXd x_mean = x_raw.colwise().mean();
    Eigen::RowVectorXd scale(d);
    for (int c = 0; c < d; ++c) {
        const double u_std = std::sqrt((u_raw.col(c).array() - u_mean[c]).square().mean());
        const double x_std = std::sqrt((x_raw.col(c).array() - x_mean[c]).square().mean());
        if (u_std < 1e-14)
            throw std::runtime_error("prepare_targets: embedding axis " + std::to_string(c) +
                                     " is degenerate on cluster " + std::to_string(cluster));
        scale[c] = x_std / u_std;
    }

    DiffeoTrainingSet set;
    set.pairs.reserve(n);
    for (int r = 0; r < n; ++r) {
        TrainingPair p;
        p.input = x_raw.row(r).transpose();
        p.target = ((u_raw.row(r) - u_mean).array() * scale.array()).matrix().transpose();
        set.pairs.push_back(std::move(p));
    }
    set.target_attractor =
        ((u_star.head(d).transpose() - u_mean).array() * scale.array()).matrix().transpose();
    return set;
}

}  // namespace attractorscope

#include "attractorscope/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "attractorscope/spectral.hpp"
#include "attractorscope/vkernel.hpp"

namespace attractorscope {

namespace {

// (position, velocity) feature rows
Eigen::MatrixXd feature_matrix(const TrajectorySet& data) {
    const auto samples = data.flatten();
    const int d = data.dim();
    Eigen::MatrixXd f(static_cast<int>(samples.size()), 2 * d);
    for (int i = 0; i < f.rows(); ++i) {
        f.row(i).head(d) = samples[i]->position.transpose();
        f.row(i).tail(d) = samples[i]->velocity.transpose();
    }
    return f;
}

int label_count(const std::vector<int>& labels) {
    int q = 0;
    for (int l : labels) q = std::max(q, l + 1);
    return q;
}

}  // namespace

double permutation_accuracy(const std::vector<int>& labels, const std::vector<int>& truth) {
    if (labels.size() != truth.size())
        throw std::invalid_argument("permutation_accuracy: size mismatch");
    if (labels.empty()) throw std::invalid_argument("permutation_accuracy: empty labels");
    const int q = std::max(label_count(labels), label_count(truth));
    if (q > 8) throw std::invalid_argument("permutation_accuracy: too many clusters");
    std::vector<int> perm(q);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
        int hits = 0;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (perm[labels[i]] == truth[i]) ++hits;
        best = std::max(best, static_cast<double>(hits) / labels.size());
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

std::vector<int> labels_from_attractors(const TrajectorySet& data,
                                        const std::vector<Eigen::VectorXd>& attractors) {
    if (attractors.empty()) throw std::invalid_argument("labels_from_attractors: no attractors");
    std::vector<int> labels;
    labels.reserve(data.total_samples());
    for (const auto& traj : data.trajectories) {
        const Eigen::VectorXd& terminal = traj.samples.back().position;
        int arg = 0;
        double best = std::numeric_limits<double>::max();
        for (int a = 0; a < static_cast<int>(attractors.size()); ++a) {
            const double dist = (attractors[a] - terminal).norm();
            if (dist < best) {
                best = dist;
                arg = a;
            }
        }
        labels.insert(labels.end(), traj.size(), arg);
    }
    return labels;
}

ClusteringResult kernel_kmeans(const TrajectorySet& data, int Q, double sigma,
                               std::uint64_t seed, const std::vector<int>* truth) {
    if (Q < 1) throw std::invalid_argument("kernel_kmeans: Q must be >= 1");
    if (sigma <= 0) throw std::invalid_argument("kernel_kmeans: sigma must be positive");
    const Eigen::MatrixXd f = feature_matrix(data);
    const int m = static_cast<int>(f.rows());
    Eigen::MatrixXd K(m, m);
    for (int i = 0; i < m; ++i) {
        K(i, i) = 1.0;
        for (int j = i + 1; j < m; ++j) {
            const double k = std::exp(-(f.row(i) - f.row(j)).squaredNorm() / (2 * sigma * sigma));
            K(i, j) = k;
            K(j, i) = k;
        }
    }

    std::mt19937_64 rng(seed);
    std::vector<int> assign(m);
    for (int i = 0; i < m; ++i) assign[i] = static_cast<int>(rng() % Q);

    ClusteringResult result;
    result.method = "kernel_kmeans";
    std::vector<double> self_term(Q), size(Q);
    Eigen::MatrixXd cross(m, Q);
    auto refresh_stats = [&] {
        std::fill(size.begin(), size.end(), 0.0);
        std::fill(self_term.begin(), self_term.end(), 0.0);
        cross.setZero();
        for (int i = 0; i < m; ++i) size[assign[i]] += 1.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) cross(i, assign[j]) += K(i, j);
        for (int j = 0; j < m; ++j)
            for (int l = 0; l < m; ++l)
                if (assign[j] == assign[l]) self_term[assign[j]] += K(j, l);
    };
    auto point_distance = [&](int i, int c) {
        return K(i, i) - 2.0 * cross(i, c) / size[c] + self_term[c] / (size[c] * size[c]);
    };

    for (int iter = 0; iter < 300; ++iter) {
        result.iterations = iter + 1;
        refresh_stats();
        for (int c = 0; c < Q; ++c) {
            if (size[c] > 0) continue;
            // re-seed the empty cluster from the farthest point
            int far = -1;
            double worst = -1.0;
            for (int i = 0; i < m; ++i) {
                if (size[assign[i]] <= 1.0) continue;
                const double d = point_distance(i, assign[i]);
                if (d > worst) {
                    worst = d;
                    far = i;
                }
            }
            assign[far] = c;
            refresh_stats();
        }

        double objective = 0.0;
        for (int i = 0; i < m; ++i) objective += point_distance(i, assign[i]);
        result.objective_history.push_back(objective);

        bool changed = false;
        for (int i = 0; i < m; ++i) {
            int arg = assign[i];
            double best = std::numeric_limits<double>::max();
            for (int c = 0; c < Q; ++c) {
                if (size[c] == 0) continue;
                const double d = point_distance(i, c);
                if (d < best - 1e-15) {
                    best = d;
                    arg = c;
                }
            }
            if (arg != assign[i]) {
                assign[i] = arg;
                changed = true;
            }
        }
        if (!changed) break;
    }
    result.labels = assign;
    if (truth) result.accuracy = permutation_accuracy(assign, *truth);
    return result;
}

namespace {

struct Gaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    double weight = 0.0;
};

double log_gauss(const Eigen::VectorXd& x, const Gaussian& g, const Eigen::LLT<Eigen::MatrixXd>& llt) {
    const int d = static_cast<int>(x.size());
    const Eigen::VectorXd diff = x - g.mean;
    const Eigen::VectorXd solved = llt.solve(diff);
    double logdet = 0.0;
    for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * (d * std::log(2.0 * M_PI) + logdet + diff.dot(solved));
}

}  // namespace

ClusteringResult gmm_em(const TrajectorySet& data, int Q, std::uint64_t seed,
                        const std::vector<int>* truth) {
    if (Q < 1) throw std::invalid_argument("gmm_em: Q must be >= 1");
    const Eigen::MatrixXd f = feature_matrix(data);
    const int m = static_cast<int>(f.rows());
    const int d = static_cast<int>(f.cols());
    if (m <= Q * d) throw std::invalid_argument("gmm_em: need more samples than Q * feature dim");

    const Eigen::RowVectorXd global_mean = f.colwise().mean();
    const Eigen::MatrixXd centered = f.rowwise() - global_mean;
    const Eigen::MatrixXd global_cov = centered.transpose() * centered / double(m);
    auto regularize = [d](Eigen::MatrixXd& cov) {
        cov.diagonal().array() += 1e-6 * cov.trace() / d + 1e-12;
    };

    std::mt19937_64 rng(seed);
    std::vector<Gaussian> comps(Q);
    {
        // k-means++-style mean seeding
        std::vector<int> chosen;
        std::uniform_int_distribution<int> uni(0, m - 1);
        chosen.push_back(uni(rng));
        while (static_cast<int>(chosen.size()) < Q) {
            Eigen::VectorXd d2(m);
            for (int i = 0; i < m; ++i) {
                double nearest = std::numeric_limits<double>::max();
                for (int c : chosen)
                    nearest = std::min(nearest, (f.row(i) - f.row(c)).squaredNorm());
                d2[i] = nearest;
            }
            std::uniform_real_distribution<double> u(0.0, d2.sum());
            double target = u(rng), acc = 0.0;
            int pick = m - 1;
            for (int i = 0; i < m; ++i) {
                acc += d2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
            chosen.push_back(pick);
        }
        for (int c = 0; c < Q; ++c) {
            comps[c].mean = f.row(chosen[c]).transpose();
            comps[c].cov = global_cov;
            regularize(comps[c].cov);
            comps[c].weight = 1.0 / Q;
        }
    }

    ClusteringResult result;
    result.method = "gmm_em";
    Eigen::MatrixXd resp(m, Q);
    double prev_ll = -std::numeric_limits<double>::max();
    for (int iter = 0; iter < 200; ++iter) {
        result.iterations = iter + 1;
        std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
        llts.reserve(Q);
        for (int c = 0; c < Q; ++c) {
            Eigen::LLT<Eigen::MatrixXd> llt(comps[c].cov);
            if (llt.info() != Eigen::Success) {
                // singular component after regularization: re-seed on a random point
                comps[c].mean = f.row(int(rng() % m)).transpose();
                comps[c].cov = global_cov;
                regularize(comps[c].cov);
                llt.compute(comps[c].cov);
            }
            llts.push_back(std::move(llt));
        }
        // E-step with log-sum-exp
        double ll = 0.0;
        for (int i = 0; i < m; ++i) {
            Eigen::VectorXd logp(Q);
            for (int c = 0; c < Q; ++c)
                logp[c] = std::log(std::max(comps[c].weight, 1e-300)) +
                          log_gauss(f.row(i).transpose(), comps[c], llts[c]);
            const double mx = logp.maxCoeff();
            const double lse = mx + std::log((logp.array() - mx).exp().sum());
            resp.row(i) = (logp.array() - lse).exp();
            ll += lse;
        }
        result.objective_history.push_back(ll);
        // M-step
        for (int c = 0; c < Q; ++c) {
            const double nk = resp.col(c).sum();
            if (nk < 1e-10) {
                comps[c].mean = f.row(int(rng() % m)).transpose();
                comps[c].cov = global_cov;
                regularize(comps[c].cov);
                comps[c].weight = 1e-6;
                continue;
            }
            comps[c].mean = (f.transpose() * resp.col(c)) / nk;
            Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
            for (int i = 0; i < m; ++i) {
                const Eigen::VectorXd diff = f.row(i).transpose() - comps[c].mean;
                cov.noalias() += resp(i, c) * diff * diff.transpose();
            }
            cov /= nk;
            regularize(cov);
            comps[c].cov = cov;
            comps[c].weight = nk / m;
        }
        if (ll < prev_ll + 1e-9 * (1.0 + std::abs(ll)) && iter > 0) {
            prev_ll = std::max(prev_ll, ll);
            break;
        }
        prev_ll = ll;
    }

    result.labels.resize(m);
    for (int i = 0; i < m; ++i) {
        int arg = 0;
        resp.row(i).maxCoeff(&arg);
        result.labels[i] = arg;
    }
    if (truth) result.accuracy = permutation_accuracy(result.labels, *truth);
    return result;
}

namespace {

// plain k-means on rows, fixed seed
std::pair<std::vector<int>, double> kmeans_rows(const Eigen::MatrixXd& rows, int Q,
                                                std::uint64_t seed) {
    const int m = static_cast<int>(rows.rows());
    std::mt19937_64 rng(seed);
    std::vector<Eigen::RowVectorXd> centers;
    centers.push_back(rows.row(int(rng() % m)));
    while (static_cast<int>(centers.size()) < Q) {
        int arg = 0;
        double best = -1.0;
        for (int i = 0; i < m; ++i) {
            double nearest = std::numeric_limits<double>::max();
            for (const auto& c : centers)
                nearest = std::min(nearest, (rows.row(i) - c).squaredNorm());
            if (nearest > best) {
                best = nearest;
                arg = i;
            }
        }
        centers.push_back(rows.row(arg));
    }
    std::vector<int> assign(m, 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int i = 0; i < m; ++i) {
            int arg = 0;
            double best = std::numeric_limits<double>::max();
            for (int c = 0; c < Q; ++c) {
                const double d = (rows.row(i) - centers[c]).squaredNorm();
                if (d < best) {
                    best = d;
                    arg = c;
                }
            }
            if (assign[i] != arg) {
                assign[i] = arg;
                changed = true;
            }
        }
        for (int c = 0; c < Q; ++c) {
            Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(rows.cols());
            int count = 0;
            for (int i = 0; i < m; ++i)
                if (assign[i] == c) {
                    sum += rows.row(i);
                    ++count;
                }
            if (count > 0) centers[c] = sum / count;
        }
        if (!changed) break;
    }
    double inertia = 0.0;
    for (int i = 0; i < m; ++i) inertia += (rows.row(i) - centers[assign[i]]).squaredNorm();
    return {assign, inertia};
}

}  // namespace

ClusteringResult spectral_baseline(const TrajectorySet& data, int Q, int k_neighbors,
                                   const std::vector<int>* truth) {
    if (k_neighbors < 2) throw std::invalid_argument("spectral_baseline: k_neighbors must be >= 2");
    const Eigen::MatrixXd f = feature_matrix(data);
    const int m = static_cast<int>(f.rows());

    // mutual k-NN adjacency
    std::vector<std::vector<int>> knn(m);
    for (int i = 0; i < m; ++i) {
        std::vector<std::pair<double, int>> dist;
        dist.reserve(m - 1);
        for (int j = 0; j < m; ++j)
            if (j != i) dist.emplace_back((f.row(i) - f.row(j)).squaredNorm(), j);
        const int k = std::min<int>(k_neighbors, static_cast<int>(dist.size()));
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        for (int n = 0; n < k; ++n) knn[i].push_back(dist[n].second);
        std::sort(knn[i].begin(), knn[i].end());
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j : knn[i])
            if (std::binary_search(knn[j].begin(), knn[j].end(), i)) a(i, j) = 1.0;

    Eigen::VectorXd deg = a.rowwise().sum();
    Eigen::VectorXd dinv_sqrt(m);
    for (int i = 0; i < m; ++i) dinv_sqrt[i] = deg[i] > 0 ? 1.0 / std::sqrt(deg[i]) : 0.0;
    const Eigen::MatrixXd lsym =
        Eigen::MatrixXd::Identity(m, m) -
        dinv_sqrt.asDiagonal() * a * dinv_sqrt.asDiagonal();

    const auto dec = eigendecompose(lsym);
    Eigen::MatrixXd rows = dec.eigenvectors.leftCols(Q);
    for (int i = 0; i < m; ++i) {
        const double norm = rows.row(i).norm();
        if (norm > 1e-12) rows.row(i) /= norm;
    }

    ClusteringResult result;
    result.method = "spectral_baseline";
    double best_inertia = std::numeric_limits<double>::max();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto [labels, inertia] = kmeans_rows(rows, Q, seed);
        if (inertia < best_inertia) {
            best_inertia = inertia;
            result.labels = labels;
        }
    }
    result.iterations = 10;
    if (truth) result.accuracy = permutation_accuracy(result.labels, *truth);
    return result;
}

std::vector<Eigen::VectorXd> zero_velocity_candidates(const TrajectorySet& data,
                                                      double fraction) {
    if (!(fraction > 0 && fraction < 1))
        throw std::invalid_argument("zero_velocity_candidates: fraction must lie in (0, 1)");
    const auto samples = data.flatten();
    double mean_speed = 0.0;
    for (const auto* s : samples) mean_speed += s->velocity.norm();
    mean_speed /= static_cast<double>(samples.size());
    const double threshold = fraction * mean_speed;

    std::vector<int> slow;
    for (int i = 0; i < static_cast<int>(samples.size()); ++i)
        if (samples[i]->velocity.norm() < threshold) slow.push_back(i);
    if (slow.empty()) return {};

    // single-linkage merge within the consecutive-sample radius
    const double radius = default_sigma(data);
    const int n = static_cast<int>(slow.size());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((samples[slow[i]]->position - samples[slow[j]]->position).norm() <= radius)
                parent[find(i)] = find(j);

    std::vector<Eigen::VectorXd> centroids;
    std::vector<int> roots;
    for (int i = 0; i < n; ++i) {
        const int r = find(i);
        auto it = std::find(roots.begin(), roots.end(), r);
        int idx;
        if (it == roots.end()) {
            roots.push_back(r);
            centroids.push_back(Eigen::VectorXd::Zero(data.dim()));
            idx = static_cast<int>(roots.size()) - 1;
        } else {
            idx = static_cast<int>(it - roots.begin());
        }
        centroids[idx] += samples[slow[i]]->position;
    }
    for (std::size_t g = 0; g < roots.size(); ++g) {
        int count = 0;
        for (int i = 0; i < n; ++i)
            if (find(i) == roots[g]) ++count;
        centroids[g] /= static_cast<double>(count);
    }
    return centroids;
}

double dtw_distance(const std::vector<Eigen::VectorXd>& a,
                    const std::vector<Eigen::VectorXd>& b) {
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    if (n == 0 || m == 0) throw std::invalid_argument("dtw_distance: empty path");
    constexpr double inf = std::numeric_limits<double>::max();
    std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
    prev[0] = 0.0;
    for (int i = 1; i <= n; ++i) {
        cur[0] = inf;
        for (int j = 1; j <= m; ++j) {
            const double cost = (a[i - 1] - b[j - 1]).norm();
            cur[j] = cost + std::min({prev[j], cur[j - 1], prev[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

FieldMetrics metrics(const std::vector<Trajectory>& reference,
                     const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& field) {
    if (reference.empty()) throw std::invalid_argument("metrics: no reference trajectories");
    FieldMetrics out;
    int n_rmse = 0, n_cos = 0;
    for (const auto& traj : reference) {
        for (const auto& s : traj.samples) {
            const Eigen::VectorXd pred = field(s.position);
            out.rmse += (s.velocity - pred).norm();
            ++n_rmse;
            const double np = pred.norm(), nv = s.velocity.norm();
            if (np > 1e-12 && nv > 1e-12) {
                out.cosine_err += std::abs(1.0 - pred.dot(s.velocity) / (np * nv));
                ++n_cos;
            }
        }
    }
    out.rmse /= n_rmse;
    if (n_cos > 0) out.cosine_err /= n_cos;

    double dtwd = 0.0;
    for (const auto& traj : reference) {
        const double duration = traj.dt * (traj.size() - 1);
        std::vector<Eigen::VectorXd> ref_path, gen_path;
        for (const auto& s : traj.samples) ref_path.push_back(s.position);
        if (duration > 0) {
            const Trajectory generated =
                integrate_field(field, traj.samples.front().position, duration, 1.0 / traj.dt);
            for (const auto& s : generated.samples) gen_path.push_back(s.position);
        } else {
            gen_path = ref_path;
        }
        dtwd += dtw_distance(ref_path, gen_path);
    }
    out.dtwd = dtwd / static_cast<double>(reference.size());
    return out;
}

}  // namespace attractorscope

#include "attractorscope/spectral.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace attractorscope {

namespace {

// Householder reduction of a symmetric matrix to tridiagonal form; a is
// replaced by the accumulated orthogonal transform (EISPACK tred2 lineage).
void householder_tridiagonalize(Eigen::MatrixXd& a, Eigen::VectorXd& d, Eigen::VectorXd& e) {
    const int n = static_cast<int>(a.rows());
    for (int i = n - 1; i > 0; --i) {
        const int l = i - 1;
        double h = 0.0;
        if (l > 0) {
            double scale = 0.0;
            for (int k = 0; k <= l; ++k) scale += std::abs(a(i, k));
            if (scale == 0.0) {
                e[i] = a(i, l);
            } else {
                for (int k = 0; k <= l; ++k) {
                    a(i, k) /= scale;
                    h += a(i, k) * a(i, k);
                }
                double f = a(i, l);
                double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a(i, l) = f - g;
                f = 0.0;
                for (int j = 0; j <= l; ++j) {
                    a(j, i) = a(i, j) / h;
                    g = 0.0;
                    for (int k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
                    for (int k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
                    e[j] = g / h;
                    f += e[j] * a(i, j);
                }
                const double hh = f / (h + h);
                for (int j = 0; j <= l; ++j) {
                    f = a(i, j);
                    g = e[j] - hh * f;
                    e[j] = g;
                    for (int k = 0; k <= j; ++k) a(j, k) -= f * e[k] + g * a(i, k);
                }
            }
        } else {
            e[i] = a(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        if (d[i] != 0.0) {
            for (int j = 0; j < i; ++j) {
                double g = 0.0;
                for (int k = 0; k < i; ++k) g += a(i, k) * a(k, j);
                for (int k = 0; k < i; ++k) a(k, j) -= g * a(k, i);
            }
        }
        d[i] = a(i, i);
        a(i, i) = 1.0;
        for (int j = 0; j < i; ++j) a(j, i) = a(i, j) = 0.0;
    }
}

// Implicit-shift QL on the tridiagonal (d, e), accumulating the rotations
// into z. Throws if any off-diagonal fails to vanish within the iteration
// cap.
void ql_implicit_shift(Eigen::VectorXd& d, Eigen::VectorXd& e, Eigen::MatrixXd& z) {
    const int n = static_cast<int>(d.size());
    constexpr int kMaxIter = 50;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iter++ == kMaxIter)
                    throw std::runtime_error(
                        "eigendecompose: QL failed to converge at off-diagonal index " +
                        std::to_string(l));
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                int i = m - 1;
                for (; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = z(k, i + 1);
                        z(k, i + 1) = s * z(k, i) + c * f;
                        z(k, i) = c * z(k, i) - s * f;
                    }
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

void enforce_sign_convention(Eigen::MatrixXd& vectors) {
    for (int c = 0; c < vectors.cols(); ++c) {
        int arg = 0;
        double best = -1.0;
        for (int r = 0; r < vectors.rows(); ++r) {
            const double mag = std::abs(vectors(r, c));
            if (mag > best) {
                best = mag;
                arg = r;
            }
        }
        if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
    }
}

}  // namespace

SpectralDecomposition eigendecompose(const Eigen::MatrixXd& symmetric) {
    const int n = static_cast<int>(symmetric.rows());
    if (n == 0 || symmetric.cols() != n)
        throw std::invalid_argument("eigendecompose: matrix must be square and non-empty");
    const double asym = (symmetric - symmetric.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12)
        throw std::invalid_argument("eigendecompose: input asymmetry " + std::to_string(asym) +
                                    " exceeds 1e-12");

    Eigen::MatrixXd z = symmetric;
    Eigen::VectorXd d(n), e(n);
    if (n == 1) {
        d[0] = z(0, 0);
        z(0, 0) = 1.0;
    } else {
        householder_tridiagonalize(z, d, e);
        ql_implicit_shift(d, e, z);
    }

    // ascending sort, stable on the original column index
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&d](int a, int b) { return d[a] < d[b]; });
    SpectralDecomposition dec;
    dec.eigenvalues.resize(n);
    dec.eigenvectors.resize(n, n);
    for (int c = 0; c < n; ++c) {
        dec.eigenvalues[c] = d[order[c]];
        dec.eigenvectors.col(c) = z.col(order[c]);
    }
    enforce_sign_convention(dec.eigenvectors);

    const double scale = std::max(dec.eigenvalues.cwiseAbs().maxCoeff(), 1.0);
    const Eigen::MatrixXd gram =
        dec.eigenvectors.transpose() * dec.eigenvectors - Eigen::MatrixXd::Identity(n, n);
    if (gram.cwiseAbs().maxCoeff() > 1e-8)
        throw std::runtime_error("eigendecompose: eigenvector basis lost orthonormality");
    const Eigen::MatrixXd residual =
        symmetric * dec.eigenvectors - dec.eigenvectors * dec.eigenvalues.asDiagonal();
    if (residual.cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw std::runtime_error("eigendecompose: residual exceeds tolerance");
    return dec;
}

SpectralDecomposition eigendecompose(const LaplacianMatrix& laplacian) {
    return eigendecompose(laplacian.entries);
}

int count_subdynamics(const SpectralDecomposition& dec) {
    const double lambda_max = dec.eigenvalues[dec.size() - 1];
    const double tau = 1e-8 * std::max(lambda_max, 1.0);
    int q = 0;
    while (q < dec.size() && dec.eigenvalues[q] <= tau) ++q;
    return q;
}

namespace {

// Rotates the Q-dimensional kernel block onto the indicator basis of the
// given groups, then labels every point by its dominant rotated entry.
std::vector<int> label_from_groups(const SpectralDecomposition& dec, int Q,
                                   const std::vector<std::vector<int>>& groups) {
    const int m = dec.size();
    const Eigen::MatrixXd kernel_block = dec.eigenvectors.leftCols(Q);
    Eigen::MatrixXd rotation(Q, Q);
    for (int q = 0; q < Q; ++q) {
        Eigen::VectorXd indicator = Eigen::VectorXd::Zero(m);
        const double c = 1.0 / std::sqrt(static_cast<double>(groups[q].size()));
        for (int i : groups[q]) indicator[i] = c;
        rotation.col(q) = kernel_block.transpose() * indicator;
    }
    const Eigen::MatrixXd rotated = kernel_block * rotation;

    std::vector<int> raw(m);
    for (int i = 0; i < m; ++i) {
        int arg = 0;
        double best = -1.0;
        for (int q = 0; q < Q; ++q) {
            const double mag = std::abs(rotated(i, q));
            if (mag > best) {
                best = mag;
                arg = q;
            }
        }
        if (best < 1e-12)
            throw std::runtime_error("label_points: point " + std::to_string(i) +
                                     " has no support in any kernel eigenvector");
        raw[i] = arg;
    }
    // renumber by smallest member index
    std::vector<int> remap(Q, -1);
    int next = 0;
    std::vector<int> labels(m);
    for (int i = 0; i < m; ++i) {
        if (remap[raw[i]] < 0) remap[raw[i]] = next++;
        labels[i] = remap[raw[i]];
    }
    return labels;
}

}  // namespace

std::vector<int> label_points(const SpectralDecomposition& dec, int Q,
                              const WeightedGraph& graph) {
    if (Q < 1 || Q > dec.size()) throw std::invalid_argument("label_points: invalid Q");
    auto components = connected_components(graph);
    if (static_cast<int>(components.size()) != Q)
        throw std::invalid_argument("label_points: graph has " +
                                    std::to_string(components.size()) +
                                    " components but Q = " + std::to_string(Q));
    return label_from_groups(dec, Q, components);
}

std::vector<int> label_points(const SpectralDecomposition& dec, int Q) {
    if (Q < 1 || Q > dec.size()) throw std::invalid_argument("label_points: invalid Q");
    const int m = dec.size();
    const Eigen::MatrixXd kernel_block = dec.eigenvectors.leftCols(Q);

    // cosine k-means over the kernel-block rows; rows of one component are
    // identical up to round-off, so farthest-first seeding is enough
    Eigen::MatrixXd rows(m, Q);
    for (int i = 0; i < m; ++i) {
        const double norm = kernel_block.row(i).norm();
        if (norm < 1e-12)
            throw std::runtime_error("label_points: point " + std::to_string(i) +
                                     " has no support in any kernel eigenvector");
        rows.row(i) = kernel_block.row(i) / norm;
    }
    std::vector<int> centers{0};
    while (static_cast<int>(centers.size()) < Q) {
        int arg = -1;
        double best = -1.0;
        for (int i = 0; i < m; ++i) {
            double nearest = std::numeric_limits<double>::max();
            for (int c : centers)
                nearest = std::min(nearest, 1.0 - std::abs(rows.row(i).dot(rows.row(c))));
            if (nearest > best) {
                best = nearest;
                arg = i;
            }
        }
        centers.push_back(arg);
    }
    std::vector<int> assign(m, 0);
    for (int pass = 0; pass < 100; ++pass) {
        bool changed = false;
        for (int i = 0; i < m; ++i) {
            int arg = 0;
            double best = -std::numeric_limits<double>::max();
            for (int c = 0; c < Q; ++c) {
                const double sim = std::abs(rows.row(i).dot(rows.row(centers[c])));
                if (sim > best) {
                    best = sim;
                    arg = c;
                }
            }
            if (assign[i] != arg) {
                assign[i] = arg;
                changed = true;
            }
        }
        if (!changed) break;
    }
    std::vector<std::vector<int>> groups(Q);
    for (int i = 0; i < m; ++i) groups[assign[i]].push_back(i);
    for (const auto& g : groups)
        if (g.empty()) throw std::runtime_error("label_points: empty kernel-row cluster");
    return label_from_groups(dec, Q, groups);
}

std::vector<int> relevant_components(const SpectralDecomposition& dec, int Q, int k_max) {
    const int m = dec.size();
    if (m < Q + 2) throw std::invalid_argument("relevant_components: need >= Q + 2 eigenvalues");
    const double lambda_max = dec.eigenvalues[m - 1];
    const double tau = 1e-8 * std::max(lambda_max, 1.0);
    if (dec.eigenvalues[m - 1] <= tau) return {};  // no non-zero eigenvalue at all

    const int window_end = std::min(m, Q * k_max);
    auto fallback = [&] {
        std::vector<int> out;
        for (int i = Q; i < std::min(m, 3 * Q); ++i) out.push_back(i);
        return out;
    };
    if (window_end - 1 <= Q) return fallback();

    int cut = -1;
    double best_gap = 0.0;
    for (int i = Q; i + 1 < window_end; ++i) {
        const double lo = std::max(dec.eigenvalues[i], tau);
        const double gap = (dec.eigenvalues[i + 1] - dec.eigenvalues[i]) / lo;
        if (gap > best_gap) {
            best_gap = gap;
            cut = i;
        }
    }
    if (cut < Q) return fallback();
    std::vector<int> out;
    for (int i = Q; i <= cut; ++i) out.push_back(i);
    return out;
}

SubdynamicsPartition assign_and_embed(const SpectralDecomposition& dec,
                                      const std::vector<int>& labels,
                                      const std::vector<int>& relevant) {
    const int m = dec.size();
    if (static_cast<int>(labels.size()) != m)
        throw std::invalid_argument("assign_and_embed: label count mismatch");
    SubdynamicsPartition part;
    part.labels = labels;
    part.Q = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    part.assigned_eigvecs.resize(part.Q);

    for (int r : relevant) {
        if (r < 0 || r >= m) throw std::invalid_argument("assign_and_embed: bad eigvec index");
        int arg = 0;
        double best = -1.0;
        for (int q = 0; q < part.Q; ++q) {
            double mass = 0.0;
            for (int i = 0; i < m; ++i)
                if (labels[i] == q) mass += dec.eigenvectors(i, r) * dec.eigenvectors(i, r);
            if (mass > best) {
                best = mass;
                arg = q;
            }
        }
        part.assigned_eigvecs[arg].push_back(r);
    }

    part.embeddings.resize(part.Q);
    for (int q = 0; q < part.Q; ++q) {
        const auto& cols = part.assigned_eigvecs[q];
        if (cols.size() < 2)
            part.warnings.push_back("cluster " + std::to_string(q) + " has only " +
                                    std::to_string(cols.size()) +
                                    " assigned eigenvectors; embedding is degenerate");
        Eigen::MatrixXd emb(m, static_cast<int>(cols.size()));
        for (int c = 0; c < static_cast<int>(cols.size()); ++c)
            emb.col(c) = dec.eigenvectors.col(cols[c]);
        part.embeddings[q] = std::move(emb);
    }
    return part;
}

}  // namespace attractorscope

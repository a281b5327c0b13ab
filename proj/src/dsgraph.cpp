#include "attractorscope/dsgraph.hpp"

#include <cmath>
#include <stdexcept>

namespace attractorscope {

LaplacianMatrix laplacian(const WeightedGraph& g) {
    const int m = g.size();
    LaplacianMatrix lap;
    lap.degree = Eigen::VectorXi::Zero(m);
    lap.entries = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        int d = 0;
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            if (g.adjacency(i, j) != 0) {
                lap.entries(i, j) = -1.0;
                ++d;
            }
        }
        lap.degree[i] = d;
        lap.entries(i, i) = static_cast<double>(d);
    }
    return lap;
}

std::vector<std::vector<int>> connected_components(const WeightedGraph& g) {
    const int m = g.size();
    std::vector<int> comp(m, -1);
    std::vector<std::vector<int>> out;
    std::vector<int> stack;
    for (int start = 0; start < m; ++start) {
        if (comp[start] >= 0) continue;
        const int id = static_cast<int>(out.size());
        out.emplace_back();
        stack.push_back(start);
        comp[start] = id;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            out[id].push_back(v);
            for (int w = 0; w < m; ++w) {
                if (g.adjacency(v, w) != 0 && comp[w] < 0) {
                    comp[w] = id;
                    stack.push_back(w);
                }
            }
        }
        std::sort(out[id].begin(), out[id].end());
    }
    // scanning from node 0 upward already orders components by smallest member
    return out;
}

WeightedGraph build_theory_graph(int K, int N) {
    if (K < 1) throw std::invalid_argument("build_theory_graph: K must be >= 1");
    if (N < 3) throw std::invalid_argument("build_theory_graph: N must be >= 3");
    const int m = K * N;
    WeightedGraph g;
    g.adjacency = Eigen::MatrixXi::Zero(m, m);
    auto connect = [&g](int a, int b) {
        g.adjacency(a, b) = 1;
        g.adjacency(b, a) = 1;
    };
    g.path_index.reserve(m);
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) {
            const int node = k * N + n;
            if (n + 1 < N) connect(node, node + 1);
            g.path_index.emplace_back(k, n);
        }
    }
    // terminal nodes close into a cycle; K = 2 degenerates to one edge
    if (K == 2) {
        connect(N - 1, 2 * N - 1);
    } else if (K >= 3) {
        for (int k = 0; k < K; ++k) connect(k * N + N - 1, ((k + 1) % K) * N + N - 1);
    }
    g.weights = g.adjacency.cast<double>();
    g.weights.diagonal().setOnes();
    return g;
}

WeightedGraph build_multi_theory_graph(int Q, int K, int N) {
    if (Q < 1) throw std::invalid_argument("build_multi_theory_graph: Q must be >= 1");
    const WeightedGraph block = build_theory_graph(K, N);
    const int n = block.size();
    const int m = Q * n;
    WeightedGraph g;
    g.adjacency = Eigen::MatrixXi::Zero(m, m);
    g.weights = Eigen::MatrixXd::Zero(m, m);
    g.path_index.reserve(m);
    for (int q = 0; q < Q; ++q) {
        g.adjacency.block(q * n, q * n, n, n) = block.adjacency;
        g.weights.block(q * n, q * n, n, n) = block.weights;
        for (const auto& [k, pos] : block.path_index) g.path_index.emplace_back(q * K + k, pos);
    }
    return g;
}

CirculantBlocks circulant_blocks(int K, int N) {
    if (K < 3) throw std::invalid_argument("circulant_blocks: K must be >= 3");
    if (N < 2) throw std::invalid_argument("circulant_blocks: N must be >= 2");
    CirculantBlocks cb;
    cb.B0 = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i + 1 < N; ++i) {
        cb.B0(i, i + 1) = 1.0;
        cb.B0(i + 1, i) = 1.0;
    }
    cb.B0(0, 0) = 1.0;
    cb.B0(N - 1, N - 1) = -1.0;
    cb.B1 = Eigen::MatrixXd::Zero(N, N);
    cb.B1(N - 1, N - 1) = 1.0;

    // first block row [B0, B1, 0, ..., 0, B1], then cyclic shifts
    cb.J = Eigen::MatrixXd::Zero(K * N, K * N);
    for (int r = 0; r < K; ++r) {
        cb.J.block(r * N, r * N, N, N) = cb.B0;
        cb.J.block(r * N, ((r + 1) % K) * N, N, N) += cb.B1;
        cb.J.block(r * N, ((r + K - 1) % K) * N, N, N) += cb.B1;
    }

    cb.H.reserve(K);
    for (int j = 0; j < K; ++j)
        cb.H.push_back(cb.B0 + 2.0 * std::cos(2.0 * M_PI * j / K) * cb.B1);

    if (N >= 3) {
        const Eigen::MatrixXd L = laplacian(build_theory_graph(K, N)).entries;
        const Eigen::MatrixXd expected =
            2.0 * Eigen::MatrixXd::Identity(K * N, K * N) - cb.J;
        if ((L - expected).cwiseAbs().maxCoeff() != 0.0)
            throw std::logic_error("circulant_blocks: L != 2I - J");
    }
    return cb;
}

}  // namespace attractorscope

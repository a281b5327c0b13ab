#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "attractorscope/dsgraph.hpp"
#include "attractorscope/spectral.hpp"

using namespace attractorscope;

namespace {

// block-diagonal union of two graphs (used to build distinguishable clusters)
WeightedGraph disjoint_union(const WeightedGraph& a, const WeightedGraph& b) {
    WeightedGraph g;
    const int n = a.size(), m = b.size();
    g.adjacency = Eigen::MatrixXi::Zero(n + m, n + m);
    g.adjacency.topLeftCorner(n, n) = a.adjacency;
    g.adjacency.bottomRightCorner(m, m) = b.adjacency;
    g.weights = g.adjacency.cast<double>();
    int t_offset = 0;
    for (const auto& [t, p] : a.path_index) {
        g.path_index.emplace_back(t, p);
        t_offset = std::max(t_offset, t + 1);
    }
    for (const auto& [t, p] : b.path_index) g.path_index.emplace_back(t + t_offset, p);
    return g;
}

}  // namespace

TEST_CASE("3-node path spectrum is {0, 1, 3}") {
    // characteristic polynomial of [[1,-1,0],[-1,2,-1],[0,-1,1]] expands to
    // lambda (lambda - 1) (lambda - 3)
    const auto dec = eigendecompose(laplacian(build_theory_graph(1, 3)));
    CHECK(dec.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dec.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(dec.eigenvalues[2] == doctest::Approx(3.0));
}

TEST_CASE("1x1 zero matrix decomposes to eigenvalue 0, eigenvector 1") {
    const auto dec = eigendecompose(Eigen::MatrixXd::Zero(1, 1));
    CHECK(dec.eigenvalues[0] == 0.0);
    CHECK(dec.eigenvectors(0, 0) == 1.0);
}

TEST_CASE("asymmetric input is rejected") {
    Eigen::MatrixXd bad(2, 2);
    bad << 0, 1, 1 + 1e-9, 0;
    CHECK_THROWS_AS(eigendecompose(bad), std::invalid_argument);
}

TEST_CASE("decomposition invariants hold on a theory-graph Laplacian") {
    const auto L = laplacian(build_theory_graph(4, 6)).entries;
    const auto dec = eigendecompose(L);
    const int n = dec.size();
    const Eigen::MatrixXd gram =
        dec.eigenvectors.transpose() * dec.eigenvectors - Eigen::MatrixXd::Identity(n, n);
    CHECK(gram.cwiseAbs().maxCoeff() < 1e-8);
    const Eigen::MatrixXd rebuilt =
        dec.eigenvectors * dec.eigenvalues.asDiagonal() * dec.eigenvectors.transpose();
    CHECK((rebuilt - L).norm() < 1e-8 * L.norm());
    for (int i = 1; i < n; ++i) CHECK(dec.eigenvalues[i] >= dec.eigenvalues[i - 1]);
}

TEST_CASE("repeated runs are bitwise identical and follow the sign convention") {
    const auto L = laplacian(build_theory_graph(3, 7)).entries;
    const auto a = eigendecompose(L);
    const auto b = eigendecompose(L);
    CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.eigenvectors - b.eigenvectors).cwiseAbs().maxCoeff() == 0.0);
    for (int c = 0; c < a.size(); ++c) {
        int arg = 0;
        a.eigenvectors.col(c).cwiseAbs().maxCoeff(&arg);
        CHECK(a.eigenvectors(arg, c) > 0.0);
    }
}

TEST_CASE("zero-eigenvalue multiplicity counts the sub-dynamics") {
    for (int Q : {1, 2, 3}) {
        const auto dec = eigendecompose(laplacian(build_multi_theory_graph(Q, 3, 5)));
        CHECK(count_subdynamics(dec) == Q);
        const double lambda_max = dec.eigenvalues[dec.size() - 1];
        int below = 0;
        for (int i = 0; i < dec.size(); ++i)
            if (dec.eigenvalues[i] <= 1e-8 * lambda_max) ++below;
        CHECK(below == Q);
    }
    CHECK(count_subdynamics(eigendecompose(laplacian(build_theory_graph(1, 9)))) == 1);
}

TEST_CASE("kernel eigenvectors span the component indicators") {
    const auto g = build_multi_theory_graph(2, 3, 5);
    const auto dec = eigendecompose(laplacian(g));
    const auto comps = connected_components(g);
    const Eigen::MatrixXd kernel = dec.eigenvectors.leftCols(2);
    for (const auto& comp : comps) {
        Eigen::VectorXd ind = Eigen::VectorXd::Zero(g.size());
        for (int i : comp) ind[i] = 1.0 / std::sqrt(double(comp.size()));
        // the indicator projects onto itself through the kernel block
        CHECK((kernel * (kernel.transpose() * ind) - ind).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("label_points separates a 2-component block graph") {
    const auto g = build_multi_theory_graph(2, 3, 5);
    const auto dec = eigendecompose(laplacian(g));
    const auto labels = label_points(dec, 2, g);
    for (int i = 0; i < 15; ++i) CHECK(labels[i] == 0);
    for (int i = 15; i < 30; ++i) CHECK(labels[i] == 1);

    // row-clustering fallback agrees without the graph
    CHECK(label_points(dec, 2) == labels);
}

TEST_CASE("label_points with Q = 1 marks everything 0") {
    const auto g = build_theory_graph(3, 5);
    const auto dec = eigendecompose(laplacian(g));
    const auto labels = label_points(dec, 1, g);
    for (int l : labels) CHECK(l == 0);
}

TEST_CASE("labels respect node permutations") {
    const auto g = build_multi_theory_graph(2, 3, 4);
    const int m = g.size();
    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[i] = (i * 7 + 5) % m;
    WeightedGraph h;
    h.adjacency = Eigen::MatrixXi::Zero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) h.adjacency(perm[i], perm[j]) = g.adjacency(i, j);
    h.weights = h.adjacency.cast<double>();

    const auto labels_g = label_points(eigendecompose(laplacian(g)), 2, g);
    const auto labels_h = label_points(eigendecompose(laplacian(h)), 2, h);
    // same partition under the permutation
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            CHECK((labels_g[i] == labels_g[j]) == (labels_h[perm[i]] == labels_h[perm[j]]));
}

TEST_CASE("relevant components of single theory graphs") {
    {
        const auto dec = eigendecompose(laplacian(build_theory_graph(3, 5)));
        const auto relevant = relevant_components(dec, 1);
        REQUIRE(relevant.size() == 2);  // one multiplicity-2 pair
        CHECK(relevant[0] == 1);
        CHECK(relevant[1] == 2);
        CHECK(dec.eigenvalues[1] == doctest::Approx(dec.eigenvalues[2]));
    }
    {
        const auto dec = eigendecompose(laplacian(build_theory_graph(5, 5)));
        const auto relevant = relevant_components(dec, 1);
        REQUIRE(relevant.size() == 4);  // two multiplicity-2 pairs
        for (int i = 0; i < 4; ++i) CHECK(relevant[i] == i + 1);
    }
}

TEST_CASE("relevant components of the two-cluster toy span u3..u6") {
    const auto dec = eigendecompose(laplacian(build_multi_theory_graph(2, 3, 5)));
    const auto relevant = relevant_components(dec, 2);
    // 1-based u^3..u^6
    CHECK(relevant == std::vector<int>{2, 3, 4, 5});
}

TEST_CASE("assign_and_embed splits eigenvectors by support") {
    // clusters of different path lengths so the degenerate pairs stay within
    // one block each
    const auto g = disjoint_union(build_theory_graph(3, 5), build_theory_graph(3, 7));
    const auto dec = eigendecompose(laplacian(g));
    const auto labels = label_points(dec, 2, g);
    const auto part = assign_and_embed(dec, labels, {2, 3, 4, 5});
    REQUIRE(part.Q == 2);
    CHECK(part.assigned_eigvecs[0].size() == 2);
    CHECK(part.assigned_eigvecs[1].size() == 2);

    // off-cluster rows collapse to zero
    for (int q = 0; q < 2; ++q) {
        const auto& emb = part.embeddings[q];
        double max_norm = 0.0;
        for (int i = 0; i < emb.rows(); ++i) max_norm = std::max(max_norm, emb.row(i).norm());
        for (int i = 0; i < emb.rows(); ++i)
            if (labels[i] != q) CHECK(emb.row(i).norm() < 1e-6 * max_norm);
    }
}

TEST_CASE("assign_and_embed with Q = 1 keeps everything in cluster 0") {
    const auto g = build_theory_graph(3, 5);
    const auto dec = eigendecompose(laplacian(g));
    const std::vector<int> labels(g.size(), 0);
    const auto part = assign_and_embed(dec, labels, {1, 2});
    CHECK(part.assigned_eigvecs[0].size() == 2);
    CHECK(part.warnings.empty());
}

TEST_CASE("degenerate cluster embeddings are flagged") {
    const auto g = build_theory_graph(3, 5);
    const auto dec = eigendecompose(laplacian(g));
    const std::vector<int> labels(g.size(), 0);
    const auto part = assign_and_embed(dec, labels, {1});
    CHECK(part.warnings.size() == 1);
}

TEST_CASE("eigendecompose handles dense symmetric matrices beyond Laplacians") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd r(12, 12);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) r(i, j) = gauss(rng);
    const Eigen::MatrixXd sym = 0.5 * (r + r.transpose());
    const auto dec = eigendecompose(sym);
    const Eigen::MatrixXd rebuilt =
        dec.eigenvectors * dec.eigenvalues.asDiagonal() * dec.eigenvectors.transpose();
    CHECK((rebuilt - sym).cwiseAbs().maxCoeff() < 1e-9 * sym.cwiseAbs().maxCoeff() * 12);
}

TEST_CASE("points without kernel support are rejected") {
    SpectralDecomposition dec;
    dec.eigenvalues = Eigen::Vector3d(0.0, 1.0, 2.0);
    dec.eigenvectors = Eigen::Matrix3d::Zero();
    dec.eigenvectors(1, 0) = 1.0;  // point 0 has no mass in the kernel block
    dec.eigenvectors(0, 1) = 1.0;
    dec.eigenvectors(2, 2) = 1.0;
    CHECK_THROWS_WITH_AS(label_points(dec, 1), doctest::Contains("no support"),
                         std::runtime_error);
}

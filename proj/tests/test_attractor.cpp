#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "attractorscope/attractor.hpp"
#include "attractorscope/dsgraph.hpp"
#include "attractorscope/spectral.hpp"

using namespace attractorscope;

namespace {

EmbeddingLine line2(double ax, double ay, double dx, double dy) {
    EmbeddingLine l;
    l.anchor = Eigen::Vector2d(ax, ay);
    l.direction = Eigen::Vector2d(dx, dy).normalized();
    l.member_points = {0, 1};
    return l;
}

// partition + graph + lines for the single-cluster K=3, N=5 toy
struct ToySetup {
    WeightedGraph graph;
    SubdynamicsPartition part;
    std::vector<EmbeddingLine> lines;
};

ToySetup toy_setup() {
    ToySetup s;
    s.graph = build_theory_graph(3, 5);
    const auto dec = eigendecompose(laplacian(s.graph));
    const std::vector<int> labels(s.graph.size(), 0);
    s.part = assign_and_embed(dec, labels, {1, 2});
    s.lines = extract_lines(s.part, 0, s.graph);
    return s;
}

}  // namespace

TEST_CASE("perpendicular axes cross at the origin") {
    const auto p = intersect_pair(line2(0, 0, 1, 0), line2(0, 1, 0, -1));
    CHECK(p.norm() < 1e-12);
}

TEST_CASE("parallel lines raise an error carrying the cosine") {
    try {
        intersect_pair(line2(0, 0, 1, 0), line2(0, 1, 1, 0));
        FAIL("expected ParallelLinesError");
    } catch (const ParallelLinesError& e) {
        CHECK(e.cosine == doctest::Approx(1.0));
    }
}

TEST_CASE("skew 3-D lines meet at the closest-point midpoint") {
    EmbeddingLine r, s;
    r.anchor = Eigen::Vector3d(0, 0, 0);
    r.direction = Eigen::Vector3d(1, 0, 0);
    r.member_points = {0, 1};
    s.anchor = Eigen::Vector3d(1, 0, 1);
    s.direction = Eigen::Vector3d(0, 1, 0);
    s.member_points = {2, 3};
    const auto p = intersect_pair(r, s);
    CHECK((p - Eigen::Vector3d(1, 0, 0.5)).norm() < 1e-12);

    // brute-force grid minimization of the pair distance agrees
    double best = std::numeric_limits<double>::max();
    Eigen::Vector3d best_mid;
    for (double alpha = -3; alpha <= 3; alpha += 1e-2) {
        for (double beta = -3; beta <= 3; beta += 1e-2) {
            const Eigen::Vector3d a = r.anchor + alpha * r.direction;
            const Eigen::Vector3d b = s.anchor + beta * s.direction;
            if ((a - b).squaredNorm() < best) {
                best = (a - b).squaredNorm();
                best_mid = 0.5 * (a + b);
            }
        }
    }
    CHECK((p - best_mid).norm() < 2e-2);
}

TEST_CASE("intersect_pair is symmetric") {
    const auto a = line2(0.3, -0.1, 2, 1);
    const auto b = line2(-1.0, 0.7, -1, 3);
    const auto p = intersect_pair(a, b);
    const auto q = intersect_pair(b, a);
    CHECK((p - q).norm() < 1e-12);
}

TEST_CASE("toy graph yields three origin-crossing lines") {
    auto s = toy_setup();
    REQUIRE(s.lines.size() == 3);
    for (const auto& line : s.lines) {
        CHECK(line.direction.norm() == doctest::Approx(1.0));
        // distance of the origin from the line
        const Eigen::VectorXd rel = -line.anchor;
        const Eigen::VectorXd perp = rel - rel.dot(line.direction) * line.direction;
        CHECK(perp.norm() < 1e-10);
        CHECK(line.member_points.size() == 5);
    }
}

TEST_CASE("tracing degree-1 heads recovers the paths without metadata") {
    auto s = toy_setup();
    s.graph.path_index.clear();
    const auto lines = extract_lines(s.part, 0, s.graph);
    REQUIRE(lines.size() == 3);
    std::vector<std::vector<int>> members;
    for (const auto& l : lines) {
        auto m = l.member_points;
        std::sort(m.begin(), m.end());
        members.push_back(m);
    }
    std::sort(members.begin(), members.end());
    CHECK(members[0] == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(members[1] == std::vector<int>{5, 6, 7, 8, 9});
    CHECK(members[2] == std::vector<int>{10, 11, 12, 13, 14});
}

TEST_CASE("toy attractor estimate sits at the common crossing") {
    auto s = toy_setup();
    TrajectorySet data;
    data.sampling_frequency = 1.0;
    for (int k = 0; k < 3; ++k) {
        Trajectory t;
        t.dt = 1.0;
        for (int n = 0; n < 5; ++n) {
            StateSample sample;
            sample.position = Eigen::Vector2d(k, n);
            sample.velocity = Eigen::Vector2d(0, 1);
            t.samples.push_back(sample);
        }
        data.trajectories.push_back(t);
    }
    const auto est = find_attractor(s.lines, s.part, 0, data);
    CHECK(est.embedding_point.norm() < 1e-8);
    CHECK(est.intersection_spread < 1e-8);
    // u* lies within 1e-6 of every line
    for (const auto& line : s.lines) {
        const Eigen::VectorXd rel = est.embedding_point - line.anchor;
        const Eigen::VectorXd perp = rel - rel.dot(line.direction) * line.direction;
        CHECK(perp.norm() < 1e-6);
    }
}

TEST_CASE("fewer than two lines is an error") {
    auto s = toy_setup();
    TrajectorySet data;
    data.sampling_frequency = 1.0;
    s.lines.resize(1);
    CHECK_THROWS_AS(find_attractor(s.lines, s.part, 0, data), std::runtime_error);
}

TEST_CASE("all-parallel line sets are an error") {
    auto s = toy_setup();
    TrajectorySet data;
    data.sampling_frequency = 1.0;
    std::vector<EmbeddingLine> parallel = {line2(0, 0, 1, 0), line2(0, 1, 1, 0),
                                           line2(0, 2, -1, 0)};
    CHECK_THROWS_AS(find_attractor(parallel, s.part, 0, data), std::runtime_error);
}

TEST_CASE("uniform scaling of the embedding scales the crossing identically") {
    const auto a1 = line2(1, 0, 1, 1);
    const auto b1 = line2(0, 1, 1, -1);
    const auto p1 = intersect_pair(a1, b1);
    const double c = 7.5;
    auto a2 = a1, b2 = b1;
    a2.anchor *= c;
    b2.anchor *= c;
    const auto p2 = intersect_pair(a2, b2);
    CHECK((p2 - c * p1).norm() < 1e-10);
}

TEST_CASE("attractor error normalizes by the per-axis std") {
    TrajectorySet data;
    data.sampling_frequency = 1.0;
    Trajectory t;
    t.dt = 1.0;
    // x has std exactly 2, y has std exactly 1
    for (auto [x, y] : {std::pair{-2.0, -1.0}, {-2.0, 1.0}, {2.0, -1.0}, {2.0, 1.0}}) {
        StateSample s;
        s.position = Eigen::Vector2d(x, y);
        s.velocity = Eigen::Vector2d(1, 0);
        t.samples.push_back(s);
    }
    data.trajectories.push_back(t);

    AttractorEstimate est;
    est.original_point = Eigen::Vector2d(0.0, 0.0);
    CHECK(attractor_error(est, Eigen::Vector2d(0.0, 0.0), data) == 0.0);
    // unit offset in the std-2 dimension
    CHECK(attractor_error(est, Eigen::Vector2d(1.0, 0.0), data) == doctest::Approx(0.5));

    // zero std dimension is rejected
    TrajectorySet flat;
    flat.sampling_frequency = 1.0;
    Trajectory ft;
    ft.dt = 1.0;
    for (int i = 0; i < 3; ++i) {
        StateSample s;
        s.position = Eigen::Vector2d(i, 5.0);
        s.velocity = Eigen::Vector2d(1, 0);
        ft.samples.push_back(s);
    }
    flat.trajectories.push_back(ft);
    CHECK_THROWS_AS(attractor_error(est, Eigen::Vector2d(0, 5), flat), std::runtime_error);
}

TEST_CASE("degenerate trajectories in the embedding are skipped with a warning") {
    auto s = toy_setup();
    // collapse one trajectory's embedding rows
    for (int n = 0; n < 5; ++n) s.part.embeddings[0].row(10 + n).setZero();
    std::vector<std::string> warnings;
    const auto lines = extract_lines(s.part, 0, s.graph, &warnings);
    CHECK(lines.size() == 2);
    CHECK(warnings.size() == 1);
}

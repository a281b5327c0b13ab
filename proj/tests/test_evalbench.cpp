#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "attractorscope/evalbench.hpp"

using namespace attractorscope;

namespace {

// two well-separated blobs, one short trajectory per point pair
TrajectorySet two_blobs(int per_blob, double separation, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.2);
    TrajectorySet data;
    data.sampling_frequency = 10.0;
    for (int blob = 0; blob < 2; ++blob) {
        const double cx = blob == 0 ? 0.0 : separation;
        for (int i = 0; i < per_blob; ++i) {
            Trajectory t;
            t.dt = 0.1;
            for (int s = 0; s < 2; ++s) {
                StateSample sample;
                sample.position = Eigen::Vector2d(cx + gauss(rng), gauss(rng));
                sample.velocity = Eigen::Vector2d(gauss(rng), gauss(rng));
                t.samples.push_back(sample);
            }
            data.trajectories.push_back(t);
        }
    }
    return data;
}

std::vector<int> blob_truth(int per_blob) {
    std::vector<int> truth;
    for (int blob = 0; blob < 2; ++blob)
        truth.insert(truth.end(), per_blob * 2, blob);
    return truth;
}

}  // namespace

TEST_CASE("permutation accuracy maximizes over label renamings") {
    CHECK(permutation_accuracy({0, 0, 1, 1}, {1, 1, 0, 0}) == 1.0);
    CHECK(permutation_accuracy({0, 1, 0, 1}, {0, 0, 1, 1}) == 0.5);
    CHECK(permutation_accuracy({0, 0, 0}, {0, 0, 1}) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("labels_from_attractors follows terminal proximity") {
    TrajectorySet data;
    data.sampling_frequency = 1.0;
    for (double target : {0.0, 10.0}) {
        Trajectory t;
        t.dt = 1.0;
        for (int i = 0; i < 3; ++i) {
            StateSample s;
            s.position = Eigen::Vector2d(target + 0.1 * i, 0.0);
            s.velocity = Eigen::Vector2d(1, 0);
            t.samples.push_back(s);
        }
        data.trajectories.push_back(t);
    }
    const std::vector<Eigen::VectorXd> attractors = {Eigen::Vector2d(0, 0),
                                                     Eigen::Vector2d(10, 0)};
    CHECK(labels_from_attractors(data, attractors) ==
          std::vector<int>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("kernel k-means separates distant blobs") {
    const auto data = two_blobs(10, 8.0, 1);
    const auto truth = blob_truth(10);
    const auto result = kernel_kmeans(data, 2, 1.0, 0, &truth);
    CHECK(result.accuracy == 1.0);
    for (std::size_t i = 1; i < result.objective_history.size(); ++i)
        CHECK(result.objective_history[i] <= result.objective_history[i - 1] + 1e-9);
}

TEST_CASE("kernel k-means with Q = 1 labels everything together") {
    const auto data = two_blobs(5, 8.0, 2);
    const std::vector<int> one_cluster(data.total_samples(), 0);
    const auto result = kernel_kmeans(data, 1, 1.0, 0, &one_cluster);
    CHECK(result.accuracy == 1.0);
    for (int l : result.labels) CHECK(l == 0);
}

TEST_CASE("GMM separates distant gaussians with a monotone log-likelihood") {
    const auto data = two_blobs(12, 10.0, 3);
    const auto truth = blob_truth(12);
    const auto result = gmm_em(data, 2, 0, &truth);
    CHECK(result.accuracy == 1.0);
    for (std::size_t i = 1; i < result.objective_history.size(); ++i)
        CHECK(result.objective_history[i] >=
              result.objective_history[i - 1] - 1e-9 * (1 + std::abs(result.objective_history[i - 1])));
}

TEST_CASE("spectral baseline separates distant blobs") {
    const auto data = two_blobs(10, 8.0, 4);
    const auto truth = blob_truth(10);
    const auto result = spectral_baseline(data, 2, 5, &truth);
    CHECK(result.accuracy == 1.0);
}

TEST_CASE("zero-velocity candidates localize a linear sink") {
    // trajectories of dx/dt = -x sampled coarsely toward the origin
    TrajectorySet data;
    data.sampling_frequency = 1.0;
    for (double x0 : {2.0, -1.5, 1.0}) {
        Trajectory t;
        t.dt = 1.0;
        double x = x0;
        for (int i = 0; i < 12; ++i) {
            StateSample s;
            s.position = Eigen::Vector2d(x, 0.0);
            s.velocity = Eigen::Vector2d(-x, 0.0);
            t.samples.push_back(s);
            x *= std::exp(-1.0);
        }
        data.trajectories.push_back(t);
    }
    const auto candidates = zero_velocity_candidates(data, 0.1);
    CHECK(!candidates.empty());
    for (const auto& c : candidates) CHECK(c.norm() < 0.2);
}

TEST_CASE("a slow corner produces a spurious candidate") {
    TrajectorySet data;
    data.sampling_frequency = 10.0;
    Trajectory t;
    t.dt = 0.1;
    // fast approach, near stop at the corner (5, 5), fast exit toward a sink
    // at the origin where it stops again
    const std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> shape = {
        {{8.0, 5.0}, {-3.0, 0.0}}, {{6.0, 5.0}, {-2.0, 0.0}}, {{5.0, 5.0}, {-0.01, -0.01}},
        {{5.0, 4.0}, {0.0, -2.0}}, {{5.0, 2.0}, {0.0, -3.0}}, {{5.0, 0.5}, {0.0, -1.0}},
        {{5.0, 0.0}, {0.0, -0.005}},
    };
    for (const auto& [p, v] : shape) {
        StateSample s;
        s.position = p;
        s.velocity = v;
        t.samples.push_back(s);
    }
    data.trajectories.push_back(t);
    const auto candidates = zero_velocity_candidates(data, 0.05);
    REQUIRE(candidates.size() >= 2);  // the true stop and the corner
    bool corner = false;
    for (const auto& c : candidates)
        if ((c - Eigen::Vector2d(5, 5)).norm() < 0.5) corner = true;
    CHECK(corner);
}

TEST_CASE("fraction near 1 returns nearly all points of a decaying run") {
    TrajectorySet data;
    data.sampling_frequency = 1.0;
    Trajectory t;
    t.dt = 1.0;
    for (int i = 0; i < 8; ++i) {
        StateSample s;
        s.position = Eigen::Vector2d(10.0 * i, 0.0);  // spaced beyond the merge radius
        s.velocity = Eigen::Vector2d(1.0 / (i + 1.0), 0.0);
        t.samples.push_back(s);
    }
    data.trajectories.push_back(t);
    // slow samples dominate the count; the mean sits well above the median
    CHECK(zero_velocity_candidates(data, 0.999).size() >= 6);
    CHECK(zero_velocity_candidates(data, 0.999).size() >
          zero_velocity_candidates(data, 0.2).size());
}

TEST_CASE("metrics vanish when the field reproduces the reference velocities") {
    TrajectorySet data;
    data.sampling_frequency = 10.0;
    Trajectory t;
    t.dt = 0.1;
    for (int i = 0; i < 10; ++i) {
        StateSample s;
        s.position = Eigen::Vector2d(0.1 * i, 0.05 * i);
        s.velocity = Eigen::Vector2d(1.0, 0.5);
        t.samples.push_back(s);
    }
    data.trajectories.push_back(t);

    const auto exact = [](const Eigen::VectorXd&) -> Eigen::VectorXd {
        return Eigen::Vector2d(1.0, 0.5);
    };
    const auto m = metrics(data.trajectories, exact);
    CHECK(m.rmse == doctest::Approx(0.0));
    CHECK(m.cosine_err == doctest::Approx(0.0));
    CHECK(m.dtwd < 1e-9);

    // doubling the speed keeps the direction but not the magnitude
    const auto doubled = [](const Eigen::VectorXd&) -> Eigen::VectorXd {
        return Eigen::Vector2d(2.0, 1.0);
    };
    const auto m2 = metrics(data.trajectories, doubled);
    CHECK(m2.cosine_err == doctest::Approx(0.0));
    const double mean_speed = Eigen::Vector2d(1.0, 0.5).norm();
    CHECK(m2.rmse == doctest::Approx(mean_speed));
}

TEST_CASE("dtw distance is symmetric and zero on identical paths") {
    std::vector<Eigen::VectorXd> a, b;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 15; ++i) a.push_back(Eigen::Vector2d(u(rng), u(rng)));
    for (int i = 0; i < 9; ++i) b.push_back(Eigen::Vector2d(u(rng), u(rng)));
    CHECK(dtw_distance(a, a) == 0.0);
    CHECK(dtw_distance(a, b) == doctest::Approx(dtw_distance(b, a)));
    CHECK(dtw_distance(a, b) > 0.0);
}

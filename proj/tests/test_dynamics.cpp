#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "attractorscope/dynamics.hpp"

using namespace attractorscope;

TEST_CASE("benchmark fields vanish at their documented equilibria") {
    CHECK(eval_field(BenchmarkSystem::heart(), {1.0, 2.0}).norm() == doctest::Approx(0.0));
    CHECK(eval_field(BenchmarkSystem::heart(), {-1.0, 2.0}).norm() == doctest::Approx(0.0));
    CHECK(eval_field(BenchmarkSystem::duffing(0.3, -1.2, 0.3), {2.0, 0.0}).norm() ==
          doctest::Approx(0.0));
    CHECK(eval_field(BenchmarkSystem::pendulum(), {0.0, 0.0}).norm() == doctest::Approx(0.0));

    for (const auto& name : {"heart", "pendulum", "duffing"}) {
        const auto system = BenchmarkSystem::from_name(name);
        for (const auto& a : system.attractors())
            CHECK(eval_field(system, a).norm() < 1e-12);
    }
}

TEST_CASE("heart field follows its right-hand side") {
    const auto f = eval_field(BenchmarkSystem::heart(), {0.5, 0.5});
    CHECK(f[0] == doctest::Approx(2 * 0.5 - 0.5 * 0.5));
    CHECK(f[1] == doctest::Approx(2 * 0.25 - 0.5));
}

TEST_CASE("eval_field rejects bad input") {
    CHECK_THROWS_AS(BenchmarkSystem::from_name("lorenz"), std::invalid_argument);
    CHECK_THROWS_AS(
        eval_field(BenchmarkSystem::heart(),
                   {std::numeric_limits<double>::quiet_NaN(), 0.0}),
        std::invalid_argument);
    CHECK_THROWS_AS(BenchmarkSystem::duffing(0.3, 1.2, 0.3), std::invalid_argument);
}

TEST_CASE("integration converges to the nearest attractor") {
    // the spiral contracts at exp(-t/2): from (0.5, 0.5) the 10 s terminal
    // distance is 1.6 exp(-5) = 0.0108, frozen here from the fine-step run
    const auto heart = integrate(BenchmarkSystem::heart(), {0.5, 0.5}, 10.0, 100.0);
    const double dist = (heart.samples.back().position - Eigen::Vector2d(1.0, 2.0)).norm();
    CHECK(dist == doctest::Approx(0.0107915).epsilon(1e-4));
    CHECK(dist < 1.2e-2);

    const auto pend = integrate(BenchmarkSystem::pendulum(1.0, 9.81, 0.5), {0.3, 0.0}, 60.0, 10.0);
    CHECK((pend.samples.back().position - Eigen::Vector2d(0.0, 0.0)).norm() < 1e-2);
}

TEST_CASE("duration equal to one recording interval yields two samples") {
    const auto traj = integrate(BenchmarkSystem::heart(), {0.5, 0.5}, 0.01, 100.0);
    CHECK(traj.size() == 2);
}

TEST_CASE("stored velocities are exact field evaluations") {
    const auto system = BenchmarkSystem::duffing();
    const auto traj = integrate(system, {1.6, 0.8}, 0.5, 50.0);
    for (const auto& s : traj.samples) {
        const auto v = eval_field(system, s.position);
        CHECK(s.velocity[0] == v[0]);  // bitwise: velocity is re-evaluated
        CHECK(s.velocity[1] == v[1]);
    }
}

TEST_CASE("RK4 halving the step cuts the error by at least 2^4 with slack") {
    const auto system = BenchmarkSystem::heart();
    auto f = [&system](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return eval_field(system, Eigen::Vector2d(x));
    };
    const Eigen::Vector2d x0(0.5, 0.5);
    const auto ref = integrate_field(f, x0, 1.0, 1.0, 1e-5).samples.back().position;
    const auto coarse = integrate_field(f, x0, 1.0, 1.0, 2e-3).samples.back().position;
    const auto fine = integrate_field(f, x0, 1.0, 1.0, 1e-3).samples.back().position;
    const double e_coarse = (coarse - ref).norm();
    const double e_fine = (fine - ref).norm();
    CHECK(e_coarse / e_fine >= 12.0);
}

TEST_CASE("divergent trajectories report the failing step") {
    auto blowup = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return 5.0 * x; };
    Eigen::VectorXd x0(1);
    x0 << 1e3;
    CHECK_THROWS_WITH_AS(integrate_field(blowup, x0, 10.0, 10.0),
                         doctest::Contains("diverged at recorded step"), std::runtime_error);
}

TEST_CASE("make_dataset produces one trajectory per initial condition") {
    const std::vector<Eigen::Vector2d> ics = {{0.5, 0.5},  {2.0, 3.0},  {1.5, 0.8},
                                              {-0.5, 0.5}, {-2.0, 3.0}, {-1.5, 0.8}};
    const auto set = make_dataset(BenchmarkSystem::heart(), ics, 0.1, 100.0);
    CHECK(set.trajectories.size() == 6);
    CHECK(set.total_samples() == 6 * 11);

    CHECK_THROWS_AS(make_dataset(BenchmarkSystem::heart(), {}, 1.0, 10.0),
                    std::invalid_argument);
}

TEST_CASE("duffing sampled at 200 Hz for 5 s has 1001 samples per trajectory") {
    const auto traj = integrate(BenchmarkSystem::duffing(), {1.6, 0.8}, 5.0, 200.0);
    CHECK(traj.size() == 1001);
}

TEST_CASE("subsample keeps the head sample and divides the frequency") {
    const auto set =
        make_dataset(BenchmarkSystem::heart(), {{0.5, 0.5}}, 1.0, 100.0).subsample(5);
    CHECK(set.sampling_frequency == doctest::Approx(20.0));
    CHECK(set.trajectories[0].size() == 21);
    const auto full = make_dataset(BenchmarkSystem::heart(), {{0.5, 0.5}}, 1.0, 100.0);
    CHECK(set.trajectories[0].samples[1].position ==
          full.trajectories[0].samples[5].position);
}

#include "core/evaluation.hpp"
#include "core/parallel.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace bsqz;

namespace {

Pomdp single_state(double reward) {
    Pomdp m;
    m.n_states = 1;
    m.n_actions = 1;
    m.n_obs = 1;
    m.discount = 0.9;
    m.transition = {Matrix::Ones(1, 1)};
    m.observation = {Matrix::Ones(1, 1)};
    m.reward = Matrix::Constant(1, 1, reward);
    return m;
}

ValueFunction constant_policy(std::size_t n, std::size_t action) {
    ValueFunction g;
    g.vectors.push_back({Vector::Zero(static_cast<Eigen::Index>(n)), action});
    return g;
}

SolverTrace trace_of(std::vector<double> values, SolveStatus status, double bound, std::size_t points) {
    SolverTrace t;
    t.expected_value = std::move(values);
    t.status = status;
    t.value_bound = bound;
    t.n_points = points;
    t.guard_fired = status == SolveStatus::Diverged;
    return t;
}

}  // namespace

TEST_CASE("single-state discounted return is the geometric series") {
    EvalProtocol p;
    p.n_trajectories = 10;
    p.n_repeats = 3;
    p.horizon = 400;
    const auto r = simulate_policy(single_state(1.0), constant_policy(1, 0), p);
    CHECK(std::abs(r.mean - 10.0) <= 1e-6);
    CHECK(r.std == 0.0);
    CHECK(r.per_repeat.size() == 3);
    p.discounted = false;
    p.horizon = 25;
    CHECK(simulate_policy(single_state(1.0), constant_policy(1, 0), p).mean == 25.0);
}

TEST_CASE("zero reward gives exactly zero") {
    Pomdp m = oracle::random_pomdp(5, 2, 3, 4);
    m.reward.setZero();
    EvalProtocol p;
    p.n_trajectories = 50;
    p.horizon = 40;
    const auto r = simulate_policy(m, constant_policy(5, 1), p);
    CHECK(r.mean == 0.0);
    CHECK(r.std == 0.0);
}

TEST_CASE("listening forever costs one per step") {
    EvalProtocol p;
    p.n_trajectories = 20;
    p.horizon = 10;
    p.discounted = false;
    CHECK(simulate_policy(oracle::tiger(), constant_policy(2, 0), p).mean == -10.0);
}

TEST_CASE("always opening a door matches its closed-form expectation") {
    const Pomdp m = oracle::tiger(0.95);
    EvalProtocol p;
    p.n_trajectories = 2000;
    p.n_repeats = 5;
    p.horizon = 60;
    p.seed = 3;
    const auto r = simulate_policy(m, constant_policy(2, 1), p);
    const double expect = -45.0 * (1.0 - std::pow(0.95, 60)) / 0.05;
    // each step is +10 or -100 with equal odds: per-step sd 55, discounted variance sums
    const double sd = 55.0 * std::sqrt((1.0 - std::pow(0.95 * 0.95, 60)) / (1.0 - 0.95 * 0.95));
    CHECK(std::abs(r.mean - expect) <= 5.0 * sd / std::sqrt(2000.0 * 5.0));
}

TEST_CASE("repeat statistics use the sample standard deviation") {
    const Pomdp m = oracle::tiger(0.95);
    EvalProtocol p;
    p.n_trajectories = 100;
    p.n_repeats = 5;
    p.horizon = 30;
    const auto r = simulate_policy(m, constant_policy(2, 2), p);
    double mean = 0.0;
    for (double v : r.per_repeat) mean += v / 5.0;
    double ss = 0.0;
    for (double v : r.per_repeat) ss += (v - mean) * (v - mean);
    CHECK(r.mean == doctest::Approx(mean).epsilon(1e-14));
    CHECK(r.std == doctest::Approx(std::sqrt(ss / 4.0)).epsilon(1e-12));
    CHECK(r.std > 0.0);
}

TEST_CASE("evaluation is reproducible across thread counts and through an identity basis") {
    const Pomdp m = oracle::random_pomdp(6, 3, 3, 12);
    std::mt19937_64 rng(1);
    ValueFunction g;
    for (std::size_t a = 0; a < 3; ++a) g.vectors.push_back({oracle::random_matrix(6, 1, rng).col(0), a});
    EvalProtocol p;
    p.n_trajectories = 200;
    p.horizon = 50;
    p.seed = 8;
    parallel::set_thread_count(1);
    const auto one = simulate_policy(m, g, p);
    parallel::set_thread_count(8);
    const auto many = simulate_policy(m, g, p);
    parallel::set_thread_count(0);
    CHECK(one.per_repeat == many.per_repeat);
    CHECK(simulate_policy(m, g, identity_basis(6), p).per_repeat == one.per_repeat);
}

TEST_CASE("invalid protocols and mismatched value functions are rejected") {
    EvalProtocol p;
    p.n_repeats = 0;
    CHECK_THROWS_AS(simulate_policy(single_state(1), constant_policy(1, 0), p), InvalidArgument);
    CHECK_THROWS_AS(simulate_policy(single_state(1), constant_policy(2, 0), EvalProtocol{}), InvalidArgument);
    CHECK_THROWS_AS(simulate_policy(single_state(1), ValueFunction{}, EvalProtocol{}), InvalidArgument);
}

TEST_CASE("divergence verdicts") {
    CHECK(divergence_verdict(trace_of({9.0, 9.9, 9.99}, SolveStatus::Converged, 10.0, 1)) == Verdict::Converged);
    CHECK(divergence_verdict(trace_of({1.0, 2.0}, SolveStatus::MaxStages, 10.0, 1)) == Verdict::Plateaued);
    CHECK(divergence_verdict(trace_of({1.0, 2.0, 1e3}, SolveStatus::Converged, 10.0, 4)) == Verdict::Diverged);
    CHECK(divergence_verdict(trace_of({-50.0}, SolveStatus::MaxStages, 10.0, 4)) == Verdict::Diverged);
    CHECK(divergence_verdict(trace_of({1.0}, SolveStatus::Diverged, 10.0, 4)) == Verdict::Diverged);
    CHECK(divergence_verdict(trace_of({1.0, NAN}, SolveStatus::MaxStages, 10.0, 4)) == Verdict::Diverged);

    SolverConfig cfg;
    const Pomdp m = single_state(1.0);
    CHECK(divergence_verdict(perseus_solve(make_process(m, Matrix::Ones(1, 1)), {}, cfg).trace) == Verdict::Converged);
}

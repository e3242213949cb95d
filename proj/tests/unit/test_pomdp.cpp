#include "core/pomdp.hpp"
#include "core/sampling.hpp"
#include "core/nmf.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace bsqz;

namespace {

Pomdp two_state(double accuracy) {
    Pomdp m;
    m.n_states = 2;
    m.n_actions = 1;
    m.n_obs = 2;
    m.discount = 0.9;
    m.transition = {Matrix::Identity(2, 2)};
    Matrix o(2, 2);
    o << accuracy, 1 - accuracy, 1 - accuracy, accuracy;
    m.observation = {o};
    m.reward = Matrix::Zero(2, 1);
    return m;
}

// s -> s+1 (last state absorbs), observation reveals the state.
Pomdp chain(std::size_t n) {
    Pomdp m;
    m.n_states = n;
    m.n_actions = 1;
    m.n_obs = n;
    m.discount = 0.9;
    Matrix t = Matrix::Zero(n, n);
    for (std::size_t s = 0; s < n; ++s) t(s, std::min(s + 1, n - 1)) = 1.0;
    m.transition = {t};
    m.observation = {Matrix::Identity(n, n)};
    m.reward = Matrix::Zero(n, 1);
    Vector b0 = Vector::Zero(n);
    b0(0) = 1;
    m.initial_belief = b0;
    return m;
}

Pomdp uniform_obs(std::size_t n, std::size_t nz, std::uint64_t seed) {
    Pomdp m = oracle::random_pomdp(n, 2, nz, seed);
    for (auto& o : m.observation) o.setConstant(1.0 / static_cast<double>(nz));
    return m;
}

}  // namespace

TEST_CASE("a valid two-state model has an empty report") {
    CHECK(validate(two_state(0.85)).ok());
}

TEST_CASE("a transition row summing to 0.9 is reported with its action and row") {
    Pomdp m = oracle::random_pomdp(3, 2, 2, 1);
    m.transition[1].row(2) *= 0.9;
    const auto rep = validate(m);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].action == std::optional<std::size_t>(1));
    CHECK(rep.violations[0].row == std::optional<std::size_t>(2));
    CHECK(rep.summary().find("action 1") != std::string::npos);
    CHECK_THROWS_AS(require_valid(m), InvalidModel);
}

TEST_CASE("discount of one is a range violation") {
    Pomdp m = two_state(0.85);
    m.discount = 1.0;
    const auto rep = validate(m);
    REQUIRE(rep.violations.size() == 1);
    CHECK(rep.violations[0].what.find("discount") != std::string::npos);
}

TEST_CASE("negative entries and a bad initial belief are reported") {
    Pomdp m = two_state(0.85);
    m.observation[0](0, 0) = -0.1;
    m.observation[0](0, 1) = 1.1;
    m.initial_belief = Vector::Constant(2, 0.7);
    const auto rep = validate(m);
    CHECK(rep.violations.size() == 2);
}

TEST_CASE("identity transition with a state-revealing observation gives diagonal selectors") {
    Pomdp m = chain(3);
    m.transition = {Matrix::Identity(3, 3)};
    const auto taz = obs_weighted_transitions(m);
    for (std::size_t z = 0; z < 3; ++z) {
        Matrix expect = Matrix::Zero(3, 3);
        expect(z, z) = 1.0;
        CHECK((taz.at(0, z).dense() - expect).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("observation-weighted maps match loops and sum over z to the transition") {
    const Pomdp m = oracle::random_pomdp(5, 3, 4, 7);
    const auto taz = obs_weighted_transitions(m);
    for (std::size_t a = 0; a < 3; ++a) {
        Matrix sum = Matrix::Zero(5, 5);
        for (std::size_t z = 0; z < 4; ++z) {
            CHECK((taz.at(a, z).dense() - oracle::taz_loops(m, a, z)).cwiseAbs().maxCoeff() < 1e-15);
            sum += oracle::taz_loops(m, a, z);
        }
        CHECK((sum - m.transition[a]).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("uniform observations split the transition evenly") {
    const Pomdp m = uniform_obs(5, 4, 3);
    const auto taz = obs_weighted_transitions(m);
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t z = 0; z < 4; ++z) CHECK((taz.at(a, z).dense() - m.transition[a] / 4.0).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("sparse and dense transition maps multiply alike") {
    Matrix d = Matrix::Zero(6, 6);
    d(0, 1) = 0.5;
    d(3, 2) = 0.25;
    d(5, 5) = 1.0;
    const TransitionMap sparse(d);
    CHECK(sparse.is_sparse());
    const TransitionMap dense(Matrix::Constant(6, 6, 0.1));
    CHECK_FALSE(dense.is_sparse());
    const Vector x = Vector::LinSpaced(6, 1.0, 6.0);
    CHECK((sparse.left_multiply(x) - d.transpose() * x).norm() < 1e-15);
    CHECK((sparse.multiply(x) - d * x).norm() < 1e-15);
}

TEST_CASE("85 percent accurate observation of state 0 gives 0.85 / 0.15") {
    const Pomdp m = two_state(0.85);
    const Vector b = belief_update(m, Vector::Constant(2, 0.5), 0, 0);
    CHECK(b(0) == doctest::Approx(0.85).epsilon(1e-15));
    CHECK(b(1) == doctest::Approx(0.15).epsilon(1e-15));
}

TEST_CASE("uniform belief stays uniform under doubly stochastic dynamics and uninformative observations") {
    Pomdp m = uniform_obs(4, 3, 11);
    Matrix t(4, 4);
    t << 0.1, 0.2, 0.3, 0.4, 0.4, 0.1, 0.2, 0.3, 0.3, 0.4, 0.1, 0.2, 0.2, 0.3, 0.4, 0.1;
    m.transition = {t, t.transpose()};
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t z = 0; z < 3; ++z)
            CHECK((belief_update(m, Vector::Constant(4, 0.25), a, z) - Vector::Constant(4, 0.25)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("deterministic dynamics and observations give an indicator belief") {
    const Pomdp m = chain(4);
    Vector b = Vector::Zero(4);
    b(1) = 1.0;
    const Vector out = belief_update(m, b, 0, 2);
    CHECK(out(2) == 1.0);
    CHECK(out.sum() == 1.0);
    CHECK_THROWS_AS(belief_update(m, b, 0, 3), ImpossibleObservation);
}

TEST_CASE("observation likelihoods: uniform, deterministic and brute force") {
    const Pomdp u = uniform_obs(5, 4, 5);
    for (std::size_t z = 0; z < 4; ++z) CHECK(observation_likelihood(u, Vector::Constant(5, 0.2), 1, z) == doctest::Approx(0.25));

    const Pomdp c = chain(4);
    Vector b = Vector::Zero(4);
    b(0) = 1;
    for (std::size_t z = 0; z < 4; ++z) CHECK(observation_likelihood(c, b, 0, z) == (z == 1 ? 1.0 : 0.0));

    std::mt19937_64 rng(3);
    const Pomdp m = oracle::random_pomdp(5, 3, 4, 13);
    for (int trial = 0; trial < 20; ++trial) {
        const Vector x = oracle::random_belief(5, rng);
        for (std::size_t a = 0; a < 3; ++a) {
            const Vector dist = observation_distribution(m, x, a);
            CHECK(dist.sum() == doctest::Approx(1.0).epsilon(1e-12));
            for (std::size_t z = 0; z < 4; ++z)
                CHECK(observation_likelihood(m, x, a, z) == doctest::Approx(oracle::likelihood_loops(m, x, a, z)).epsilon(1e-13));
        }
    }
}

TEST_CASE("belief update properties on random models") {
    std::mt19937_64 rng(21);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Pomdp m = oracle::random_pomdp(6, 2, 3, seed);
        const auto taz = obs_weighted_transitions(m);
        const Vector b = oracle::random_belief(6, rng);
        for (std::size_t a = 0; a < 2; ++a) {
            Matrix sum = Matrix::Zero(6, 6);
            for (std::size_t z = 0; z < 3; ++z) {
                const Vector out = belief_update(m, b, a, z);
                CHECK(std::abs(out.sum() - 1.0) <= 1e-9);
                CHECK(out.minCoeff() >= 0.0);
                const Vector via_map = taz.at(a, z).left_multiply(b);
                CHECK((out - via_map / via_map.sum()).cwiseAbs().maxCoeff() < 1e-12);
                CHECK((out - oracle::belief_update_loops(m, b, a, z)).cwiseAbs().maxCoeff() < 1e-12);
                sum += taz.at(a, z).dense();
            }
            CHECK(std::abs(b.dot(sum * Vector::Ones(6)) - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("synthetic low-rank models") {
    SUBCASE("k = n is a valid random model") {
        const Pomdp m = synth_lowrank_pomdp(5, 5, 3);
        CHECK(validate(m).ok());
    }
    SUBCASE("k=2, n=10: sampled beliefs have numerical rank 2") {
        const Pomdp m = synth_lowrank_pomdp(2, 10, 1);
        CHECK(validate(m).ok());
        const auto B = sample_beliefs(m, 500, 4);
        CHECK(oracle::svd_rank(B.columns, 1e-8) == 2);
    }
    SUBCASE("k=3, n=12: P-NMF with k=3 reconstructs the sampled beliefs") {
        const Pomdp m = synth_lowrank_pomdp(3, 12, 2);
        const auto B = sample_beliefs(m, 300, 5);
        NmfConfig cfg;
        cfg.k = 3;
        cfg.restarts = 3;
        const auto r = pnmf_factorize(B.columns, cfg);
        const Matrix& F = r.basis.F;
        CHECK((B.columns - F * F.transpose() * B.columns).norm() < 1e-6);
    }
    CHECK_THROWS_AS(synth_lowrank_pomdp(4, 3, 0), InvalidArgument);
}

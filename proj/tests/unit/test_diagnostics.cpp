#include "core/compressed.hpp"
#include "core/diagnostics.hpp"
#include "core/sampling.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace bsqz;

namespace {

std::vector<Matrix> loop_maps(const Pomdp& m) {
    std::vector<Matrix> out;
    for (std::size_t a = 0; a < m.n_actions; ++a)
        for (std::size_t z = 0; z < m.n_obs; ++z) out.push_back(oracle::taz_loops(m, a, z));
    return out;
}

ValueFunction random_gamma(std::size_t n, std::size_t count, std::mt19937_64& rng) {
    ValueFunction g;
    for (std::size_t i = 0; i < count; ++i) g.vectors.push_back({oracle::random_matrix(n, 1, rng, -3, 3).col(0), i % 2});
    return g;
}

std::vector<Vector> as_list(const ValueFunction& g) {
    std::vector<Vector> out;
    for (const auto& v : g.vectors) out.push_back(v.values);
    return out;
}

CompressionBasis block_basis(std::size_t k, std::size_t n) {
    const auto block = synth_block_assignment(k, n);
    Matrix F = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (std::size_t s = 0; s < n; ++s) F(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(block[s])) = 1.0;
    for (Eigen::Index j = 0; j < F.cols(); ++j) F.col(j) /= F.col(j).norm();
    return transpose_basis(F, CompressionMethod::Pnmf);
}

struct Solved {
    ValueFunction original, compressed;
    Matrix beliefs;
};

Solved solve_both(const Pomdp& m, const CompressionBasis& basis) {
    Solved s;
    s.beliefs = sample_beliefs(m, 150, 2).columns;
    SolverConfig cfg;
    cfg.tol = 1e-8;
    cfg.max_stages = 2000;
    s.original = perseus_solve(make_process(m, s.beliefs), {}, cfg).value;
    s.compressed = perseus_solve(make_process(m, build_compressed(m, basis), s.beliefs), {}, cfg).value;
    return s;
}

}  // namespace

TEST_CASE("approximated backup") {
    std::mt19937_64 rng(3);
    const Pomdp m = oracle::random_pomdp(3, 2, 2, 6);
    SUBCASE("A = I is the exact backup") {
        const auto proc = make_process(m, Matrix::Identity(3, 3));
        for (int t = 0; t < 10; ++t) {
            const auto g = random_gamma(3, 4, rng);
            const Vector b = oracle::random_belief(3, rng);
            CHECK(std::abs(vbar_value(m, Matrix::Identity(3, 3), g, b) - b.dot(point_backup(proc, g, b).values)) <= 1e-12);
        }
    }
    SUBCASE("A = 0 on a zero value function gives zero") {
        ValueFunction zero;
        zero.vectors.push_back({Vector::Zero(3), 0});
        CHECK(vbar_value(m, Matrix::Zero(3, 3), zero, oracle::random_belief(3, rng)) == 0.0);
    }
    SUBCASE("random A agrees with brute-force enumeration") {
        for (int t = 0; t < 20; ++t) {
            const Matrix A = oracle::random_matrix(3, 3, rng);
            const auto g = random_gamma(3, 5, rng);
            const Vector b = oracle::random_belief(3, rng);
            const double brute = oracle::backup_value_loops(m.reward, loop_maps(m), 2, m.discount, as_list(g), A.transpose() * b);
            CHECK(vbar_value(m, A, g, b) == doctest::Approx(brute).epsilon(1e-12));
        }
    }
    SUBCASE("nonnegative F: lifted compressed vectors reproduce the compressed backup") {
        const Pomdp big = oracle::random_pomdp(6, 2, 3, 9);
        const auto basis = transpose_basis(oracle::random_matrix(6, 3, rng, 0, 1), CompressionMethod::Pnmf);
        const auto proc = make_process(big, build_compressed(big, basis), Matrix::Identity(6, 6));
        for (int t = 0; t < 10; ++t) {
            const auto gc = random_gamma(3, 4, rng);
            const Vector b = oracle::random_belief(6, rng);
            const Vector bt = compress_belief(basis, b);
            const double compressed = bt.dot(point_backup(proc, gc, bt).values);
            CHECK(std::abs(vbar_value(big, basis.projection(), lift(basis, gc), b) - compressed) <= 1e-9);
        }
    }
    SUBCASE("lift rejects a dimension mismatch") { CHECK_THROWS_AS(lift(identity_basis(4), random_gamma(3, 1, rng)), InvalidArgument); }
}

TEST_CASE("scaling identity of the approximated backup") {
    std::mt19937_64 rng(5);
    const Pomdp m = oracle::random_pomdp(4, 2, 3, 2);
    const auto g = random_gamma(4, 5, rng);
    const Vector b = oracle::random_belief(4, rng);
    CHECK(lemma1_check(m, Matrix::Identity(4, 4), g, b).status == CheckStatus::Pass);
    CHECK(lemma1_check(m, 2.0 * Matrix::Identity(4, 4), g, b).status == CheckStatus::Pass);
    int passed = 0;
    for (int t = 0; t < 1000; ++t) {
        const Matrix A = oracle::random_matrix(4, 4, rng, 0, 1);
        if (lemma1_check(m, A, random_gamma(4, 3, rng), oracle::random_belief(4, rng)).status == CheckStatus::Pass) ++passed;
    }
    CHECK(passed == 1000);
    Matrix mixed = Matrix::Identity(4, 4);
    mixed(0, 0) = -1.0;
    Vector point = Vector::Zero(4);
    point(0) = 1.0;
    CHECK(lemma1_check(m, mixed, g, point).status == CheckStatus::NotApplicable);
    CHECK(lemma1_check(m, Matrix::Zero(4, 4), g, b).status == CheckStatus::NotApplicable);
}

TEST_CASE("domination under compression") {
    SUBCASE("nonnegative bases never produce a witness") {
        std::mt19937_64 rng(7);
        const auto basis = transpose_basis(oracle::random_matrix(5, 2, rng, 0, 1), CompressionMethod::Pnmf);
        Matrix B(5, 20);
        for (Eigen::Index j = 0; j < 20; ++j) B.col(j) = oracle::random_belief(5, rng);
        const auto rep = lemma4_detector(basis, B);
        CHECK(rep.status == CheckStatus::Pass);
        CHECK(rep.witness.empty());
    }
    SUBCASE("F = [1; -1] with b = [0, 1] yields the hand counterexample") {
        Matrix F(2, 1);
        F << 1, -1;
        Matrix b(2, 1);
        b << 0, 1;
        const auto rep = lemma4_detector(transpose_basis(F, CompressionMethod::Vdc), b);
        REQUIRE(rep.status == CheckStatus::Fail);
        REQUIRE(rep.witness.size() == 3);
        const double bt = rep.witness[0].second(0);
        CHECK(bt == -1.0);
        CHECK(rep.witness[1].second(0) <= rep.witness[2].second(0));
        CHECK(bt * rep.witness[1].second(0) > bt * rep.witness[2].second(0));
    }
    SUBCASE("negative entries that never show up in the compressed beliefs") {
        Matrix F(2, 1);
        F << 1, -1;
        Matrix b(2, 1);
        b << 1, 0;
        CHECK(lemma4_detector(transpose_basis(F, CompressionMethod::Vdc), b).status == CheckStatus::NoneFound);
    }
}

TEST_CASE("value-loss decomposition") {
    SUBCASE("identity basis: both sides vanish") {
        std::mt19937_64 rng(1);
        const Pomdp m = oracle::random_pomdp(4, 2, 2, 3);
        const auto g = random_gamma(4, 4, rng);
        Matrix B(4, 10);
        for (Eigen::Index j = 0; j < 10; ++j) B.col(j) = oracle::random_belief(4, rng);
        const auto t = value_loss_decomposition(m, identity_basis(4), g, g, B);
        CHECK(t.premise_failures == 0);
        for (const auto& r : t.rows) {
            CHECK(r.lhs == 0.0);
            CHECK(r.rhs == 0.0);
        }
    }
    SUBCASE("lossless basis on a low-rank model") {
        const Pomdp m = synth_lowrank_pomdp(3, 12, 5);
        const auto basis = block_basis(3, 12);
        const auto s = solve_both(m, basis);
        const auto t = value_loss_decomposition(m, basis, s.original, s.compressed, s.beliefs);
        CHECK(t.premise_failures == 0);
        CHECK(t.max_residual <= 1e-3);
    }
    SUBCASE("a lossy basis flags the premise instead of asserting") {
        std::mt19937_64 rng(2);
        const Pomdp m = oracle::random_pomdp(6, 2, 2, 4);
        const auto basis = transpose_basis(oracle::random_matrix(6, 2, rng, 0, 1), CompressionMethod::Pnmf);
        Matrix B(6, 15);
        for (Eigen::Index j = 0; j < 15; ++j) B.col(j) = oracle::random_belief(6, rng);
        const auto t = value_loss_decomposition(m, basis, random_gamma(6, 3, rng), random_gamma(2, 3, rng), B);
        CHECK(t.premise_failures == 15);
        CHECK(t.max_residual == 0.0);
    }
}

TEST_CASE("measured value gap against the analytic bound") {
    SUBCASE("identity basis") {
        std::mt19937_64 rng(4);
        const Pomdp m = oracle::random_pomdp(4, 2, 2, 5);
        const auto g = random_gamma(4, 3, rng);
        const auto rep = value_gap_check(m, identity_basis(4), g, g, oracle::simplex_grid(4, 3));
        CHECK(rep.status == CheckStatus::Pass);
    }
    SUBCASE("lossless low-rank compression") {
        const Pomdp m = synth_lowrank_pomdp(3, 12, 7);
        const auto basis = block_basis(3, 12);
        const auto s = solve_both(m, basis);
        CHECK(value_gap_check(m, basis, s.original, s.compressed, s.beliefs).pass());
    }
    SUBCASE("no bound once the margin reaches one") {
        const Pomdp m = oracle::random_pomdp(3, 2, 2, 1, 0.9);
        CompressionBasis basis = identity_basis(3);
        basis.F_dag *= 2.0;
        std::mt19937_64 rng(1);
        const auto g = random_gamma(3, 2, rng);
        CHECK(value_gap_check(m, basis, g, g, Matrix::Identity(3, 3)).status == CheckStatus::NotApplicable);
    }
}

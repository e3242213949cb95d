#include "core/compressed.hpp"
#include "core/nmf.hpp"
#include "core/sampling.hpp"
#include "core/solver.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace bsqz;

namespace {

double row_sum_norm(const Matrix& m) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < m.cols(); ++j) s += std::abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

// Columns are block indicators scaled to unit length, so F F^T projects onto block-constant vectors.
CompressionBasis block_basis(std::size_t k, std::size_t n) {
    const auto block = synth_block_assignment(k, n);
    Matrix F = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (std::size_t s = 0; s < n; ++s) F(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(block[s])) = 1.0;
    for (Eigen::Index j = 0; j < F.cols(); ++j) F.col(j) /= F.col(j).norm();
    return transpose_basis(F, CompressionMethod::Pnmf);
}

}  // namespace

TEST_CASE("identity compression reproduces the model") {
    const Pomdp m = oracle::random_pomdp(5, 3, 2, 1);
    const auto c = build_compressed(m, identity_basis(5));
    CHECK(c.reward == m.reward);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t z = 0; z < 2; ++z) CHECK((c.map(a, z) - oracle::taz_loops(m, a, z)).cwiseAbs().maxCoeff() < 1e-15);
    const auto rep = error_report(m, identity_basis(5));
    CHECK(rep.eps_r == 0.0);
    CHECK(rep.eps_t == 0.0);
    CHECK(rep.a_inf == 1.0);
    CHECK(rep.i_minus_a_inf == 0.0);
    REQUIRE(rep.value_bound.has_value());
    CHECK(*rep.value_bound == 0.0);
}

TEST_CASE("a permutation basis relabels states") {
    const Pomdp m = oracle::random_pomdp(4, 2, 3, 2);
    const std::vector<Eigen::Index> perm{2, 0, 3, 1};
    Matrix P = Matrix::Zero(4, 4);
    for (Eigen::Index j = 0; j < 4; ++j) P(perm[static_cast<std::size_t>(j)], j) = 1.0;
    const auto c = build_compressed(m, transpose_basis(P, CompressionMethod::Vdc));
    for (Eigen::Index j = 0; j < 4; ++j)
        for (Eigen::Index a = 0; a < 2; ++a) CHECK(c.reward(j, a) == m.reward(perm[static_cast<std::size_t>(j)], a));
    const Matrix t = oracle::taz_loops(m, 1, 2);
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 4; ++j)
            CHECK(c.map(1, 2)(i, j) == doctest::Approx(t(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)])));
    CHECK(error_report(m, transpose_basis(P, CompressionMethod::Vdc)).eps_t < 1e-15);
}

TEST_CASE("dimension mismatch is rejected") {
    const Pomdp m = oracle::random_pomdp(4, 2, 2, 3);
    CHECK_THROWS_AS(build_compressed(m, identity_basis(5)), InvalidArgument);
}

TEST_CASE("converged P-NMF on a low-rank model has small transition error") {
    const Pomdp m = synth_lowrank_pomdp(3, 12, 2);
    const auto B = sample_beliefs(m, 300, 5);
    NmfConfig cfg;
    cfg.k = 3;
    cfg.restarts = 3;
    const auto basis = pnmf_factorize(B.columns, cfg).basis;
    CHECK(error_report(m, basis).eps_t <= 1e-4);
}

TEST_CASE("compressed beliefs") {
    std::mt19937_64 rng(8);
    const Vector b = oracle::random_belief(5, rng);
    CHECK(compress_belief(identity_basis(5), b) == b);
    const auto ones = transpose_basis(Matrix::Ones(5, 1), CompressionMethod::Pnmf);
    for (int t = 0; t < 5; ++t) CHECK(compress_belief(ones, oracle::random_belief(5, rng))(0) == doctest::Approx(1.0).epsilon(1e-15));
    const Matrix F = oracle::random_matrix(5, 3, rng);
    const auto basis = transpose_basis(F, CompressionMethod::Vdc);
    const Vector out = compress_belief(basis, b);
    for (Eigen::Index j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (Eigen::Index s = 0; s < 5; ++s) dot += b(s) * F(s, j);
        CHECK(out(j) == doctest::Approx(dot).epsilon(1e-14));
    }
    Matrix several(5, 2);
    several << b, oracle::random_belief(5, rng);
    CHECK((compress_beliefs(basis, several).col(1) - compress_belief(basis, several.col(1))).norm() < 1e-15);
}

TEST_CASE("error report norms and the bound precondition") {
    std::mt19937_64 rng(9);
    const Pomdp m = oracle::random_pomdp(6, 2, 2, 4, 0.9);
    CompressionBasis basis;
    basis.F = oracle::random_matrix(6, 3, rng);
    basis.F_dag = basis.F.completeOrthogonalDecomposition().pseudoInverse();
    basis.F_dag *= 1.5 / (0.9 * row_sum_norm(basis.F * basis.F_dag));
    const auto rep = error_report(m, basis);
    CHECK(rep.contraction_margin == doctest::Approx(1.5));
    CHECK(rep.a_inf == doctest::Approx(row_sum_norm(basis.F * basis.F_dag)));
    CHECK(rep.i_minus_a_inf == doctest::Approx(row_sum_norm(Matrix::Identity(6, 6) - basis.F * basis.F_dag)));
    CHECK_FALSE(rep.value_bound.has_value());
    CHECK_FALSE(rep.bound_note.empty());

    const auto c = build_compressed(m, basis);
    CHECK(rep.eps_r == doctest::Approx(row_sum_norm(m.reward - basis.F * c.reward)));
    double eps_t = 0.0;
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t z = 0; z < 2; ++z)
            eps_t = std::max(eps_t, row_sum_norm(oracle::taz_loops(m, a, z) * basis.F - basis.F * c.map(a, z)));
    CHECK(rep.eps_t == doctest::Approx(eps_t));
}

TEST_CASE("lossless compression preserves values at the sampled beliefs") {
    const Pomdp m = synth_lowrank_pomdp(3, 12, 6);
    const auto B = sample_beliefs(m, 200, 3);
    const auto basis = block_basis(3, 12);
    REQUIRE((B.columns - basis.F * basis.F.transpose() * B.columns).cwiseAbs().maxCoeff() <= 1e-8);

    SolverConfig cfg;
    cfg.tol = 1e-8;
    cfg.max_stages = 2000;
    cfg.seed = 4;
    const auto orig = perseus_solve(make_process(m, B.columns), {}, cfg);
    const auto comp = perseus_solve(make_process(m, build_compressed(m, basis), B.columns), {}, cfg);
    CHECK(orig.trace.status == SolveStatus::Converged);
    CHECK(comp.trace.status == SolveStatus::Converged);
    const Matrix Bc = compress_beliefs(basis, B.columns);
    for (Eigen::Index j = 0; j < B.columns.cols(); ++j)
        CHECK(std::abs(orig.value.value(B.columns.col(j)) - comp.value.value(Bc.col(j))) <= 1e-3);
}

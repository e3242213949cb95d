#pragma once

#include "core/basis.hpp"
#include "core/compressed.hpp"
#include "core/pomdp.hpp"
#include "core/solver.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace bsqz {

enum class CheckStatus { Pass, Fail, NotApplicable, NoneFound };

std::string to_string(CheckStatus s);

struct DiagnosticReport {
    std::string check;
    CheckStatus status = CheckStatus::Pass;
    /// Check-specific slack; positive means room to spare.
    double margin = 0.0;
    std::string note;
    /// Named inputs demonstrating a failure.
    std::vector<std::pair<std::string, Vector>> witness;

    bool pass() const { return status == CheckStatus::Pass || status == CheckStatus::NoneFound; }
};

/// One application of the approximated backup at b:
///   max_a [ b^T A R_a + eta sum_z max_{alpha in gamma_bar} b^T A T^{a,z} alpha ].
double vbar_value(const Pomdp& model, const Matrix& A, const ValueFunction& gamma_bar, const Belief& b);

/// Original-space image F alpha~ of every compressed vector.
ValueFunction lift(const CompressionBasis& basis, const ValueFunction& compressed);

/// Checks  Hbar Vbar(b) = ||b^T A||_1 H Vbar(b^)  with b^ = A^T b / ||A^T b||_1.
/// Only evaluated where A^T b is entrywise nonnegative and nonzero.
DiagnosticReport lemma1_check(const Pomdp& model, const Matrix& A, const ValueFunction& gamma_bar, const Belief& b);

struct Lemma4Options {
    std::size_t draws = 10000;
    std::uint64_t seed = 0;
};

/// Searches for alpha~1 <= alpha~2 entrywise with b~^T alpha~1 > b~^T alpha~2 over the
/// compressed sampled beliefs. A nonnegative basis must never produce one.
DiagnosticReport lemma4_detector(const CompressionBasis& basis, const Matrix& beliefs, const Lemma4Options& opt = {});

struct ValueLossRow {
    std::size_t index = 0;
    std::size_t action = 0;
    double lhs = 0.0;       // V(b) - V~(b~)
    double rhs = 0.0;       // eta sum_z [V(b^{a,z}) - Vbar(b^{a,z})]
    double residual = 0.0;  // |lhs - rhs|
    bool premise = false;   // b = A^T b within 1e-8
};

struct ValueLossTable {
    std::vector<ValueLossRow> rows;
    std::size_t premise_failures = 0;
    /// Largest residual over rows whose premise holds (0 when none do).
    double max_residual = 0.0;
};

/// Tabulates both sides of the value-loss identity per sampled belief. V is taken
/// from gamma (original space), V~ from gamma_c (compressed), Vbar(x) = V~(F^T x), and
/// the policy is greedy on gamma_c at F^T b.
ValueLossTable value_loss_decomposition(const Pomdp& model, const CompressionBasis& basis, const ValueFunction& gamma,
                                        const ValueFunction& gamma_c, const Matrix& beliefs);

/// Compares max_b |V(b) - V~(F^T b)| over sampled beliefs with the analytic value-loss
/// bound. Not applicable when eta ||F F_dag||_inf >= 1.
DiagnosticReport value_gap_check(const Pomdp& model, const CompressionBasis& basis, const ValueFunction& gamma,
                                const ValueFunction& gamma_c, const Matrix& beliefs);

}  // namespace bsqz

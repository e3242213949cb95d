#pragma once

#include "core/basis.hpp"
#include "core/pomdp.hpp"
#include "core/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bsqz {

struct EvalProtocol {
    std::size_t n_trajectories = 1000;
    std::size_t horizon = 251;
    std::size_t n_repeats = 5;
    std::uint64_t seed = 0;
    bool discounted = true;

    void validate() const;
};

struct EvalResult {
    double mean = 0.0;
    /// Sample standard deviation of the per-repeat averages (0 for a single repeat).
    double std = 0.0;
    std::vector<double> per_repeat;
    bool discounted = true;
};

/// Monte Carlo policy quality. The hidden state starts from b0 and follows the true
/// dynamics; the belief is always tracked in the original space and the action is
/// greedy in gamma's space.
EvalResult simulate_policy(const Pomdp& model, const ValueFunction& gamma, const EvalProtocol& proto);

/// Same, with gamma living in the compressed space of basis (actions chosen at F^T b).
EvalResult simulate_policy(const Pomdp& model, const ValueFunction& gamma, const CompressionBasis& basis,
                           const EvalProtocol& proto);

enum class Verdict { Converged, Plateaued, Diverged };

std::string to_string(Verdict v);

/// Diverged iff the guard fired or the expected-value trace left the analytic
/// ceiling max|R| / (1 - eta) * |points|; converged iff the solver met its tolerance.
Verdict divergence_verdict(const SolverTrace& trace);

}  // namespace bsqz

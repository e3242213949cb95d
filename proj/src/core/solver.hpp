#pragma once

#include "core/compressed.hpp"
#include "core/pomdp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bsqz {

struct AlphaVector {
    Vector values;
    std::size_t action = 0;
};

/// Piecewise-linear convex value function V(x) = max_alpha x^T alpha.
struct ValueFunction {
    std::vector<AlphaVector> vectors;
    /// "original" or "compressed:<method>".
    std::string space = "original";

    bool empty() const { return vectors.empty(); }
    std::size_t size() const { return vectors.size(); }
    std::size_t dim() const { return vectors.empty() ? 0 : static_cast<std::size_t>(vectors.front().values.size()); }

    double value(const Vector& x) const;
    /// Index of the maximising vector; ties go to the lowest action, then the lowest index.
    std::size_t best_index(const Vector& x) const;
    /// d x |Gamma|
    Matrix as_matrix() const;
};

/// The common shape of the original and compressed recursions: points x, reward
/// columns, maps M^{a,z} with successor x^T M^{a,z}, and a discount.
struct LinearBeliefProcess {
    Matrix points;                    // d x m
    Matrix reward;                    // d x |A|
    std::vector<TransitionMap> maps;  // [a * |Z| + z]
    std::size_t n_actions = 0;
    std::size_t n_obs = 0;
    double discount = 0.0;
    /// max |R| / (1 - eta) of the original model; drives the divergence guard.
    double value_bound = 0.0;
    /// Starting alpha-vector for the value-floor initialisation.
    Vector floor_vector;
    std::string space = "original";
    bool compressed = false;

    std::size_t dim() const { return static_cast<std::size_t>(reward.rows()); }
    const TransitionMap& map(std::size_t a, std::size_t z) const { return maps[a * n_obs + z]; }
};

/// Original POMDP over the given belief points (columns).
LinearBeliefProcess make_process(const Pomdp& model, const Matrix& beliefs);

/// Compressed POMDP; beliefs are given in the original space and compressed with F^T.
/// The floor vector is F_dag (c 1), the compressed image of the original floor, with
/// c = min R / (1 - eta).
LinearBeliefProcess make_process(const Pomdp& model, const CompressedPomdp& compressed, const Matrix& beliefs);

/// Exact point-based backup at x: for each action the per-observation argmax vectors
/// are combined; the action maximising x^T alpha^a wins (lowest index on ties).
AlphaVector point_backup(const LinearBeliefProcess& proc, const ValueFunction& gamma, const Vector& x);

/// Removes exact duplicates and vectors pointwise dominated by a single other vector.
/// Sound on beliefs and on compressed processes only when the basis is nonnegative.
ValueFunction prune(const ValueFunction& gamma);

std::size_t greedy_action(const ValueFunction& gamma, const Vector& x);

enum class SolveStatus { Converged, MaxStages, Diverged };

std::string to_string(SolveStatus s);

struct SolverConfig {
    std::size_t max_stages = 500;
    std::uint64_t seed = 0;
    bool value_floor_init = true;
    bool prune = true;
    /// Convergence threshold on the largest stage-to-stage point-value change.
    double tol = 1e-4;
    /// Back up every point each stage instead of the randomised Perseus sweep.
    bool synchronous = false;
    /// Divergence guard: abort once |V(x)| > divergence_factor * value_bound.
    double divergence_factor = 10.0;
};

struct SolverTrace {
    std::vector<double> expected_value;  // sum_x V(x) after each stage
    std::vector<std::size_t> n_vectors;
    std::vector<double> max_change;      // max_x |V_t(x) - V_{t-1}(x)|
    std::vector<std::size_t> backups;
    SolveStatus status = SolveStatus::MaxStages;
    std::size_t n_points = 0;
    double value_bound = 0.0;
    double initial_expected_value = 0.0;
    /// Set when the value floor was used on a compressed process, where it is a heuristic.
    bool heuristic_floor = false;
    bool guard_fired = false;

    std::size_t stages() const { return expected_value.size(); }
    /// value_bound * |points|: any expected value above this is impossible for a valid model.
    double ceiling() const { return value_bound * static_cast<double>(n_points); }
};

struct SolveResult {
    ValueFunction value;
    SolverTrace trace;
};

/// Perseus: per stage, visit points in a seeded random order and back up only those not
/// yet improved; a point's new vector is kept only if it does not lower its value.
SolveResult perseus_solve(const LinearBeliefProcess& proc, const ValueFunction& init, const SolverConfig& cfg);

}  // namespace bsqz

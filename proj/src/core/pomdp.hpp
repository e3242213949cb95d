#pragma once

#include "core/common.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bsqz {

/// A probability vector over states.
using Belief = Vector;

/// Discrete POMDP <S, A, Z, T, Omega, R, eta>.
///
/// transition[a](s, s') = T(s' | s, a); observation[a](s', z) = Omega(z | s', a);
/// reward(s, a) = R(s, a).
struct Pomdp {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::size_t n_obs = 0;
    std::vector<Matrix> transition;
    std::vector<Matrix> observation;
    Matrix reward;
    double discount = 0.95;
    Belief initial_belief;  // empty means uniform

    std::vector<std::string> state_names;
    std::vector<std::string> action_names;
    std::vector<std::string> obs_names;

    Belief start() const;
    double max_abs_reward() const { return reward.size() ? reward.cwiseAbs().maxCoeff() : 0.0; }
};

struct Violation {
    std::string what;
    std::optional<std::size_t> action;
    std::optional<std::size_t> row;

    std::string describe() const;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

ValidationReport validate(const Pomdp& model);

/// Throws InvalidModel carrying the report summary when validation fails.
void require_valid(const Pomdp& model);

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// One observation-weighted transition map, dense or sparse depending on density.
class TransitionMap {
public:
    static constexpr double kSparseDensity = 0.25;

    TransitionMap() = default;
    explicit TransitionMap(const Matrix& dense);

    bool is_sparse() const { return std::holds_alternative<SparseRowMatrix>(storage_); }
    Eigen::Index rows() const;
    Eigen::Index cols() const;

    /// x^T M as a column vector.
    Vector left_multiply(const Vector& x) const;
    /// M v
    Vector multiply(const Vector& v) const;
    /// M X
    Matrix multiply(const Matrix& x) const;
    Matrix dense() const;

private:
    std::variant<Matrix, SparseRowMatrix> storage_;
};

/// T^{a,z}_{ij} = T(s_j | a, s_i) * Omega(z | a, s_j), indexed [a * |Z| + z].
struct ObsWeightedTransitions {
    std::size_t n_actions = 0;
    std::size_t n_obs = 0;
    std::vector<TransitionMap> maps;

    const TransitionMap& at(std::size_t a, std::size_t z) const { return maps[a * n_obs + z]; }
};

ObsWeightedTransitions obs_weighted_transitions(const Pomdp& model);

/// Pr(z | a, b).
double observation_likelihood(const Pomdp& model, const Belief& b, std::size_t a, std::size_t z);

/// Pr(. | a, b) over every observation.
Vector observation_distribution(const Pomdp& model, const Belief& b, std::size_t a);

/// Likelihoods at or below this are treated as impossible observations.
inline constexpr double kImpossibleLikelihood = 1e-300;

/// Bayes filter. Throws ImpossibleObservation when Pr(z | a, b) <= 1e-300.
Belief belief_update(const Pomdp& model, const Belief& b, std::size_t a, std::size_t z);

/// Random model whose reachable beliefs stay in a k-dimensional nonnegative subspace.
/// States are split into k contiguous blocks; dynamics and observations depend only
/// on the block, and mass entering a block is spread uniformly over it.
Pomdp synth_lowrank_pomdp(std::size_t k, std::size_t n, std::uint64_t seed,
                          std::size_t n_actions = 3, std::size_t n_obs = 3,
                          double discount = 0.95);

/// Block index of each state in synth_lowrank_pomdp(k, n, ...).
std::vector<std::size_t> synth_block_assignment(std::size_t k, std::size_t n);

}  // namespace bsqz

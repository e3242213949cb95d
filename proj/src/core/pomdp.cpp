#include "core/pomdp.hpp"

#include "core/rng.hpp"

#include <cmath>
#include <sstream>

namespace bsqz {

Belief Pomdp::start() const {
    if (initial_belief.size() == static_cast<Eigen::Index>(n_states)) return initial_belief;
    return Belief::Constant(static_cast<Eigen::Index>(n_states), 1.0 / static_cast<double>(n_states));
}

std::string Violation::describe() const {
    std::ostringstream os;
    os << what;
    if (action) os << " (action " << *action;
    if (row) os << (action ? ", " : " (") << "row " << *row;
    if (action || row) os << ")";
    return os.str();
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) os << "; ";
        os << violations[i].describe();
    }
    return os.str();
}

namespace {

void check_stochastic_rows(const Matrix& m, std::size_t a, const char* what,
                           std::vector<Violation>& out) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        if (!row.allFinite()) {
            out.push_back({std::string(what) + " row is not finite", a, static_cast<std::size_t>(r)});
            continue;
        }
        if (row.minCoeff() < 0.0) {
            out.push_back({std::string(what) + " row has a negative entry", a, static_cast<std::size_t>(r)});
        }
        const double s = row.sum();
        if (std::abs(s - 1.0) > kStochasticTol) {
            std::ostringstream os;
            os.precision(17);
            os << what << " row sums to " << s;
            out.push_back({os.str(), a, static_cast<std::size_t>(r)});
        }
    }
}

}  // namespace

ValidationReport validate(const Pomdp& model) {
    ValidationReport rep;
    auto& v = rep.violations;
    const auto n = static_cast<Eigen::Index>(model.n_states);
    if (model.n_states == 0) v.push_back({"model has no states", {}, {}});
    if (model.n_actions == 0) v.push_back({"model has no actions", {}, {}});
    if (model.n_obs == 0) v.push_back({"model has no observations", {}, {}});
    if (!(model.discount > 0.0 && model.discount < 1.0)) {
        std::ostringstream os;
        os << "discount " << model.discount << " outside (0, 1)";
        v.push_back({os.str(), {}, {}});
    }
    if (model.transition.size() != model.n_actions)
        v.push_back({"transition count differs from action count", {}, {}});
    if (model.observation.size() != model.n_actions)
        v.push_back({"observation count differs from action count", {}, {}});
    for (std::size_t a = 0; a < model.transition.size(); ++a) {
        const auto& t = model.transition[a];
        if (t.rows() != n || t.cols() != n) {
            v.push_back({"transition matrix has wrong shape", a, {}});
            continue;
        }
        check_stochastic_rows(t, a, "transition", v);
    }
    for (std::size_t a = 0; a < model.observation.size(); ++a) {
        const auto& o = model.observation[a];
        if (o.rows() != n || o.cols() != static_cast<Eigen::Index>(model.n_obs)) {
            v.push_back({"observation matrix has wrong shape", a, {}});
            continue;
        }
        check_stochastic_rows(o, a, "observation", v);
    }
    if (model.reward.rows() != n || model.reward.cols() != static_cast<Eigen::Index>(model.n_actions)) {
        v.push_back({"reward matrix has wrong shape", {}, {}});
    } else if (!model.reward.allFinite()) {
        v.push_back({"reward matrix is not finite", {}, {}});
    }
    if (model.initial_belief.size() != 0) {
        const auto& b = model.initial_belief;
        if (b.size() != n) {
            v.push_back({"initial belief has wrong length", {}, {}});
        } else if (!b.allFinite() || b.minCoeff() < 0.0 || std::abs(b.sum() - 1.0) > kStochasticTol) {
            v.push_back({"initial belief is not a distribution", {}, {}});
        }
    }
    return rep;
}

void require_valid(const Pomdp& model) {
    auto rep = validate(model);
    if (!rep.ok()) throw InvalidModel("invalid POMDP: " + rep.summary());
}

TransitionMap::TransitionMap(const Matrix& dense) {
    const auto nnz = (dense.array() != 0.0).count();
    const double density = dense.size() ? static_cast<double>(nnz) / static_cast<double>(dense.size()) : 0.0;
    if (density < kSparseDensity) {
        storage_ = SparseRowMatrix(dense.sparseView());
    } else {
        storage_ = dense;
    }
}

Eigen::Index TransitionMap::rows() const {
    return std::visit([](const auto& m) { return m.rows(); }, storage_);
}

Eigen::Index TransitionMap::cols() const {
    return std::visit([](const auto& m) { return m.cols(); }, storage_);
}

Vector TransitionMap::left_multiply(const Vector& x) const {
    return std::visit([&](const auto& m) -> Vector { return (x.transpose() * m).transpose(); }, storage_);
}

Vector TransitionMap::multiply(const Vector& v) const {
    return std::visit([&](const auto& m) -> Vector { return m * v; }, storage_);
}

Matrix TransitionMap::multiply(const Matrix& x) const {
    return std::visit([&](const auto& m) -> Matrix { return m * x; }, storage_);
}

Matrix TransitionMap::dense() const {
    if (const auto* d = std::get_if<Matrix>(&storage_)) return *d;
    return Matrix(std::get<SparseRowMatrix>(storage_));
}

ObsWeightedTransitions obs_weighted_transitions(const Pomdp& model) {
    require_valid(model);
    ObsWeightedTransitions out;
    out.n_actions = model.n_actions;
    out.n_obs = model.n_obs;
    out.maps.reserve(model.n_actions * model.n_obs);
    for (std::size_t a = 0; a < model.n_actions; ++a) {
        for (std::size_t z = 0; z < model.n_obs; ++z) {
            // Scale column j of T_a by Omega(z | s_j, a).
            Matrix m = model.transition[a] * model.observation[a].col(static_cast<Eigen::Index>(z)).asDiagonal();
            out.maps.emplace_back(m);
        }
    }
    return out;
}

namespace {

Vector predicted(const Pomdp& model, const Belief& b, std::size_t a) {
    if (a >= model.n_actions) throw InvalidArgument("action index out of range");
    if (b.size() != static_cast<Eigen::Index>(model.n_states)) throw InvalidArgument("belief has wrong length");
    return model.transition[a].transpose() * b;
}

}  // namespace

Vector observation_distribution(const Pomdp& model, const Belief& b, std::size_t a) {
    return model.observation[a].transpose() * predicted(model, b, a);
}

double observation_likelihood(const Pomdp& model, const Belief& b, std::size_t a, std::size_t z) {
    if (z >= model.n_obs) throw InvalidArgument("observation index out of range");
    return model.observation[a].col(static_cast<Eigen::Index>(z)).dot(predicted(model, b, a));
}

Belief belief_update(const Pomdp& model, const Belief& b, std::size_t a, std::size_t z) {
    if (z >= model.n_obs) throw InvalidArgument("observation index out of range");
    Vector next = model.observation[a].col(static_cast<Eigen::Index>(z)).cwiseProduct(predicted(model, b, a));
    const double norm = next.sum();
    if (!(norm > kImpossibleLikelihood)) {
        throw ImpossibleObservation("observation " + std::to_string(z) + " has zero likelihood after action " +
                                    std::to_string(a));
    }
    next /= norm;
    return next;
}

std::vector<std::size_t> synth_block_assignment(std::size_t k, std::size_t n) {
    std::vector<std::size_t> block(n);
    for (std::size_t s = 0; s < n; ++s) block[s] = s * k / n;
    return block;
}

Pomdp synth_lowrank_pomdp(std::size_t k, std::size_t n, std::uint64_t seed, std::size_t n_actions,
                          std::size_t n_obs, double discount) {
    if (k == 0 || k > n) throw InvalidArgument("synth_lowrank_pomdp requires 1 <= k <= n");
    if (n_actions == 0 || n_obs == 0) throw InvalidArgument("synth_lowrank_pomdp requires actions and observations");
    Rng rng(derive_seed(seed, 0x5eed));
    const auto block = synth_block_assignment(k, n);
    std::vector<double> block_size(k, 0.0);
    for (auto b : block) block_size[b] += 1.0;

    auto random_stochastic = [&](Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = 0.05 + uniform01(rng);
            m.row(i) /= m.row(i).sum();
        }
        return m;
    };

    const auto N = static_cast<Eigen::Index>(n);
    const auto K = static_cast<Eigen::Index>(k);
    Pomdp p;
    p.n_states = n;
    p.n_actions = n_actions;
    p.n_obs = n_obs;
    p.discount = discount;
    for (std::size_t a = 0; a < n_actions; ++a) {
        const Matrix block_t = random_stochastic(K, K);
        const Matrix block_o = random_stochastic(K, static_cast<Eigen::Index>(n_obs));
        Matrix t(N, N);
        Matrix o(N, static_cast<Eigen::Index>(n_obs));
        for (Eigen::Index s = 0; s < N; ++s) {
            for (Eigen::Index s2 = 0; s2 < N; ++s2) {
                t(s, s2) = block_t(static_cast<Eigen::Index>(block[s]), static_cast<Eigen::Index>(block[s2])) /
                           block_size[block[s2]];
            }
            o.row(s) = block_o.row(static_cast<Eigen::Index>(block[s]));
        }
        p.transition.push_back(std::move(t));
        p.observation.push_back(std::move(o));
    }
    p.reward.resize(N, static_cast<Eigen::Index>(n_actions));
    for (Eigen::Index s = 0; s < N; ++s)
        for (Eigen::Index a = 0; a < p.reward.cols(); ++a) p.reward(s, a) = 2.0 * uniform01(rng) - 1.0;
    // Block-constant start: random block weights spread evenly inside each block.
    Vector w(K);
    for (Eigen::Index j = 0; j < K; ++j) w(j) = 0.1 + uniform01(rng);
    w /= w.sum();
    p.initial_belief.resize(N);
    for (Eigen::Index s = 0; s < N; ++s)
        p.initial_belief(s) = w(static_cast<Eigen::Index>(block[s])) / block_size[block[s]];
    for (std::size_t s = 0; s < n; ++s) p.state_names.push_back("s" + std::to_string(s));
    for (std::size_t a = 0; a < n_actions; ++a) p.action_names.push_back("a" + std::to_string(a));
    for (std::size_t z = 0; z < n_obs; ++z) p.obs_names.push_back("o" + std::to_string(z));
    return p;
}

}  // namespace bsqz

#include "core/solver.hpp"

#include "core/parallel.hpp"
#include "core/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace bsqz {

double ValueFunction::value(const Vector& x) const {
    if (vectors.empty()) throw InvalidArgument("value function is empty");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& v : vectors) best = std::max(best, x.dot(v.values));
    return best;
}

std::size_t ValueFunction::best_index(const Vector& x) const {
    if (vectors.empty()) throw InvalidArgument("value function is empty");
    std::size_t best = 0;
    double best_val = x.dot(vectors[0].values);
    for (std::size_t i = 1; i < vectors.size(); ++i) {
        const double v = x.dot(vectors[i].values);
        if (v > best_val || (v == best_val && vectors[i].action < vectors[best].action)) {
            best = i;
            best_val = v;
        }
    }
    return best;
}

Matrix ValueFunction::as_matrix() const {
    Matrix G(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < vectors.size(); ++i) G.col(static_cast<Eigen::Index>(i)) = vectors[i].values;
    return G;
}

LinearBeliefProcess make_process(const Pomdp& model, const Matrix& beliefs) {
    require_valid(model);
    if (beliefs.rows() != static_cast<Eigen::Index>(model.n_states))
        throw InvalidArgument("belief points have the wrong dimension");
    LinearBeliefProcess p;
    p.points = beliefs;
    p.reward = model.reward;
    p.maps = obs_weighted_transitions(model).maps;
    p.n_actions = model.n_actions;
    p.n_obs = model.n_obs;
    p.discount = model.discount;
    p.value_bound = model.max_abs_reward() / (1.0 - model.discount);
    p.floor_vector = Vector::Constant(static_cast<Eigen::Index>(model.n_states),
                                      model.reward.minCoeff() / (1.0 - model.discount));
    return p;
}

LinearBeliefProcess make_process(const Pomdp& model, const CompressedPomdp& compressed, const Matrix& beliefs) {
    if (beliefs.rows() != compressed.basis.F.rows())
        throw InvalidArgument("belief points have the wrong dimension");
    LinearBeliefProcess p;
    p.points = compress_beliefs(compressed.basis, beliefs);
    p.reward = compressed.reward;
    p.maps.reserve(compressed.maps.size());
    for (const auto& m : compressed.maps) p.maps.emplace_back(m);
    p.n_actions = compressed.n_actions;
    p.n_obs = compressed.n_obs;
    p.discount = compressed.discount;
    p.value_bound = model.max_abs_reward() / (1.0 - model.discount);
    const double floor = model.reward.minCoeff() / (1.0 - model.discount);
    p.floor_vector = compressed.basis.F_dag * Vector::Constant(compressed.basis.F.rows(), floor);
    p.space = "compressed:" + to_string(compressed.basis.method);
    p.compressed = true;
    return p;
}

namespace {

Eigen::Index argmax_lowest(const Vector& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

/// M^{a,z} G for every (a,z), fixed for the duration of a stage.
struct BackupCache {
    Matrix G;
    std::vector<Matrix> mapped;

    BackupCache(const LinearBeliefProcess& proc, const ValueFunction& gamma) : G(gamma.as_matrix()) {
        mapped.resize(proc.maps.size());
        parallel::for_each_index(proc.maps.size(), [&](std::size_t i) { mapped[i] = proc.maps[i].multiply(G); });
    }
};

AlphaVector backup_cached(const LinearBeliefProcess& proc, const BackupCache& cache, const Vector& x) {
    const auto d = static_cast<Eigen::Index>(proc.dim());
    AlphaVector best;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < proc.n_actions; ++a) {
        Vector alpha = Vector::Zero(d);
        for (std::size_t z = 0; z < proc.n_obs; ++z) {
            const Matrix& C = cache.mapped[a * proc.n_obs + z];
            const Vector scores = C.transpose() * x;
            alpha += C.col(argmax_lowest(scores));
        }
        alpha = proc.reward.col(static_cast<Eigen::Index>(a)) + proc.discount * alpha;
        const double v = x.dot(alpha);
        if (v > best_val) {
            best_val = v;
            best.values = std::move(alpha);
            best.action = a;
        }
    }
    return best;
}

bool contains(const std::vector<AlphaVector>& set, const AlphaVector& v) {
    for (const auto& u : set)
        if (u.action == v.action && u.values == v.values) return true;
    return false;
}

Vector point_values(const Matrix& points, const ValueFunction& gamma) {
    const Matrix scores = gamma.as_matrix().transpose() * points;  // |Gamma| x m
    return scores.colwise().maxCoeff().transpose();
}

}  // namespace

AlphaVector point_backup(const LinearBeliefProcess& proc, const ValueFunction& gamma, const Vector& x) {
    if (gamma.empty()) throw InvalidArgument("point_backup needs a non-empty value function");
    if (x.size() != static_cast<Eigen::Index>(proc.dim())) throw InvalidArgument("point has the wrong dimension");
    return backup_cached(proc, BackupCache(proc, gamma), x);
}

ValueFunction prune(const ValueFunction& gamma) {
    ValueFunction out;
    out.space = gamma.space;
    const auto& vs = gamma.vectors;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        bool drop = false;
        for (std::size_t j = 0; j < vs.size() && !drop; ++j) {
            if (i == j) continue;
            const bool le = (vs[i].values.array() <= vs[j].values.array()).all();
            if (!le) continue;
            const bool equal = vs[i].values == vs[j].values;
            // Among equal vectors keep the first occurrence.
            drop = !equal || j < i;
        }
        if (!drop) out.vectors.push_back(vs[i]);
    }
    return out;
}

std::size_t greedy_action(const ValueFunction& gamma, const Vector& x) {
    return gamma.vectors[gamma.best_index(x)].action;
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::MaxStages: return "max_stages";
        case SolveStatus::Diverged: return "diverged";
    }
    return "unknown";
}

SolveResult perseus_solve(const LinearBeliefProcess& proc, const ValueFunction& init, const SolverConfig& cfg) {
    const auto m = static_cast<std::size_t>(proc.points.cols());
    if (m == 0) throw InvalidArgument("perseus_solve needs at least one point");
    if (proc.points.rows() != static_cast<Eigen::Index>(proc.dim()))
        throw InvalidArgument("points and reward disagree on dimension");
    if (cfg.max_stages == 0) throw InvalidArgument("max_stages must be positive");

    SolveResult res;
    res.value.space = proc.space;
    if (cfg.value_floor_init) {
        res.value.vectors.push_back({proc.floor_vector, 0});
    } else {
        if (init.empty()) throw InvalidArgument("perseus_solve needs an initial value function");
        res.value.vectors = init.vectors;
    }
    auto& trace = res.trace;
    trace.n_points = m;
    trace.value_bound = proc.value_bound;
    trace.heuristic_floor = proc.compressed && cfg.value_floor_init;

    const Matrix& X = proc.points;
    Vector v_old = point_values(X, res.value);
    trace.initial_expected_value = v_old.sum();
    const double guard = cfg.divergence_factor * proc.value_bound;

    for (std::size_t stage = 0; stage < cfg.max_stages; ++stage) {
        const BackupCache cache(proc, res.value);
        ValueFunction next;
        next.space = proc.space;
        std::size_t backups = 0;

        if (cfg.synchronous) {
            std::vector<AlphaVector> fresh(m);
            parallel::for_each_index(m, [&](std::size_t i) {
                fresh[i] = backup_cached(proc, cache, X.col(static_cast<Eigen::Index>(i)));
            });
            backups = m;
            for (auto& v : fresh)
                if (!contains(next.vectors, v)) next.vectors.push_back(std::move(v));
        } else {
            Rng rng(derive_seed(cfg.seed, stage));
            std::vector<std::size_t> order(m);
            std::iota(order.begin(), order.end(), std::size_t{0});
            for (std::size_t i = m; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

            Vector v_new = Vector::Constant(static_cast<Eigen::Index>(m), -std::numeric_limits<double>::infinity());
            std::vector<char> improved(m, 0);
            for (const std::size_t i : order) {
                if (improved[i]) continue;
                const Vector x = X.col(static_cast<Eigen::Index>(i));
                AlphaVector alpha = backup_cached(proc, cache, x);
                ++backups;
                if (!(x.dot(alpha.values) >= v_old[static_cast<Eigen::Index>(i)]))
                    alpha = res.value.vectors[res.value.best_index(x)];
                if (contains(next.vectors, alpha)) {
                    improved[i] = 1;
                    continue;
                }
                const Vector vals = X.transpose() * alpha.values;
                next.vectors.push_back(std::move(alpha));
                for (Eigen::Index j = 0; j < vals.size(); ++j) {
                    if (vals[j] > v_new[j]) v_new[j] = vals[j];
                    if (v_new[j] >= v_old[j]) improved[static_cast<std::size_t>(j)] = 1;
                }
                improved[i] = 1;
            }
        }

        if (cfg.prune) next = prune(next);
        const Vector v_new = point_values(X, next);
        res.value = std::move(next);

        trace.expected_value.push_back(v_new.sum());
        trace.n_vectors.push_back(res.value.size());
        trace.max_change.push_back((v_new - v_old).cwiseAbs().maxCoeff());
        trace.backups.push_back(backups);

        if (!all_finite(v_new) || v_new.cwiseAbs().maxCoeff() > guard) {
            trace.status = SolveStatus::Diverged;
            trace.guard_fired = true;
            return res;
        }
        if (trace.max_change.back() < cfg.tol) {
            trace.status = SolveStatus::Converged;
            return res;
        }
        v_old = v_new;
    }
    trace.status = SolveStatus::MaxStages;
    return res;
}

}  // namespace bsqz

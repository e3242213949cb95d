#include "core/diagnostics.hpp"

#include "core/parallel.hpp"
#include "core/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace bsqz {

std::string to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        case CheckStatus::NotApplicable: return "not-applicable";
        case CheckStatus::NoneFound: return "none-found";
    }
    return "unknown";
}

namespace {

double backup_value(const ObsWeightedTransitions& owt, const Matrix& reward, double discount, const Matrix& G,
                    const Vector& y) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < owt.n_actions; ++a) {
        double v = y.dot(reward.col(static_cast<Eigen::Index>(a)));
        double future = 0.0;
        for (std::size_t z = 0; z < owt.n_obs; ++z) {
            const Vector yz = owt.at(a, z).left_multiply(y);
            future += (G.transpose() * yz).maxCoeff();
        }
        v += discount * future;
        best = std::max(best, v);
    }
    return best;
}

}  // namespace

double vbar_value(const Pomdp& model, const Matrix& A, const ValueFunction& gamma_bar, const Belief& b) {
    if (gamma_bar.empty()) throw InvalidArgument("vbar_value needs a non-empty value function");
    const auto n = static_cast<Eigen::Index>(model.n_states);
    if (A.rows() != n || A.cols() != n || b.size() != n) throw InvalidArgument("vbar_value: dimension mismatch");
    const auto owt = obs_weighted_transitions(model);
    const Vector y = A.transpose() * b;
    return backup_value(owt, model.reward, model.discount, gamma_bar.as_matrix(), y);
}

ValueFunction lift(const CompressionBasis& basis, const ValueFunction& compressed) {
    if (!compressed.empty() && compressed.dim() != basis.k())
        throw InvalidArgument("value function dimension does not match the basis");
    ValueFunction out;
    out.space = "original";
    for (const auto& v : compressed.vectors) out.vectors.push_back({basis.F * v.values, v.action});
    return out;
}

DiagnosticReport lemma1_check(const Pomdp& model, const Matrix& A, const ValueFunction& gamma_bar, const Belief& b) {
    DiagnosticReport rep;
    rep.check = "lemma1";
    const Vector bbar = A.transpose() * b;
    const double l1 = bbar.lpNorm<1>();
    if (!(l1 > 0.0) || (bbar.array() < 0.0).any()) {
        rep.status = CheckStatus::NotApplicable;
        rep.note = l1 > 0.0 ? "b^T A has negative entries" : "b^T A is zero";
        return rep;
    }
    const auto n = static_cast<Eigen::Index>(model.n_states);
    const double lhs = vbar_value(model, A, gamma_bar, b);
    const double rhs = l1 * vbar_value(model, Matrix::Identity(n, n), gamma_bar, bbar / l1);
    const double tol = 1e-9 * (1.0 + std::abs(lhs));
    rep.margin = tol - std::abs(lhs - rhs);
    rep.status = rep.margin >= 0.0 ? CheckStatus::Pass : CheckStatus::Fail;
    if (!rep.pass()) {
        rep.witness = {{"b", b}, {"bbar", bbar}, {"lhs_rhs", Vector{{lhs, rhs}}}};
    }
    return rep;
}

DiagnosticReport lemma4_detector(const CompressionBasis& basis, const Matrix& beliefs, const Lemma4Options& opt) {
    DiagnosticReport rep;
    rep.check = "lemma4";
    if (beliefs.cols() == 0) throw InvalidArgument("lemma4_detector needs at least one belief");
    const Matrix bt = compress_beliefs(basis, beliefs);
    const auto k = bt.rows();
    const bool nonneg = (basis.F.array() >= 0.0).all();

    // gap[i] = b~^T alpha~1 - b~^T alpha~2 for draw i; positive means domination was not preserved.
    std::vector<double> gap(opt.draws);
    std::vector<Eigen::Index> column(opt.draws);
    std::vector<Vector> a1(opt.draws), a2(opt.draws);
    parallel::for_each_index(opt.draws, [&](std::size_t i) {
        Rng rng(derive_seed(opt.seed, i));
        const auto j = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(bt.cols())));
        Vector lo(k), delta = Vector::Zero(k);
        for (Eigen::Index r = 0; r < k; ++r) lo[r] = 2.0 * uniform01(rng) - 1.0;
        if (uniform01(rng) < 0.5) {
            delta[static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(k)))] = uniform01(rng) + 1e-3;
        } else {
            for (Eigen::Index r = 0; r < k; ++r) delta[r] = uniform01(rng);
        }
        const Vector hi = lo + delta;
        const Vector x = bt.col(j);
        gap[i] = x.dot(lo) - x.dot(hi);
        column[i] = j;
        a1[i] = lo;
        a2[i] = hi;
    });

    double worst = -std::numeric_limits<double>::infinity();
    std::size_t worst_i = 0;
    for (std::size_t i = 0; i < opt.draws; ++i) {
        if (gap[i] > worst) {
            worst = gap[i];
            worst_i = i;
        }
    }
    rep.margin = opt.draws ? -worst : 0.0;
    if (opt.draws && worst > 0.0) {
        rep.status = CheckStatus::Fail;
        rep.witness = {{"b_tilde", bt.col(column[worst_i])}, {"alpha1", a1[worst_i]}, {"alpha2", a2[worst_i]}};
        std::ostringstream os;
        os << (nonneg ? "nonnegative basis produced a witness" : "negative basis entries break domination pruning")
           << " (draw " << worst_i << ")";
        rep.note = os.str();
    } else {
        rep.status = nonneg ? CheckStatus::Pass : CheckStatus::NoneFound;
        rep.note = nonneg ? "basis is nonnegative" : "no witness found";
    }
    return rep;
}

ValueLossTable value_loss_decomposition(const Pomdp& model, const CompressionBasis& basis, const ValueFunction& gamma,
                                        const ValueFunction& gamma_c, const Matrix& beliefs) {
    if (gamma.empty() || gamma_c.empty()) throw InvalidArgument("value_loss_decomposition needs value functions");
    const auto owt = obs_weighted_transitions(model);
    const Matrix A = basis.projection();
    const Matrix& F = basis.F;
    auto v_orig = [&](const Vector& x) { return gamma.value(x); };
    auto v_bar = [&](const Vector& x) { return gamma_c.value(F.transpose() * x); };

    ValueLossTable table;
    table.rows.resize(static_cast<std::size_t>(beliefs.cols()));
    parallel::for_each_index(table.rows.size(), [&](std::size_t i) {
        const Vector b = beliefs.col(static_cast<Eigen::Index>(i));
        const Vector bt = F.transpose() * b;
        ValueLossRow& row = table.rows[i];
        row.index = i;
        row.action = greedy_action(gamma_c, bt);
        row.lhs = v_orig(b) - gamma_c.value(bt);
        double sum = 0.0;
        for (std::size_t z = 0; z < owt.n_obs; ++z) {
            const Vector next = owt.at(row.action, z).left_multiply(b);
            sum += v_orig(next) - v_bar(next);
        }
        row.rhs = model.discount * sum;
        row.residual = std::abs(row.lhs - row.rhs);
        row.premise = (A.transpose() * b - b).cwiseAbs().maxCoeff() <= 1e-8;
    });
    for (const auto& row : table.rows) {
        if (!row.premise) {
            ++table.premise_failures;
            continue;
        }
        table.max_residual = std::max(table.max_residual, row.residual);
    }
    return table;
}

DiagnosticReport value_gap_check(const Pomdp& model, const CompressionBasis& basis, const ValueFunction& gamma,
                                const ValueFunction& gamma_c, const Matrix& beliefs) {
    DiagnosticReport rep;
    rep.check = "value_gap";
    const auto err = error_report(model, basis);
    if (!err.value_bound) {
        rep.status = CheckStatus::NotApplicable;
        rep.note = err.bound_note;
        return rep;
    }
    double measured = 0.0;
    Eigen::Index worst = 0;
    for (Eigen::Index j = 0; j < beliefs.cols(); ++j) {
        const Vector b = beliefs.col(j);
        const double d = std::abs(gamma.value(b) - gamma_c.value(basis.F.transpose() * b));
        if (d > measured) {
            measured = d;
            worst = j;
        }
    }
    rep.margin = *err.value_bound - measured;
    rep.status = rep.margin >= 0.0 ? CheckStatus::Pass : CheckStatus::Fail;
    std::ostringstream os;
    os.precision(17);
    os << "measured=" << measured << " bound=" << *err.value_bound;
    rep.note = os.str();
    if (!rep.pass() && beliefs.cols() > 0) rep.witness = {{"b", beliefs.col(worst)}};
    return rep;
}

}  // namespace bsqz

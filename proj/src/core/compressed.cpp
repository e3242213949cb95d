#include "core/compressed.hpp"

namespace bsqz {

namespace {

void check_dims(const Pomdp& model, const CompressionBasis& basis) {
    if (basis.F.rows() != static_cast<Eigen::Index>(model.n_states))
        throw InvalidArgument("basis row count differs from the state count");
    if (basis.F_dag.rows() != basis.F.cols() || basis.F_dag.cols() != basis.F.rows())
        throw InvalidArgument("decompression map has the wrong shape");
}

}  // namespace

CompressedPomdp build_compressed(const Pomdp& model, const CompressionBasis& basis) {
    check_dims(model, basis);
    const auto owt = obs_weighted_transitions(model);
    CompressedPomdp c;
    c.n_actions = model.n_actions;
    c.n_obs = model.n_obs;
    c.discount = model.discount;
    c.basis = basis;
    c.reward = basis.F_dag * model.reward;
    c.maps.reserve(owt.maps.size());
    for (const auto& m : owt.maps) c.maps.push_back(basis.F_dag * m.multiply(basis.F));
    return c;
}

Vector compress_belief(const CompressionBasis& basis, const Belief& b) {
    if (b.size() != basis.F.rows()) throw InvalidArgument("compress_belief: dimension mismatch");
    return basis.F.transpose() * b;
}

Matrix compress_beliefs(const CompressionBasis& basis, const Matrix& beliefs) {
    if (beliefs.rows() != basis.F.rows()) throw InvalidArgument("compress_beliefs: dimension mismatch");
    return basis.F.transpose() * beliefs;
}

CompressionErrorReport error_report(const Pomdp& model, const CompressionBasis& basis, std::optional<double> v_sup) {
    check_dims(model, basis);
    const auto owt = obs_weighted_transitions(model);
    const Matrix& F = basis.F;
    const Matrix& Fd = basis.F_dag;
    const auto n = F.rows();

    CompressionErrorReport rep;
    rep.eps_r = inf_norm(Matrix(model.reward - F * (Fd * model.reward)));
    for (const auto& m : owt.maps) {
        const Matrix TF = m.multiply(F);
        rep.eps_t = std::max(rep.eps_t, inf_norm(Matrix(TF - F * (Fd * TF))));
    }
    const Matrix A = F * Fd;
    rep.a_inf = inf_norm(A);
    rep.i_minus_a_inf = inf_norm(Matrix(Matrix::Identity(n, n) - A));
    rep.contraction_margin = model.discount * rep.a_inf;
    rep.v_sup = v_sup.value_or(model.max_abs_reward() / (1.0 - model.discount));
    if (rep.contraction_margin < 1.0) {
        rep.value_bound = rep.i_minus_a_inf / (1.0 - rep.contraction_margin) *
                          (inf_norm(model.reward) + model.discount * static_cast<double>(model.n_obs) * rep.v_sup);
    } else {
        rep.bound_note = "unavailable: contraction margin >= 1";
    }
    return rep;
}

}  // namespace bsqz

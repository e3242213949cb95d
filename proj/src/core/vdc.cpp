#include "core/vdc.hpp"

#include "core/linalg.hpp"
#include "core/parallel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bsqz {

std::string to_string(VdcMode m) {
    switch (m) {
        case VdcMode::LosslessRank: return "lossless-rank";
        case VdcMode::LosslessResidual: return "lossless-residual";
        case VdcMode::LossyGreedy: return "lossy-greedy";
    }
    return "unknown";
}

VdcMode vdc_mode_from_string(const std::string& s) {
    if (s == "lossless-rank") return VdcMode::LosslessRank;
    if (s == "lossless-residual") return VdcMode::LosslessResidual;
    if (s == "lossy-greedy" || s == "lossy") return VdcMode::LossyGreedy;
    throw InvalidArgument("unknown VDC mode '" + s + "'");
}

void VdcConfig::validate() const {
    if (mode == VdcMode::LosslessResidual && !(tau > 0.0)) throw InvalidArgument("lossless-residual VDC requires tau > 0");
    if (mode == VdcMode::LossyGreedy && k < 1) throw InvalidArgument("lossy-greedy VDC requires k >= 1");
}

double dependence_residual(const Matrix& F, const Vector& c) {
    if (F.cols() == 0) return c.norm();
    if (F.rows() != c.size()) throw InvalidArgument("dependence_residual: dimension mismatch");
    const Vector w = linalg::least_squares(F, c);
    return (c - F * w).norm();
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Candidate {
    std::size_t id;
    Vector c;
    Vector res;  // component of c orthogonal to span(F)
    double norm;
};

/// Numerical-rank bookkeeping for F = Q Rf.
class RankTracker {
public:
    RankTracker(Eigen::Index n, double fixed_tol) : n_(n), fixed_tol_(fixed_tol) {}

    void append(const Vector& w, double r) {
        const Eigen::Index k = rf_.cols();
        Matrix next = Matrix::Zero(k + 1, k + 1);
        next.topLeftCorner(k, k) = rf_;
        next.col(k).head(k) = w;
        next(k, k) = r;
        rf_ = std::move(next);
        const Vector s = Eigen::JacobiSVD<Matrix>(rf_).singularValues();
        smax_ = s(0);
        smin_ = s(s.size() - 1);
        const double tol = fixed_tol_ >= 0.0 ? fixed_tol_ : cutoff(rf_.cols(), smax_);
        rank_ = (s.array() > tol).count();
    }

    /// rank([F, c]) > rank(F), with c = Q w + res, ||res|| = r.
    bool increases_rank(const Matrix& Q, const Candidate& cand, double r) const {
        const Eigen::Index k = rf_.cols();
        if (k == 0) {
            const double tol = fixed_tol_ >= 0.0 ? fixed_tol_ : cutoff(1, cand.norm);
            return cand.norm > tol;
        }
        const double w_norm = std::sqrt(std::max(0.0, cand.norm * cand.norm - r * r));
        const double tol_lo = fixed_tol_ >= 0.0 ? fixed_tol_ : cutoff(k + 1, std::max(smax_, cand.norm));
        const double tol_hi = fixed_tol_ >= 0.0 ? fixed_tol_ : cutoff(k + 1, std::hypot(smax_, cand.norm));
        if (rank_ == k) {
            // sigma_min([F, c]) <= r always; the lower bound comes from the block inverse.
            if (r <= tol_lo) return false;
            if (smin_ > 0.0) {
                const double inv_norm = 1.0 / smin_ + w_norm / (smin_ * r) + 1.0 / r;
                if (1.0 / inv_norm > tol_hi) return true;
            }
        }
        Matrix M = Matrix::Zero(k + 1, k + 1);
        M.topLeftCorner(k, k) = rf_;
        M.col(k).head(k) = Q.transpose() * cand.c;
        M(k, k) = r;
        const Vector s = Eigen::JacobiSVD<Matrix>(M).singularValues();
        const double tol_m = fixed_tol_ >= 0.0 ? fixed_tol_ : cutoff(k + 1, s(0));
        const double tol_f = fixed_tol_ >= 0.0 ? fixed_tol_ : cutoff(k, smax_);
        const Vector sf = Eigen::JacobiSVD<Matrix>(rf_).singularValues();
        return (s.array() > tol_m).count() > (sf.array() > tol_f).count();
    }

private:
    double cutoff(Eigen::Index cols, double sigma_max) const {
        return static_cast<double>(std::max(n_, cols)) * kEps * sigma_max;
    }

    Eigen::Index n_;
    double fixed_tol_;
    Matrix rf_;
    double smax_ = 0.0;
    double smin_ = 0.0;
    Eigen::Index rank_ = 0;
};

/// res <- res - Q (Q^T res), applied twice (classical Gram-Schmidt with reorthogonalisation).
Vector orthogonal_part(const Matrix& Q, const Vector& c) {
    if (Q.cols() == 0) return c;
    Vector r = c - Q * (Q.transpose() * c);
    r -= Q * (Q.transpose() * r);
    return r;
}

}  // namespace

KrylovBasis krylov_basis(const Pomdp& model, const VdcConfig& cfg) {
    cfg.validate();
    const auto owt = obs_weighted_transitions(model);
    const auto n = static_cast<Eigen::Index>(model.n_states);
    const bool residual_test = cfg.mode == VdcMode::LosslessResidual;
    const bool lossy = cfg.mode == VdcMode::LossyGreedy;

    KrylovBasis out;
    out.dependence_test = residual_test ? "residual" : "rank";
    out.F.resize(n, 0);
    Matrix Q(n, 0);
    RankTracker rank(n, cfg.rank_tol);

    std::vector<Candidate> cands;
    std::size_t next_id = 0;
    auto push_candidate = [&](Vector c) {
        Candidate cand{next_id++, c, orthogonal_part(Q, c), c.norm()};
        cands.push_back(std::move(cand));
    };
    for (Eigen::Index a = 0; a < model.reward.cols(); ++a) push_candidate(model.reward.col(a));

    auto is_dependent = [&](const Candidate& cand) {
        const double r = cand.res.norm();
        if (residual_test) return r < cfg.tau;
        return !rank.increases_rank(Q, cand, r);
    };
    auto drop_dependent = [&] {
        std::vector<char> dependent(cands.size(), 0);
        parallel::for_each_index(cands.size(), [&](std::size_t i) { dependent[i] = is_dependent(cands[i]) ? 1 : 0; });
        std::size_t w = 0;
        for (std::size_t i = 0; i < cands.size(); ++i)
            if (!dependent[i]) cands[w++] = std::move(cands[i]);
        cands.resize(w);
    };

    drop_dependent();
    if (cands.empty()) out.warnings.push_back("reward matrix has no independent column; basis is empty");

    while (!cands.empty()) {
        if (lossy && static_cast<std::size_t>(out.F.cols()) >= cfg.k) break;
        if (out.F.cols() >= n) break;

        std::size_t pick = 0;
        std::vector<double> residuals(cands.size());
        for (std::size_t i = 0; i < cands.size(); ++i) residuals[i] = cands[i].res.norm();
        if (lossy) {
            for (std::size_t i = 1; i < cands.size(); ++i)
                if (residuals[i] > residuals[pick]) pick = i;
        }
        KrylovStep step;
        step.candidate_id = cands[pick].id;
        step.residual = residuals[pick];
        for (std::size_t i = 0; i < cands.size(); ++i)
            if (i != pick) step.max_other_residual = std::max(step.max_other_residual, residuals[i]);
        out.steps.push_back(step);

        Candidate chosen = std::move(cands[pick]);
        cands.erase(cands.begin() + static_cast<std::ptrdiff_t>(pick));

        const Vector w = Q.transpose() * chosen.c;
        const Vector res = orthogonal_part(Q, chosen.c);
        const double r = res.norm();
        rank.append(w, r);
        const Eigen::Index k = out.F.cols();
        out.F.conservativeResize(n, k + 1);
        out.F.col(k) = chosen.c;
        Q.conservativeResize(n, k + 1);
        Q.col(k) = res / r;

        const Vector q = Q.col(k);
        parallel::for_each_index(cands.size(), [&](std::size_t i) {
            auto& rv = cands[i].res;
            rv -= q * q.dot(rv);
        });
        for (std::size_t a = 0; a < model.n_actions; ++a)
            for (std::size_t z = 0; z < model.n_obs; ++z) push_candidate(owt.at(a, z).multiply(chosen.c));
        drop_dependent();
    }
    return out;
}

CompressedMaps fit_compressed_maps(const Pomdp& model, const Matrix& F) {
    if (F.rows() != static_cast<Eigen::Index>(model.n_states))
        throw InvalidArgument("fit_compressed_maps: basis row count differs from state count");
    if (F.cols() == 0 || linalg::numerical_rank(F) < F.cols())
        throw NumericalError("fit_compressed_maps: basis is rank deficient");
    const Matrix F_dag = linalg::pseudo_inverse(F);
    const auto owt = obs_weighted_transitions(model);
    CompressedMaps out;
    out.reward = F_dag * model.reward;
    out.maps.reserve(owt.maps.size());
    for (const auto& m : owt.maps) out.maps.push_back(F_dag * m.multiply(F));
    return out;
}

CompressionBasis vdc_compress(const Pomdp& model, const VdcConfig& cfg) {
    return vdc_basis(model, cfg, krylov_basis(model, cfg));
}

CompressionBasis vdc_basis(const Pomdp& model, const VdcConfig& cfg, KrylovBasis kb) {
    CompressionBasis b;
    b.method = CompressionMethod::Vdc;
    b.provenance = to_string(cfg.mode) + ";dependence=" + kb.dependence_test;
    b.F_dag = kb.F.cols() ? linalg::pseudo_inverse(kb.F) : Matrix(0, kb.F.rows());
    b.nonnegative = kb.F.size() == 0 || kb.F.minCoeff() >= 0.0;
    b.F = std::move(kb.F);
    const double a_inf = inf_norm(Matrix(b.F * b.F_dag));
    b.contraction_margin = model.discount * a_inf;
    return b;
}

}  // namespace bsqz

#include "core/nmf.hpp"

#include "core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bsqz {

std::string to_string(NmfVariant v) {
    switch (v) {
        case NmfVariant::Onmf: return "onmf";
        case NmfVariant::Lpnmf: return "lpnmf";
        case NmfVariant::Pnmf: return "pnmf";
    }
    return "unknown";
}

NmfVariant nmf_variant_from_string(const std::string& s) {
    if (s == "onmf") return NmfVariant::Onmf;
    if (s == "lpnmf") return NmfVariant::Lpnmf;
    if (s == "pnmf") return NmfVariant::Pnmf;
    throw InvalidArgument("unknown NMF variant '" + s + "'");
}

std::string to_string(StopReason r) { return r == StopReason::Tolerance ? "tol" : "max_iters"; }

void NmfConfig::validate() const {
    if (k < 1) throw InvalidArgument("NMF requires k >= 1");
    if (!(lambda >= 0.0)) throw InvalidArgument("NMF requires lambda >= 0");
    if (max_iters < 1) throw InvalidArgument("NMF requires max_iters >= 1");
    if (!(tol > 0.0)) throw InvalidArgument("NMF requires tol > 0");
    if (restarts < 1) throw InvalidArgument("NMF requires restarts >= 1");
    if (!(delta >= 0.0)) throw InvalidArgument("LP-NMF requires delta >= 0");
    if (!(locality_weight >= 0.0)) throw InvalidArgument("LP-NMF requires a nonnegative locality weight");
}

Matrix nmf_random_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, std::uint64_t stream) {
    Rng rng(derive_seed(seed, stream));
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = 0.1 + uniform01(rng);
    return m;
}

namespace {

void require_factorisable(const Matrix& B, std::size_t k) {
    if (B.size() == 0) throw InvalidArgument("NMF input is empty");
    if (!B.allFinite()) throw InvalidArgument("NMF input is not finite");
    if (B.minCoeff() < 0.0) throw InvalidArgument("NMF input has negative entries");
    if (B.maxCoeff() <= 0.0) throw InvalidArgument("NMF input is all zero");
    if (k > static_cast<std::size_t>(B.rows())) throw InvalidArgument("NMF rank exceeds the row count");
}

/// num ./ den with factor 1 wherever den is below the division guard.
Matrix guarded_ratio(const Matrix& num, const Matrix& den, std::size_t* guarded) {
    Matrix r(num.rows(), num.cols());
    std::size_t g = 0;
    for (Eigen::Index j = 0; j < num.cols(); ++j) {
        for (Eigen::Index i = 0; i < num.rows(); ++i) {
            if (den(i, j) < kDivisionGuard) {
                r(i, j) = 1.0;
                ++g;
            } else {
                r(i, j) = num(i, j) / den(i, j);
            }
        }
    }
    if (guarded) *guarded += g;
    return r;
}

bool no_increase(double g_new, double g_old) {
    return std::isfinite(g_new) && g_new <= g_old + 1e-14 * std::max(1.0, std::abs(g_old));
}

/// X .* ratio, shortened to X .* ratio^p (p = 1/2, 1/4, ...) when the full step raises
/// the objective. Returns X unchanged if no tried exponent decreases it.
template <class Objective>
Matrix monotone_step(const Matrix& X, const Matrix& ratio, double g_old, const Objective& objective, double& g_new,
                     FactorisationTrace& trace) {
    Matrix cand = X.cwiseProduct(ratio);
    g_new = objective(cand);
    if (no_increase(g_new, g_old)) return cand;
    double p = 0.5;
    for (int attempt = 0; attempt < 40; ++attempt, p *= 0.5) {
        cand = X.array() * ratio.array().pow(p);
        g_new = objective(cand);
        if (no_increase(g_new, g_old)) {
            ++trace.damped_steps;
            return cand;
        }
    }
    g_new = g_old;
    return X;
}

constexpr std::size_t kSnapEvery = 10;
constexpr double kSnapRelative = 1e-2;
constexpr std::size_t kSnapBurst = 20;
constexpr std::uint64_t kRestartStream = 16;

bool converged(double g_old, double g_new, double tol) {
    const double denom = std::max(std::abs(g_old), std::numeric_limits<double>::min());
    return (g_old - g_new) / denom < tol;
}

/// Square root L of BB^T (BB^T = L L^T), so the P-NMF fit term is ||L - F F^T L||_F^2 with
/// no dependence on m and without the cancellation of the trace expansion.
Matrix gram_root(const Matrix& BBt) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(BBt);
    const Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal();
}

double pnmf_objective_root(const Matrix& F, const Matrix& L, double lambda) {
    const Matrix S = F.transpose() * F;
    return 0.5 * (L - F * (F.transpose() * L)).squaredNorm() + 0.5 * lambda * S.squaredNorm();
}

double contraction_margin(const CompressionBasis& b, double discount) {
    return discount > 0.0 ? discount * inf_norm(Matrix(b.F * b.F_dag)) : -1.0;
}

}  // namespace

// ---- P-NMF ---------------------------------------------------------------

double pnmf_objective(const Matrix& F, const Matrix& B, double lambda) {
    if (F.rows() != B.rows()) throw InvalidArgument("pnmf_objective: dimension mismatch");
    const Matrix P = F * F.transpose();
    return 0.5 * (B - P * B).squaredNorm() + 0.5 * lambda * P.squaredNorm();
}

Matrix pnmf_gradient(const Matrix& F, const Matrix& B, double lambda) {
    if (F.rows() != B.rows()) throw InvalidArgument("pnmf_gradient: dimension mismatch");
    const Matrix BBt = B * B.transpose();
    const Matrix BBtF = BBt * F;
    const Matrix FtF = F.transpose() * F;
    return -2.0 * BBtF + F * (F.transpose() * BBtF) + BBtF * FtF + 2.0 * lambda * F * FtF;
}

Matrix pnmf_ratio(const Matrix& F, const Matrix& BBt, double lambda, std::size_t* guarded) {
    const Matrix BBtF = BBt * F;
    const Matrix FtF = F.transpose() * F;
    const Matrix den = F * (F.transpose() * BBtF) + BBtF * FtF + 2.0 * lambda * F * FtF;
    return guarded_ratio(2.0 * BBtF, den, guarded);
}

PnmfStep pnmf_update_step(const Matrix& F, const Matrix& B, double lambda) {
    if (F.rows() != B.rows()) throw InvalidArgument("pnmf_update_step: dimension mismatch");
    if (F.size() && F.minCoeff() < 0.0) throw InvalidArgument("pnmf_update_step: F must be nonnegative");
    PnmfStep step;
    const Matrix BBt = B * B.transpose();
    step.F = F.cwiseProduct(pnmf_ratio(F, BBt, lambda, &step.guarded));
    return step;
}

namespace {

NmfResult pnmf_single(const Matrix& B, const NmfConfig& cfg, std::uint64_t stream) {
    const Matrix BBt = B * B.transpose();
    const double tr_bbt = BBt.trace();
    const double lambda = cfg.lambda;

    Matrix F = nmf_random_init(B.rows(), static_cast<Eigen::Index>(cfg.k), cfg.seed, stream);
    {
        const Matrix S = F.transpose() * F;
        const Matrix G = F.transpose() * (BBt * F);
        const double pb = std::sqrt(std::max((G.cwiseProduct(S.transpose())).sum(), 0.0));
        if (pb > 0.0) F *= std::sqrt(std::sqrt(tr_bbt) / pb);
    }

    NmfResult res;
    res.lambda = lambda;
    auto& trace = res.trace;
    const Matrix L = gram_root(BBt);
    auto objective = [&](const Matrix& X) { return pnmf_objective_root(X, L, lambda); };
    double g = objective(F);
    trace.objective.push_back(g);
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        const Matrix ratio = pnmf_ratio(F, BBt, lambda, &trace.guarded_entries);
        double g_new = g;
        if (cfg.accelerate && it % kSnapEvery == kSnapEvery - 1) {
            // Entries that are small and still shrinking are sent straight to zero,
            // kept only when that does not raise the objective.
            Matrix cand = F;
            std::size_t hits = 0;
            const Vector colmax = F.colwise().maxCoeff().transpose();
            for (Eigen::Index j = 0; j < F.cols(); ++j)
                for (Eigen::Index i = 0; i < F.rows(); ++i)
                    if (F(i, j) > 0.0 && F(i, j) < kSnapRelative * colmax[j] && ratio(i, j) < 1.0) {
                        cand(i, j) = 0.0;
                        ++hits;
                    }
            if (hits) {
                // The coupled large entries need a few plain steps to re-balance, so the
                // move is judged after that burst and kept only if it ends lower.
                double g_snap = objective(cand);
                FactorisationTrace scratch;
                for (std::size_t b = 0; b < kSnapBurst; ++b) {
                    const Matrix r = pnmf_ratio(cand, BBt, lambda, &scratch.guarded_entries);
                    double g_next = g_snap;
                    cand = monotone_step(cand, r, g_snap, objective, g_next, scratch);
                    g_snap = g_next;
                }
                if (no_increase(g_snap, g) && g_snap < g) {
                    F = std::move(cand);
                    trace.snapped_entries += hits;
                    trace.guarded_entries += scratch.guarded_entries;
                    g_new = g_snap;
                }
            }
        }
        if (g_new == g) F = monotone_step(F, ratio, g, objective, g_new, trace);
        trace.objective.push_back(g_new);
        trace.iterations = it + 1;
        const bool done = converged(g, g_new, cfg.tol);
        g = g_new;
        if (done) {
            trace.stop_reason = StopReason::Tolerance;
            break;
        }
    }
    res.basis = transpose_basis(std::move(F), CompressionMethod::Pnmf);
    res.basis.contraction_margin = contraction_margin(res.basis, cfg.discount);
    return res;
}

}  // namespace

NmfResult pnmf_factorize(const Matrix& B, const NmfConfig& cfg) {
    cfg.validate();
    require_factorisable(B, cfg.k);
    NmfResult best = pnmf_single(B, cfg, 0);
    for (std::size_t r = 1; r < cfg.restarts; ++r) {
        NmfResult cand = pnmf_single(B, cfg, kRestartStream + r);
        if (cand.trace.objective.back() < best.trace.objective.back()) best = std::move(cand);
    }
    return best;
}

NmfResult pnmf_factorize_auto(const Matrix& B, NmfConfig cfg, double discount) {
    if (!(discount > 0.0 && discount < 1.0)) throw InvalidArgument("pnmf_factorize_auto requires a discount in (0, 1)");
    cfg.discount = discount;
    NmfResult best;
    double best_gap = std::numeric_limits<double>::infinity();
    for (double lambda : kPnmfLambdaGrid) {
        cfg.lambda = lambda;
        NmfResult r = pnmf_factorize(B, cfg);
        const double gap = std::abs(r.basis.contraction_margin - 1.0);
        if (gap < best_gap) {
            best_gap = gap;
            best = std::move(r);
        }
    }
    return best;
}

// ---- O-NMF ---------------------------------------------------------------

double onmf_objective(const Matrix& F, const Matrix& H, const Matrix& B, double lambda) {
    const Matrix S = F.transpose() * F;
    const double ortho = static_cast<double>(F.rows()) - 2.0 * S.trace() + S.squaredNorm();
    return (B - F * H).squaredNorm() + lambda * std::max(ortho, 0.0);
}

double onmf_auto_lambda(const Matrix& B) { return B.squaredNorm() / static_cast<double>(B.rows()); }

NmfResult onmf_factorize(const Matrix& B, const NmfConfig& cfg) {
    cfg.validate();
    require_factorisable(B, cfg.k);
    const auto k = static_cast<Eigen::Index>(cfg.k);
    const double lambda = cfg.lambda_auto ? onmf_auto_lambda(B) : cfg.lambda;

    Matrix F = nmf_random_init(B.rows(), k, cfg.seed, 1);
    Matrix H = nmf_random_init(k, B.cols(), cfg.seed, 2);
    {
        const double fh = (F * H).norm();
        if (fh > 0.0) {
            const double s = std::sqrt(B.norm() / fh);
            F *= s;
            H *= s;
        }
    }

    NmfResult res;
    res.lambda = lambda;
    auto& trace = res.trace;
    double g = onmf_objective(F, H, B, lambda);
    trace.objective.push_back(g);
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        const double g_start = g;
        {
            const Matrix FtF = F.transpose() * F;
            const Matrix ratio = guarded_ratio(F.transpose() * B, FtF * H, &trace.guarded_entries);
            auto obj = [&](const Matrix& X) { return onmf_objective(F, X, B, lambda); };
            double g_new = g;
            H = monotone_step(H, ratio, g, obj, g_new, trace);
            g = g_new;
        }
        {
            const Matrix HHt = H * H.transpose();
            const Matrix num = B * H.transpose() + 2.0 * lambda * F;
            const Matrix den = F * HHt + 2.0 * lambda * F * (F.transpose() * F);
            const Matrix ratio = guarded_ratio(num, den, &trace.guarded_entries);
            auto obj = [&](const Matrix& X) { return onmf_objective(X, H, B, lambda); };
            double g_new = g;
            F = monotone_step(F, ratio, g, obj, g_new, trace);
            g = g_new;
        }
        trace.objective.push_back(g);
        trace.iterations = it + 1;
        if (converged(g_start, g, cfg.tol)) {
            trace.stop_reason = StopReason::Tolerance;
            break;
        }
    }
    res.coefficients = std::move(H);
    res.basis = transpose_basis(std::move(F), CompressionMethod::Onmf);
    res.basis.contraction_margin = contraction_margin(res.basis, cfg.discount);
    return res;
}

// ---- LP-NMF --------------------------------------------------------------

namespace {

constexpr double kLogFloor = 1e-12;

inline double safe_log(double x) { return std::log(std::max(x, kLogFloor)); }

double kl_divergence(const Matrix& B, const Matrix& FH) {
    double d = 0.0;
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
        for (Eigen::Index i = 0; i < B.rows(); ++i) {
            const double b = B(i, j);
            const double y = FH(i, j);
            d += y - b;
            if (b > 0.0) d += b * (std::log(b) - safe_log(y));
        }
    }
    return d;
}

double locality_risk(const Matrix& H, const NeighbourhoodGraph& graph) {
    double r = 0.0;
    for (const auto& [i, j] : graph.edges())
        r += symmetric_kl(H.col(static_cast<Eigen::Index>(i)), H.col(static_cast<Eigen::Index>(j)));
    return r;
}

}  // namespace

double symmetric_kl(const Vector& p, const Vector& q) {
    double s = 0.0;
    for (Eigen::Index l = 0; l < p.size(); ++l) s += (p(l) - q(l)) * (safe_log(p(l)) - safe_log(q(l)));
    return s;
}

double lpnmf_objective(const Matrix& F, const Matrix& H, const Matrix& B, const NeighbourhoodGraph& graph, double mu) {
    const double d = kl_divergence(B, F * H);
    return mu > 0.0 ? d + mu * locality_risk(H, graph) : d;
}

NmfResult lpnmf_factorize(const Matrix& B, const NmfConfig& cfg, const NeighbourhoodGraph& graph) {
    cfg.validate();
    require_factorisable(B, cfg.k);
    if (graph.node_count() != 0 && graph.node_count() != static_cast<std::size_t>(B.cols()))
        throw InvalidArgument("LP-NMF graph size differs from the belief count");
    const auto k = static_cast<Eigen::Index>(cfg.k);
    const double mu = cfg.locality_weight;

    Matrix F = nmf_random_init(B.rows(), k, cfg.seed, 3);
    Matrix H = nmf_random_init(k, B.cols(), cfg.seed, 4);
    {
        const double s = std::sqrt(B.sum() / (F * H).sum());
        F *= s;
        H *= s;
    }

    NmfResult res;
    auto& trace = res.trace;
    auto objective = [&](const Matrix& f, const Matrix& h) { return lpnmf_objective(f, h, B, graph, mu); };
    double g = objective(F, H);
    trace.objective.push_back(g);
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        const double g_start = g;
        {
            const Matrix Q = B.cwiseQuotient((F * H).cwiseMax(kLogFloor));
            const Matrix num = Q * H.transpose();
            const Matrix den = Vector::Ones(B.rows()) * H.rowwise().sum().transpose();
            const Matrix ratio = guarded_ratio(num, den, &trace.guarded_entries);
            auto obj = [&](const Matrix& X) { return objective(X, H); };
            double g_new = g;
            F = monotone_step(F, ratio, g, obj, g_new, trace);
            g = g_new;
        }
        {
            const Matrix Q = B.cwiseQuotient((F * H).cwiseMax(kLogFloor));
            Matrix num = F.transpose() * Q;
            Matrix den = F.colwise().sum().transpose() * Eigen::RowVectorXd::Ones(B.cols());
            if (mu > 0.0 && graph.node_count() != 0) {
                for (std::size_t j = 0; j < graph.node_count(); ++j) {
                    const auto jj = static_cast<Eigen::Index>(j);
                    for (auto i : graph.adjacency[j]) {
                        const auto ii = static_cast<Eigen::Index>(i);
                        for (Eigen::Index l = 0; l < k; ++l) {
                            const double hj = std::max(H(l, jj), kLogFloor);
                            const double hi = std::max(H(l, ii), kLogFloor);
                            const double log_ratio = std::log(hj) - std::log(hi);
                            // d/dh_j [(h_j - h_i)(log h_j - log h_i)] = log(h_j/h_i) + 1 - h_i/h_j
                            den(l, jj) += mu * (1.0 + std::max(0.0, log_ratio));
                            num(l, jj) += mu * (hi / hj + std::max(0.0, -log_ratio));
                        }
                    }
                }
            }
            const Matrix ratio = guarded_ratio(num, den, &trace.guarded_entries);
            auto obj = [&](const Matrix& X) { return objective(F, X); };
            double g_new = g;
            H = monotone_step(H, ratio, g, obj, g_new, trace);
            g = g_new;
        }
        trace.objective.push_back(g);
        trace.iterations = it + 1;
        if (converged(g_start, g, cfg.tol)) {
            trace.stop_reason = StopReason::Tolerance;
            break;
        }
    }

    // Nonnegative decompression map: min ||I - F F_dag||_F^2 over F_dag >= 0.
    Matrix Fd = nmf_random_init(k, B.rows(), cfg.seed, 5);
    {
        const Matrix FtF = F.transpose() * F;
        const Matrix Ft = F.transpose();
        const auto n = B.rows();
        auto obj = [&](const Matrix& X) { return (Matrix::Identity(n, n) - F * X).squaredNorm(); };
        double gd = obj(Fd);
        FactorisationTrace scratch;
        for (std::size_t it = 0; it < cfg.max_iters; ++it) {
            const Matrix ratio = guarded_ratio(Ft, FtF * Fd, &scratch.guarded_entries);
            double gd_new = gd;
            Fd = monotone_step(Fd, ratio, gd, obj, gd_new, scratch);
            const bool done = converged(gd, gd_new, cfg.tol);
            gd = gd_new;
            if (done) break;
        }
    }

    res.coefficients = std::move(H);
    res.basis.F = std::move(F);
    res.basis.F_dag = std::move(Fd);
    res.basis.method = CompressionMethod::Lpnmf;
    res.basis.nonnegative = res.basis.F.minCoeff() >= 0.0;
    res.basis.contraction_margin = contraction_margin(res.basis, cfg.discount);
    return res;
}

NmfResult lpnmf_compress(const BeliefMatrix& beliefs, const NmfConfig& cfg) {
    const BeliefMatrix sub = delta_subsample(beliefs, cfg.delta);
    NeighbourhoodGraph graph;
    if (sub.size() >= 2 && cfg.knn_k > 0) graph = knn_graph(sub, std::min(cfg.knn_k, sub.size() - 1));
    return lpnmf_factorize(sub.columns, cfg, graph);
}

NmfResult nmf_compress(const BeliefMatrix& beliefs, const NmfConfig& cfg) {
    switch (cfg.variant) {
        case NmfVariant::Pnmf:
            if (cfg.lambda_auto) return pnmf_factorize_auto(beliefs.columns, cfg, cfg.discount);
            return pnmf_factorize(beliefs.columns, cfg);
        case NmfVariant::Onmf: return onmf_factorize(beliefs.columns, cfg);
        case NmfVariant::Lpnmf: return lpnmf_compress(beliefs, cfg);
    }
    throw InvalidArgument("unknown NMF variant");
}

}  // namespace bsqz

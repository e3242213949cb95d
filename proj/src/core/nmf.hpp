#pragma once

#include "core/basis.hpp"
#include "core/sampling.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bsqz {

enum class NmfVariant { Onmf, Lpnmf, Pnmf };

std::string to_string(NmfVariant v);
NmfVariant nmf_variant_from_string(const std::string& s);

struct NmfConfig {
    NmfVariant variant = NmfVariant::Pnmf;
    std::size_t k = 1;
    double lambda = 0.0;
    /// O-NMF: balance lambda from the data; P-NMF: grid search toward eta * ||F F^T||_inf ~ 1.
    bool lambda_auto = false;
    std::size_t max_iters = 2000;
    /// Stop once the relative objective decrease drops below tol.
    double tol = 1e-7;
    std::uint64_t seed = 0;
    /// LP-NMF: subsampling radius, neighbour count and locality weight.
    double delta = 0.0;
    std::size_t knn_k = 5;
    double locality_weight = 0.1;
    /// P-NMF: every few iterations, zero the entries below 1e-2 of their column maximum
    /// whose multiplicative factor is < 1, when doing so does not raise the objective.
    bool accelerate = true;
    /// P-NMF: independent initialisations; the lowest final objective wins (ties to the first).
    std::size_t restarts = 1;
    /// Discount of the target model; when positive the basis records eta * ||F F_dag||_inf.
    double discount = -1.0;

    void validate() const;
};

enum class StopReason { Tolerance, MaxIters };

std::string to_string(StopReason r);

struct FactorisationTrace {
    std::vector<double> objective;  // objective[0] is the value at initialisation
    std::size_t iterations = 0;
    StopReason stop_reason = StopReason::MaxIters;
    /// Entries skipped by the division guard (denominator below 1e-300).
    std::size_t guarded_entries = 0;
    /// Multiplicative steps shortened (ratio^p, p < 1) to keep the objective non-increasing.
    std::size_t damped_steps = 0;
    /// Entries set to zero by the accelerated P-NMF sweep.
    std::size_t snapped_entries = 0;
};

struct NmfResult {
    CompressionBasis basis;
    FactorisationTrace trace;
    /// Compressed coordinates of the factorised beliefs (O-NMF / LP-NMF); empty for P-NMF.
    Matrix coefficients;
    double lambda = 0.0;
};

inline constexpr double kDivisionGuard = 1e-300;

/// Strictly positive entries drawn i.i.d. from uniform(0.1, 1.1).
Matrix nmf_random_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, std::uint64_t stream);

// ---- P-NMF ---------------------------------------------------------------

/// g(F) = 1/2 ||B - F F^T B||_F^2 + lambda/2 ||F F^T||_F^2, evaluated directly.
double pnmf_objective(const Matrix& F, const Matrix& B, double lambda);

/// dg/dF = -2 BB^T F + F F^T BB^T F + BB^T F F^T F + 2 lambda F F^T F.
Matrix pnmf_gradient(const Matrix& F, const Matrix& B, double lambda);

/// Multiplicative factor 2 (BB^T F) / [(F F^T BB^T F) + (BB^T F F^T F) + 2 lambda (F F^T F)].
/// Entries whose denominator is below 1e-300 get factor 1 and are counted in `guarded`.
Matrix pnmf_ratio(const Matrix& F, const Matrix& BBt, double lambda, std::size_t* guarded = nullptr);

struct PnmfStep {
    Matrix F;
    std::size_t guarded = 0;
};

/// One undamped multiplicative update F <- F .* ratio.
PnmfStep pnmf_update_step(const Matrix& F, const Matrix& B, double lambda);

/// Multiplicative P-NMF from a seeded uniform(0.1, 1.1) start scaled so ||F F^T B|| ~ ||B||.
NmfResult pnmf_factorize(const Matrix& B, const NmfConfig& cfg);

/// Runs pnmf_factorize over lambda in {0, 1e-3, 1e-2, 1e-1, 1} and keeps the basis whose
/// eta * ||F F^T||_inf is closest to 1 (ties to the smaller lambda).
NmfResult pnmf_factorize_auto(const Matrix& B, NmfConfig cfg, double discount);

inline const std::vector<double> kPnmfLambdaGrid{0.0, 1e-3, 1e-2, 1e-1, 1.0};

// ---- O-NMF ---------------------------------------------------------------

/// ||B - F H||_F^2 + lambda ||I - F F^T||_F^2
double onmf_objective(const Matrix& F, const Matrix& H, const Matrix& B, double lambda);

/// lambda = ||B||_F^2 / ||I||_F^2, so both terms start on a comparable scale.
double onmf_auto_lambda(const Matrix& B);

/// Alternating sweeps: H <- H .* (F^T B) / (F^T F H), then
/// F <- F .* (B H^T + 2 lambda F) / (F H H^T + 2 lambda F F^T F).
NmfResult onmf_factorize(const Matrix& B, const NmfConfig& cfg);

// ---- LP-NMF --------------------------------------------------------------

/// Symmetric (unnormalised) KL divergence sum_l (p_l - q_l)(log p_l - log q_l).
double symmetric_kl(const Vector& p, const Vector& q);

/// D_KL(B || F H) + mu * sum over graph edges of sKL(h_i, h_j); logs floored at 1e-12.
double lpnmf_objective(const Matrix& F, const Matrix& H, const Matrix& B, const NeighbourhoodGraph& graph, double mu);

/// KL-NMF with a locality penalty on H. F_dag minimises ||I - F F_dag||_F^2 over
/// nonnegative F_dag by multiplicative updates after the factorisation.
NmfResult lpnmf_factorize(const Matrix& B, const NmfConfig& cfg, const NeighbourhoodGraph& graph);

/// delta_subsample + knn_graph + lpnmf_factorize.
NmfResult lpnmf_compress(const BeliefMatrix& beliefs, const NmfConfig& cfg);

/// Dispatches on cfg.variant (and lambda_auto for P-NMF when discount > 0).
NmfResult nmf_compress(const BeliefMatrix& beliefs, const NmfConfig& cfg);

}  // namespace bsqz

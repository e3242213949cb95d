#pragma once

#include "core/basis.hpp"
#include "core/pomdp.hpp"

#include <string>
#include <vector>

namespace bsqz {

enum class VdcMode { LosslessRank, LosslessResidual, LossyGreedy };

std::string to_string(VdcMode m);
VdcMode vdc_mode_from_string(const std::string& s);

struct VdcConfig {
    VdcMode mode = VdcMode::LosslessRank;
    /// Least-squares residual threshold (lossless-residual): c is kept iff r >= tau.
    double tau = 1e-6;
    /// Truncation size (lossy-greedy).
    std::size_t k = 0;
    /// Singular-value cutoff for the numerical rank; negative selects max(n, cols) * eps * sigma_max.
    double rank_tol = -1.0;

    void validate() const;
};

/// One accepted column of the Krylov iteration.
struct KrylovStep {
    std::size_t candidate_id = 0;       // insertion order of the candidate
    double residual = 0.0;              // least-squares residual of the chosen column
    double max_other_residual = 0.0;    // largest residual among the candidates not chosen
};

struct KrylovBasis {
    Matrix F;
    std::vector<KrylovStep> steps;
    std::string dependence_test;  // "rank" or "residual"
    std::vector<std::string> warnings;
};

/// Krylov-subspace column selection. Candidates start as the columns of R, grow by
/// T^{a,z} c for each accepted column c, and candidates that became dependent on F
/// are dropped after every acceptance. Lossless modes take the oldest candidate;
/// lossy-greedy takes the candidate farthest (least squares) from span(F).
KrylovBasis krylov_basis(const Pomdp& model, const VdcConfig& cfg);

/// ||c - F w||_2 for the least-squares w; ||c||_2 when F has no columns.
double dependence_residual(const Matrix& F, const Vector& c);

struct CompressedMaps {
    Matrix reward;                  // k x |A|
    std::vector<Matrix> maps;       // [a * |Z| + z], k x k
};

/// Least-squares fit R~ = F^+ R, T~^{a,z} = F^+ T^{a,z} F. Rejects rank-deficient F.
CompressedMaps fit_compressed_maps(const Pomdp& model, const Matrix& F);

/// krylov_basis followed by the pseudo-inverse decompression map.
CompressionBasis vdc_compress(const Pomdp& model, const VdcConfig& cfg);

/// Pairs an already computed Krylov basis with its pseudo-inverse.
CompressionBasis vdc_basis(const Pomdp& model, const VdcConfig& cfg, KrylovBasis kb);

}  // namespace bsqz

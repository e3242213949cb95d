#pragma once

#include "core/basis.hpp"
#include "core/pomdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bsqz {

/// Reduced model R~ = F_dag R, T~^{a,z} = F_dag T^{a,z} F.
struct CompressedPomdp {
    Matrix reward;             // k x |A|
    std::vector<Matrix> maps;  // [a * |Z| + z], k x k
    std::size_t n_actions = 0;
    std::size_t n_obs = 0;
    double discount = 0.0;
    CompressionBasis basis;

    std::size_t k() const { return static_cast<std::size_t>(reward.rows()); }
    const Matrix& map(std::size_t a, std::size_t z) const { return maps[a * n_obs + z]; }
};

CompressedPomdp build_compressed(const Pomdp& model, const CompressionBasis& basis);

/// b~ = F^T b. Not a distribution in general.
Vector compress_belief(const CompressionBasis& basis, const Belief& b);

/// Compresses every column of a belief matrix.
Matrix compress_beliefs(const CompressionBasis& basis, const Matrix& beliefs);

struct CompressionErrorReport {
    double eps_r = 0.0;           // ||R - F R~||_inf
    double eps_t = 0.0;           // max_{a,z} ||T^{a,z} F - F T~^{a,z}||_inf
    double a_inf = 0.0;           // ||F F_dag||_inf
    double i_minus_a_inf = 0.0;   // ||I - F F_dag||_inf
    double contraction_margin = 0.0;  // eta ||F F_dag||_inf
    std::optional<double> value_bound;  // value-loss bound, when contraction_margin < 1
    std::string bound_note;
    double v_sup = 0.0;           // ||V*||_inf estimate used for the bound
};

/// All norms are induced infinity norms. The value-loss bound
///   ||I - A||_inf / (1 - eta ||A||_inf) * (||R||_inf + eta |Z| ||V*||_inf)
/// is reported only when eta ||A||_inf < 1. v_sup defaults to max|R| / (1 - eta).
CompressionErrorReport error_report(const Pomdp& model, const CompressionBasis& basis,
                                    std::optional<double> v_sup = std::nullopt);

}  // namespace bsqz

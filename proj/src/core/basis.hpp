#pragma once

#include "core/common.hpp"

#include <string>

namespace bsqz {

enum class CompressionMethod { Vdc, Onmf, Lpnmf, Pnmf, Identity };

std::string to_string(CompressionMethod m);
CompressionMethod compression_method_from_string(const std::string& s);

/// Linear compression b~ = F^T b with decompression map F_dag (k x n).
struct CompressionBasis {
    Matrix F;
    Matrix F_dag;
    CompressionMethod method = CompressionMethod::Identity;
    bool nonnegative = false;
    /// How dependence was judged while building the basis (VDC only), e.g. "rank" or "residual".
    std::string provenance;
    /// eta * ||F F_dag||_inf when the discount was known at construction, else negative.
    double contraction_margin = -1.0;

    std::size_t n() const { return static_cast<std::size_t>(F.rows()); }
    std::size_t k() const { return static_cast<std::size_t>(F.cols()); }
    /// F F_dag
    Matrix projection() const { return F * F_dag; }
};

/// Identity compression (k = n).
CompressionBasis identity_basis(std::size_t n);

/// Basis from F with F_dag = F^T (the NMF convention); nonnegative flag from F's entries.
CompressionBasis transpose_basis(Matrix F, CompressionMethod method);

}  // namespace bsqz

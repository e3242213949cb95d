#include "core/basis.hpp"

namespace bsqz {

std::string to_string(CompressionMethod m) {
    switch (m) {
        case CompressionMethod::Vdc: return "vdc";
        case CompressionMethod::Onmf: return "onmf";
        case CompressionMethod::Lpnmf: return "lpnmf";
        case CompressionMethod::Pnmf: return "pnmf";
        case CompressionMethod::Identity: return "identity";
    }
    return "unknown";
}

CompressionMethod compression_method_from_string(const std::string& s) {
    if (s == "vdc") return CompressionMethod::Vdc;
    if (s == "onmf") return CompressionMethod::Onmf;
    if (s == "lpnmf") return CompressionMethod::Lpnmf;
    if (s == "pnmf") return CompressionMethod::Pnmf;
    if (s == "identity" || s == "none") return CompressionMethod::Identity;
    throw InvalidArgument("unknown compression method '" + s + "'");
}

CompressionBasis identity_basis(std::size_t n) {
    CompressionBasis b;
    const auto N = static_cast<Eigen::Index>(n);
    b.F = Matrix::Identity(N, N);
    b.F_dag = Matrix::Identity(N, N);
    b.method = CompressionMethod::Identity;
    b.nonnegative = true;
    return b;
}

CompressionBasis transpose_basis(Matrix F, CompressionMethod method) {
    CompressionBasis b;
    b.F_dag = F.transpose();
    b.nonnegative = F.size() == 0 || F.minCoeff() >= 0.0;
    b.F = std::move(F);
    b.method = method;
    return b;
}

}  // namespace bsqz

#include "core/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <limits>

namespace bsqz::linalg {

namespace {

Vector singular_values(const Matrix& m) {
    if (m.size() == 0) return Vector();
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues();
}

double cutoff(Eigen::Index rows, Eigen::Index cols, double sigma_max) {
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * sigma_max;
}

}  // namespace

double default_rank_tol(const Matrix& m) {
    const Vector s = singular_values(m);
    return s.size() ? cutoff(m.rows(), m.cols(), s(0)) : 0.0;
}

Eigen::Index numerical_rank(const Matrix& m, double tol) {
    const Vector s = singular_values(m);
    if (s.size() == 0) return 0;
    const double t = tol < 0.0 ? cutoff(m.rows(), m.cols(), s(0)) : tol;
    return (s.array() > t).count();
}

double min_singular_value(const Matrix& m) {
    const Vector s = singular_values(m);
    return s.size() ? s(s.size() - 1) : 0.0;
}

Matrix pseudo_inverse(const Matrix& m) {
    if (m.size() == 0) return Matrix(m.cols(), m.rows());
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double t = cutoff(m.rows(), m.cols(), s(0));
    Vector inv(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > t ? 1.0 / s(i) : 0.0;
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix least_squares(const Matrix& a, const Matrix& b) {
    return a.completeOrthogonalDecomposition().solve(b);
}

}  // namespace bsqz::linalg

#pragma once

#include "core/common.hpp"

namespace bsqz::linalg {

/// Default singular-value cutoff: max(rows, cols) * eps * sigma_max.
double default_rank_tol(const Matrix& m);

/// Number of singular values above tol (tol < 0 selects the default cutoff).
Eigen::Index numerical_rank(const Matrix& m, double tol = -1.0);

/// Smallest singular value (0 for an empty matrix).
double min_singular_value(const Matrix& m);

/// Moore-Penrose inverse through the SVD; singular values at or below the default
/// cutoff are treated as zero.
Matrix pseudo_inverse(const Matrix& m);

/// Frobenius-norm least-squares solve min ||a x - b||.
Matrix least_squares(const Matrix& a, const Matrix& b);

}  // namespace bsqz::linalg

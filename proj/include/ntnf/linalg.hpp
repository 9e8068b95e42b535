#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "ntnf/errors.hpp"

namespace ntnf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Spectral norm (largest singular value).
inline double norm2(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 || a.cols() == 1) return a.norm();
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

inline double cond2(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) == 0.0) return INFINITY;
  return s(0) / s(s.size() - 1);
}

// Inverse guarded by a condition-number bound.
inline Matrix guarded_inverse(const Matrix& a, double max_cond = 1e12) {
  if (a.rows() != a.cols()) fail(ErrorKind::invalid_argument, "inverse of a non-square matrix");
  double c = cond2(a);
  if (!(c < max_cond)) fail(ErrorKind::singular, "matrix is singular or too ill-conditioned (cond " + std::to_string(c) + ")");
  return a.fullPivLu().inverse();
}

// Orthonormal basis of the null space of a (columns).
inline Matrix null_space(const Matrix& a, double rel_tol = 1e-9) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  double smax = s.size() ? s(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * std::max(smax, 1.0)) ++rank;
  int n = static_cast<int>(a.cols());
  return svd.matrixV().rightCols(n - rank);
}

inline Matrix orthonormalize(const Matrix& a) {
  if (a.cols() == 0) return a;
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

}  // namespace ntnf

// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic dense symmetric eigensolver (cyclic Jacobi). Chosen over the
// platform eigensolver so that eigenvector bases are reproducible bit-for-bit
// across runs; the task counts handled here (T <= a few hundred) make Jacobi's
// O(T^3) per sweep irrelevant.

#ifndef STCMTL_SPECTRAL_HPP
#define STCMTL_SPECTRAL_HPP

#include <cmath>

#include "stcmtl/core.hpp"

namespace stcmtl {

/// Eigen-decomposition A = V diag(w) V^T with eigenvalues sorted descending
/// and each eigenvector's largest-magnitude entry made positive.
struct SymmetricEigen {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // columns match eigenvalues
};

inline SymmetricEigen jacobi_eigensolver(const Matrix& a_in) {
  const int n = static_cast<int>(a_in.rows());
  if (a_in.cols() != n) fail(ErrorCode::ShapeMismatch, "matrix must be square");
  if (!all_finite(a_in)) fail(ErrorCode::NonFinite, "matrix has non-finite entries");

  Matrix a = 0.5 * (a_in + a_in.transpose());  // enforce exact symmetry
  Matrix v = Matrix::Identity(n, n);

  const double scale = std::max(1.0, a.norm());
  const double tol = 1e-12 * scale;
  const int max_sweeps = 100;

  auto off_norm = [&]() {
    double s = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
    return std::sqrt(2.0 * s);
  };

  for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p), aqq = a(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        // smaller-magnitude root for a stable rotation
        double t;
        if (tau >= 0.0)
          t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
        else
          t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (int i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  SymmetricEigen out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (a(i, i) != a(j, j)) return a(i, i) > a(j, j);
    return i < j;
  });
  for (int i = 0; i < n; ++i) {
    const int src = order[static_cast<std::size_t>(i)];
    out.eigenvalues(i) = a(src, src);
    Vector col = v.col(src);
    int arg = 0;
    for (int r = 1; r < n; ++r)
      if (std::abs(col(r)) > std::abs(col(arg))) arg = r;
    if (col(arg) < 0.0) col = -col;
    out.eigenvectors.col(i) = col;
  }
  return out;
}

}  // namespace stcmtl

#endif  // STCMTL_SPECTRAL_HPP

// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0
//
// Robust variant: a column-wise l21 low-rank factorization of W flags tasks
// whose coefficients cannot be explained by the shared cluster structure;
// flagged tasks are screened out and keep their initialization fit.

#ifndef STCMTL_ROBUST_HPP
#define STCMTL_ROBUST_HPP

#include <set>
#include <vector>

#include "stcmtl/core.hpp"
#include "stcmtl/trainer.hpp"
#include "stcmtl/types.hpp"

namespace stcmtl {

/// Rank-k factorization W ~= C Theta with per-column residual norms.
struct RobustFactorization {
  Matrix c;              // D x k
  Matrix theta;          // k x T'
  Vector column_errors;  // T', D_i = ||W_i - C Theta_i||_2
  std::vector<double> objective_trace;  // l21 objective per IRLS iteration
};

/// Approximately minimizes sum_i ||W_i - C Theta_i||_2 (column-wise l21 norm)
/// by iteratively reweighted alternating least squares from an SVD start.
/// Weights are 1/max(residual, 1e-8); convergence at relative objective
/// change < 1e-6 or 200 iterations. The coefficient matrix is sign-indefinite
/// here, so no nonnegativity constraints are imposed.
inline RobustFactorization robust_factorize(const Matrix& w_sub, int k,
                                            std::uint64_t seed) {
  const int d = static_cast<int>(w_sub.rows());
  const int t = static_cast<int>(w_sub.cols());
  if (t < k || k < 1)
    fail(ErrorCode::RankDeficient,
         "need at least k columns to factorize (" + std::to_string(t) + " < " +
             std::to_string(k) + ")");
  if (!all_finite(w_sub)) fail(ErrorCode::NonFinite, "factorization input not finite");

  RobustFactorization f;
  Eigen::JacobiSVD<Matrix> svd(w_sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const int r = std::min(k, static_cast<int>(svd.singularValues().size()));
  f.c = Matrix::Zero(d, k);
  f.theta = Matrix::Zero(k, t);
  f.c.leftCols(r) = svd.matrixU().leftCols(r) *
                    svd.singularValues().head(r).asDiagonal();
  f.theta.topRows(r) = svd.matrixV().leftCols(r).transpose();
  if (r < k) {
    // Rank-deficient start: seed the unused directions with tiny noise so the
    // alternating solves stay well-posed.
    auto rng = stream_rng(seed, "rnmf");
    std::normal_distribution<double> nd(0.0, 1e-6);
    for (int j = r; j < k; ++j)
      for (int i = 0; i < t; ++i) f.theta(j, i) = nd(rng);
  }

  auto residuals = [&](Vector& out) {
    out.resize(t);
    for (int i = 0; i < t; ++i)
      out(i) = (w_sub.col(i) - f.c * f.theta.col(i)).norm();
  };

  Vector errs;
  residuals(errs);
  double obj = errs.sum();
  f.objective_trace.push_back(obj);
  const double jitter = 1e-10;

  for (int iter = 0; iter < 200; ++iter) {
    Vector weights(t);
    for (int i = 0; i < t; ++i) weights(i) = 1.0 / std::max(errs(i), 1e-8);

    // Theta given C: per-column least squares (weights cancel per column).
    Matrix gram_c = f.c.transpose() * f.c;
    gram_c.diagonal().array() += jitter;
    Eigen::LDLT<Matrix> ldlt_c(gram_c);
    f.theta = ldlt_c.solve(f.c.transpose() * w_sub);

    // C given Theta: weighted least squares over columns.
    Matrix gram_t = f.theta * weights.asDiagonal() * f.theta.transpose();
    gram_t.diagonal().array() += jitter;
    Eigen::LDLT<Matrix> ldlt_t(gram_t);
    f.c = ldlt_t.solve(f.theta * weights.asDiagonal() * w_sub.transpose()).transpose();

    if (!all_finite(f.c) || !all_finite(f.theta))
      fail(ErrorCode::RankDeficient, "factorization solves degenerated");

    residuals(errs);
    const double obj_new = errs.sum();
    f.objective_trace.push_back(obj_new);
    const double rel = std::abs(obj - obj_new) / std::max(obj, 1e-12);
    obj = obj_new;
    if (rel < 1e-6) break;
  }
  f.column_errors = errs;
  return f;
}

/// Flags entries strictly above Q3 + 4.5*IQR, with quartiles computed by
/// linear interpolation over the entries not already in `existing`. Returns
/// the union. `errors` is indexed by task; entries already flagged are
/// ignored when computing quartiles.
inline std::set<int> detect_outliers(const Vector& errors,
                                     const std::set<int>& existing = {}) {
  if (errors.size() == 0) fail(ErrorCode::InvalidValue, "empty error vector");
  std::vector<double> current;
  std::vector<int> ids;
  for (int i = 0; i < errors.size(); ++i) {
    if (existing.count(i)) continue;
    current.push_back(errors(i));
    ids.push_back(i);
  }
  std::set<int> out = existing;
  if (current.empty()) return out;
  const double q3 = quantile_type7(current, 0.75);
  const double q1 = quantile_type7(current, 0.25);
  const double threshold = q3 + 4.5 * (q3 - q1);
  for (std::size_t j = 0; j < current.size(); ++j)
    if (current[j] > threshold) out.insert(ids[j]);
  return out;
}

/// Robust fit: each outer iteration factorizes W over the surviving tasks,
/// grows the outlier set by the IQR rule, then runs the usual membership /
/// cluster / refresh steps on survivors only. Outlier tasks keep their
/// initialization coefficients as their served model.
inline StcmtlModel fit_robust(const std::vector<TaskDataset>& tasks, int k,
                              const HyperParams& hp = HyperParams()) {
  hp.validate();
  const auto h = validate_problem(tasks);
  if (k < 1 || k > std::min(h.d, h.t))
    fail(ErrorCode::InvalidValue, "need 1 <= k <= min(D,T)");

  FitReport report;
  report.k = k;
  detail::PhaseTimer timer(report.wall_time);
  auto [w0, lambda] = timer.time("initialize", [&] {
    return initialize(tasks, hp.lambda_grid, hp.folds, hp.seed);
  });
  report.lambda = lambda;
  report.gamma = lambda.mean();
  if (2 * k > std::min(h.d, h.t))
    report.warnings.push_back("cluster count is large relative to min(D,T)");

  std::set<int> outliers;
  const Matrix w_init = w0.w;

  auto screen = [&](int iter, const Matrix& w, std::vector<char>& include) {
    (void)iter;
    std::vector<int> act;
    for (int i = 0; i < h.t; ++i)
      if (include[static_cast<std::size_t>(i)]) act.push_back(i);
    if (static_cast<int>(act.size()) < k)
      fail(ErrorCode::AllOutliers, "outlier screening left fewer tasks than clusters");
    Matrix w_act(w.rows(), static_cast<int>(act.size()));
    for (std::size_t j = 0; j < act.size(); ++j)
      w_act.col(static_cast<int>(j)) = w.col(act[j]);
    auto fact = timer.time("factorize", [&] {
      return robust_factorize(w_act, k, stream_seed(hp.seed, "rnmf", static_cast<std::uint64_t>(iter)));
    });
    // Spread survivor errors into task indexing; prior outliers are skipped
    // by detect_outliers via the existing set.
    Vector errs = Vector::Zero(h.t);
    for (std::size_t j = 0; j < act.size(); ++j)
      errs(act[j]) = fact.column_errors(static_cast<int>(j));
    auto updated = detect_outliers(errs, outliers);
    if (updated.size() != outliers.size()) {
      outliers = std::move(updated);
      for (int i : outliers) include[static_cast<std::size_t>(i)] = 0;
      if (h.t - static_cast<int>(outliers.size()) < k)
        fail(ErrorCode::AllOutliers, "outlier screening left fewer tasks than clusters");
    }
  };

  std::vector<char> include(static_cast<std::size_t>(h.t), 1);
  auto model = detail::alternate(tasks, k, hp, w0, lambda, include, screen, report, timer);
  model.report.outliers.assign(outliers.begin(), outliers.end());
  for (int i : outliers) model.outlier_coefs[i] = w_init.col(i);
  return model;
}

}  // namespace stcmtl

#endif  // STCMTL_ROBUST_HPP

// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic benchmark generators (overlapping sparse clusters with pure and
// mixed tasks, optional planted outlier tasks), the single-task lasso
// baseline, and the evaluation metrics.

#ifndef STCMTL_BENCH_HPP
#define STCMTL_BENCH_HPP

#include <set>
#include <tuple>
#include <vector>

#include "stcmtl/core.hpp"
#include "stcmtl/solver.hpp"
#include "stcmtl/trainer.hpp"
#include "stcmtl/types.hpp"

namespace stcmtl {

enum class Mixing { Sparse, Dense };

/// Synthetic problem layout. Cluster k's coefficients occupy rows
/// 5(k-1)+1 .. 5(k+1) (1-based), ten rows with a five-row overlap between
/// consecutive clusters. Outlier tasks (robust mode) get ten positive
/// coefficients at random positions.
struct SynthSpec {
  int t = 60;           // regular task count (pure + mixed)
  int n_train = 100;
  int n_test = 100;
  int d = 200;
  int k = 5;
  Mixing mixing = Mixing::Sparse;
  double noise_sd = 0.5;
  int pure_count = 50;
  int n_outliers = 0;   // appended on top of t
  std::uint64_t seed = 42;

  void validate() const {
    if (t < 1 || d < 1 || k < 1 || n_train < 1 || n_test < 0)
      fail(ErrorCode::BadSpec, "nonpositive dimension in spec");
    if (pure_count > t) fail(ErrorCode::BadSpec, "pure_count exceeds task count");
    if (pure_count < k) fail(ErrorCode::BadSpec, "fewer pure tasks than clusters");
    if (5 * (k + 1) > d) fail(ErrorCode::BadSpec, "support pattern does not fit d");
    if (n_outliers < 0) fail(ErrorCode::BadSpec, "negative outlier count");
    if (!(noise_sd >= 0.0)) fail(ErrorCode::BadSpec, "negative noise sd");
  }
};

/// The planted truth: factors, composed coefficients, entrywise support, and
/// the ids of planted outlier tasks.
struct GroundTruth {
  Matrix u_true;   // D x K
  Matrix v_true;   // K x T_total (outlier columns all zero)
  Matrix w_true;   // D x T_total
  std::vector<std::vector<bool>> support;  // D x T_total
  std::vector<int> outlier_ids;
};

/// Deterministic synthetic generation: X ~ N(0, I), y = X w + noise_sd * N(0,1).
/// The first `pure_count` tasks are pure (equal split over clusters), the rest
/// mix two (Sparse) or all (Dense) clusters with uniform-then-normalized
/// weights; outlier tasks ignore the cluster structure entirely.
inline std::tuple<std::vector<TaskDataset>, std::vector<TaskDataset>, GroundTruth>
generate(const SynthSpec& spec) {
  spec.validate();
  auto rng = stream_rng(spec.seed, "gen");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> mag(0.1, 0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> out_mag(0.5, 1.0);

  const int t_total = spec.t + spec.n_outliers;
  GroundTruth g;
  g.u_true = Matrix::Zero(spec.d, spec.k);
  for (int k = 0; k < spec.k; ++k) {
    const int lo = 5 * k;  // 0-based: rows 5(k-1)+1 .. 5(k+1) of the 1-based layout
    for (int r = lo; r < lo + 10; ++r) {
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      g.u_true(r, k) = sign * mag(rng);
    }
  }

  g.v_true = Matrix::Zero(spec.k, t_total);
  const int per_cluster = spec.pure_count / spec.k;
  for (int i = 0; i < spec.pure_count; ++i) {
    const int c = std::min(i / std::max(1, per_cluster), spec.k - 1);
    g.v_true(c, i) = 1.0;
  }
  for (int i = spec.pure_count; i < spec.t; ++i) {
    if (spec.mixing == Mixing::Sparse) {
      int a = static_cast<int>(unit(rng) * spec.k) % spec.k;
      int b = a;
      while (b == a) b = static_cast<int>(unit(rng) * spec.k) % spec.k;
      double wa = unit(rng), wb = unit(rng);
      const double s = wa + wb;
      if (s <= 0.0) {
        wa = wb = 0.5;
      } else {
        wa /= s;
        wb /= s;
      }
      g.v_true(a, i) = wa;
      g.v_true(b, i) = wb;
    } else {
      Vector wv(spec.k);
      for (int c = 0; c < spec.k; ++c) wv(c) = unit(rng);
      const double s = wv.sum();
      if (s <= 0.0)
        wv.setConstant(1.0 / spec.k);
      else
        wv /= s;
      g.v_true.col(i) = wv;
    }
  }

  g.w_true = Matrix::Zero(spec.d, t_total);
  g.w_true.leftCols(spec.t) = g.u_true * g.v_true.leftCols(spec.t);
  for (int o = 0; o < spec.n_outliers; ++o) {
    const int col = spec.t + o;
    g.outlier_ids.push_back(col);
    std::set<int> rows;
    while (static_cast<int>(rows.size()) < std::min(10, spec.d))
      rows.insert(static_cast<int>(unit(rng) * spec.d) % spec.d);
    for (int r : rows) g.w_true(r, col) = out_mag(rng);
  }

  g.support.assign(static_cast<std::size_t>(spec.d),
                   std::vector<bool>(static_cast<std::size_t>(t_total), false));
  for (int r = 0; r < spec.d; ++r)
    for (int c = 0; c < t_total; ++c)
      g.support[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
          g.w_true(r, c) != 0.0;

  auto draw_tasks = [&](int n_rows) {
    std::vector<TaskDataset> tasks;
    tasks.reserve(static_cast<std::size_t>(t_total));
    for (int i = 0; i < t_total; ++i) {
      TaskDataset task;
      task.id = i;
      task.loss = Loss::Squared;
      task.x.resize(n_rows, spec.d);
      for (int r = 0; r < n_rows; ++r)
        for (int c = 0; c < spec.d; ++c) task.x(r, c) = gauss(rng);
      task.y = task.x * g.w_true.col(i);
      for (int r = 0; r < n_rows; ++r) task.y(r) += spec.noise_sd * gauss(rng);
      tasks.push_back(std::move(task));
    }
    return tasks;
  };

  auto train = draw_tasks(spec.n_train);
  auto test = draw_tasks(spec.n_test);
  return {std::move(train), std::move(test), std::move(g)};
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline double rmse(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size())
    fail(ErrorCode::LengthMismatch, "rmse: length mismatch");
  if (y_true.size() == 0) fail(ErrorCode::LengthMismatch, "rmse: empty vectors");
  return std::sqrt((y_true - y_pred).squaredNorm() / y_true.size());
}

/// Pooled RMSE over tasks, weighted by row counts: sqrt(sum r^2 / sum n).
inline double pooled_rmse(const std::vector<std::pair<Vector, Vector>>& pairs) {
  double sq = 0.0;
  long long n = 0;
  for (const auto& [yt, yp] : pairs) {
    if (yt.size() != yp.size()) fail(ErrorCode::LengthMismatch, "pooled rmse: length mismatch");
    sq += (yt - yp).squaredNorm();
    n += yt.size();
  }
  if (n == 0) fail(ErrorCode::LengthMismatch, "pooled rmse: no observations");
  return std::sqrt(sq / static_cast<double>(n));
}

inline double error_rate(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size())
    fail(ErrorCode::LengthMismatch, "error_rate: length mismatch");
  if (y_true.size() == 0) fail(ErrorCode::LengthMismatch, "error_rate: empty vectors");
  int wrong = 0;
  for (int i = 0; i < y_true.size(); ++i) {
    const double p = y_pred(i) >= 0.0 ? 1.0 : -1.0;
    if (p != y_true(i)) ++wrong;
  }
  return static_cast<double>(wrong) / y_true.size();
}

/// Root estimation error ||W - What||_F / sqrt(T).
inline double ree(const Matrix& w_true, const Matrix& w_hat) {
  if (w_true.rows() != w_hat.rows() || w_true.cols() != w_hat.cols())
    fail(ErrorCode::ShapeMismatch, "ree: shape mismatch");
  return (w_true - w_hat).norm() / std::sqrt(static_cast<double>(w_true.cols()));
}

using SupportMatrix = std::vector<std::vector<bool>>;

inline SupportMatrix support_of(const Matrix& w, double threshold = 1e-8) {
  SupportMatrix s(static_cast<std::size_t>(w.rows()),
                  std::vector<bool>(static_cast<std::size_t>(w.cols()), false));
  for (int r = 0; r < w.rows(); ++r)
    for (int c = 0; c < w.cols(); ++c)
      s[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
          std::abs(w(r, c)) > threshold;
  return s;
}

/// Matthews correlation over entrywise support; a zero factor in the
/// denominator yields 0.
inline double mcc(const SupportMatrix& support_true, const SupportMatrix& support_hat) {
  if (support_true.size() != support_hat.size() ||
      (support_true.size() && support_true[0].size() != support_hat[0].size()))
    fail(ErrorCode::ShapeMismatch, "mcc: shape mismatch");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t r = 0; r < support_true.size(); ++r)
    for (std::size_t c = 0; c < support_true[r].size(); ++c) {
      const bool truth = support_true[r][c], est = support_hat[r][c];
      if (truth && est)
        ++tp;
      else if (!truth && !est)
        ++tn;
      else if (!truth && est)
        ++fp;
      else
        ++fn;
    }
  const double denom = (tp + fn) * (tp + fp) * (tn + fp) * (tn + fn);
  if (denom <= 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

/// Single-task baseline: per-task cross-validated lasso, evaluated with the
/// same metric suite.
struct BaselineResult {
  Matrix w_hat;       // D x T
  Vector lambda;      // selected per task
  double rmse = 0.0;  // pooled over test tasks
};

inline BaselineResult lasso_baseline(const std::vector<TaskDataset>& train,
                                     const std::vector<TaskDataset>& test,
                                     const HyperParams& hp = HyperParams()) {
  auto h = validate_problem(train);
  if (test.size() != train.size())
    fail(ErrorCode::ShapeMismatch, "train/test task counts differ");
  BaselineResult res;
  res.w_hat.resize(h.d, h.t);
  res.lambda.resize(h.t);
  parallel_for(h.t, [&](int i) {
    const auto& task = train[static_cast<std::size_t>(i)];
    auto cv = cross_validate(task, hp.lambda_grid, hp.folds, hp.seed);
    res.lambda(i) = cv.best_lambda;
    LassoProblem p{task.x, task.y, std::nullopt, cv.best_lambda, task.loss};
    res.w_hat.col(i) = task.loss == Loss::Squared ? fit_lasso(p) : fit_logistic_l1(p);
  });
  double sq = 0.0;
  long long n = 0;
  for (int i = 0; i < h.t; ++i) {
    const auto& task = test[static_cast<std::size_t>(i)];
    const Vector pred = task.x * res.w_hat.col(i);
    if (task.loss == Loss::Squared) {
      sq += (task.y - pred).squaredNorm();
      n += task.y.size();
    } else {
      for (int r = 0; r < task.y.size(); ++r) {
        const double lab = pred(r) >= 0.0 ? 1.0 : -1.0;
        sq += (task.y(r) - lab) * (task.y(r) - lab);
        ++n;
      }
    }
  }
  res.rmse = std::sqrt(sq / static_cast<double>(n));
  return res;
}

}  // namespace stcmtl

#endif  // STCMTL_BENCH_HPP

// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0

#ifndef STCMTL_TYPES_HPP
#define STCMTL_TYPES_HPP

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stcmtl/core.hpp"

namespace stcmtl {

/// One task's design matrix and response. `y` holds real responses for
/// Squared loss and labels in {-1,+1} for Logistic loss.
struct TaskDataset {
  Matrix x;  // n_i x D
  Vector y;  // n_i
  Loss loss = Loss::Squared;
  int id = 0;  // 0-based task index

  int rows() const { return static_cast<int>(x.rows()); }
  int cols() const { return static_cast<int>(x.cols()); }
};

/// Per-task coefficient matrix W (D x T); column i is task i's coefficients.
struct CoefMatrix {
  Matrix w;

  explicit CoefMatrix(Matrix m) : w(std::move(m)) {
    if (!all_finite(w)) fail(ErrorCode::NonFinite, "CoefMatrix has non-finite entries");
  }
};

/// Per-cluster sparse coefficient vectors U (D x K).
struct ClusterCoefs {
  Matrix u;

  explicit ClusterCoefs(Matrix m) : u(std::move(m)) {
    if (!all_finite(u)) fail(ErrorCode::NonFinite, "ClusterCoefs has non-finite entries");
  }

  /// Smallest singular value ratio; diagnostic for the full-rank expectation.
  double rank_margin() const {
    Eigen::JacobiSVD<Matrix> svd(u);
    double s0 = svd.singularValues()(0);
    if (s0 <= 0) return 0.0;
    return svd.singularValues()(svd.singularValues().size() - 1) / s0;
  }
};

/// Column-stochastic membership matrix V (K x T) with the pure-task set.
/// Pure columns are exactly one-hot; every cluster owns at least one pure task.
class Membership {
 public:
  Membership(Matrix v, std::vector<int> pure_set, std::map<int, int> cluster_of_pure)
      : v_(std::move(v)),
        pure_set_(std::move(pure_set)),
        cluster_of_pure_(std::move(cluster_of_pure)) {
    validate();
  }

  const Matrix& v() const { return v_; }
  const std::vector<int>& pure_set() const { return pure_set_; }
  const std::map<int, int>& cluster_of_pure() const { return cluster_of_pure_; }
  int k() const { return static_cast<int>(v_.rows()); }
  int t() const { return static_cast<int>(v_.cols()); }

 private:
  void validate() const {
    if (!all_finite(v_)) fail(ErrorCode::NonFinite, "Membership has non-finite entries");
    const int k = static_cast<int>(v_.rows());
    const int t = static_cast<int>(v_.cols());
    if (k < 1 || t < 1) fail(ErrorCode::ShapeMismatch, "Membership must be K x T with K,T >= 1");
    for (int i = 0; i < t; ++i) {
      double sum = v_.col(i).sum();
      if (sum < 1.0 - 1e-9 || sum > 1.0 + 1e-9)
        fail(ErrorCode::InvalidValue,
             "Membership column " + std::to_string(i) + " sums to " + std::to_string(sum));
      for (int r = 0; r < k; ++r) {
        double e = v_(r, i);
        if (e < 0.0 || e > 1.0)
          fail(ErrorCode::InvalidValue, "Membership entry out of [0,1]");
      }
    }
    // Pure-task existence per cluster, and one-hot pure columns.
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    for (int i : pure_set_) {
      if (i < 0 || i >= t) fail(ErrorCode::ShapeMismatch, "pure task index out of range");
      auto it = cluster_of_pure_.find(i);
      if (it == cluster_of_pure_.end())
        fail(ErrorCode::InvalidValue, "pure task without cluster label");
      int c = it->second;
      if (c < 0 || c >= k) fail(ErrorCode::InvalidValue, "pure task cluster label out of range");
      if (v_(c, i) != 1.0)
        fail(ErrorCode::InvalidValue, "pure column is not one-hot");
      for (int r = 0; r < k; ++r)
        if (r != c && v_(r, i) != 0.0)
          fail(ErrorCode::InvalidValue, "pure column is not one-hot");
      seen[static_cast<std::size_t>(c)] = true;
    }
    for (int c = 0; c < k; ++c)
      if (!seen[static_cast<std::size_t>(c)])
        fail(ErrorCode::EmptyCluster, "cluster " + std::to_string(c) + " has no pure task");
  }

  Matrix v_;  // K x T
  std::vector<int> pure_set_;
  std::map<int, int> cluster_of_pure_;
};

/// Solver hyper-parameters. Defaults follow the library's standard setup:
/// half the tasks declared pure, a 19-point geometric lambda grid, five CV
/// folds, and a 3-sweep early-stopped per-task refresh.
struct HyperParams {
  double theta = 0.5;    // fraction of tasks declared pure
  double epsilon = 0.1;  // neighbor fraction for purity scoring
  int folds = 5;
  std::vector<double> lambda_grid = default_lambda_grid();
  int max_outer = 50;
  double tol = 1e-4;      // relative objective tolerance for the outer loop
  int w_sweeps = 3;       // early-stopping sweeps of the per-task refresh
  int u_max_cycles = 100; // cap on cyclic passes over cluster columns
  double u_col_tol = 1e-4;
  std::uint64_t seed = 42;

  static std::vector<double> default_lambda_grid() {
    std::vector<double> g;
    for (int e = 3; e >= -15; --e) g.push_back(std::ldexp(1.0, e));
    return g;  // descending: 2^3 .. 2^-15
  }

  void validate() const {
    if (!(theta > 0.0 && theta <= 1.0)) fail(ErrorCode::InvalidValue, "theta must be in (0,1]");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) fail(ErrorCode::InvalidValue, "epsilon must be in (0,1]");
    if (folds < 2) fail(ErrorCode::InvalidValue, "folds must be >= 2");
    if (lambda_grid.empty()) fail(ErrorCode::InvalidValue, "lambda grid is empty");
    for (double l : lambda_grid)
      if (!(l > 0.0)) fail(ErrorCode::InvalidValue, "lambda grid entries must be > 0");
    if (max_outer < 1) fail(ErrorCode::InvalidValue, "max_outer must be >= 1");
    if (w_sweeps < 1) fail(ErrorCode::InvalidValue, "w_sweeps must be >= 1");
  }
};

/// Fit diagnostics: objective per outer iteration, selected penalties,
/// outlier set (robust mode), and wall time per phase.
struct FitReport {
  std::vector<double> objective_trace;
  Vector lambda;  // selected lambda_i per task
  double gamma = 0.0;
  int k = 0;
  std::vector<int> outliers;  // 0-based task ids, sorted
  int iterations = 0;
  bool converged = false;
  std::vector<std::pair<std::string, double>> wall_time;  // phase -> seconds
  std::vector<std::string> warnings;
};

/// Fitted model: cluster coefficients, memberships, diagnostics. In robust
/// mode, screened tasks keep their initialization coefficients; those columns
/// live in `outlier_coefs` and take precedence in prediction.
struct StcmtlModel {
  ClusterCoefs u;
  Membership v;
  FitReport report;
  std::map<int, Vector> outlier_coefs;

  StcmtlModel(ClusterCoefs u_, Membership v_, FitReport r_)
      : u(std::move(u_)), v(std::move(v_)), report(std::move(r_)) {
    if (u.u.cols() != v.v().rows() || v.v().rows() != report.k)
      fail(ErrorCode::ShapeMismatch, "model U/V/report cluster counts disagree");
  }

  int d() const { return static_cast<int>(u.u.rows()); }
  int k() const { return static_cast<int>(u.u.cols()); }
  int t() const { return v.t(); }
};

/// Validated problem summary: task count, shared feature dimension, and
/// per-task row counts.
struct ProblemHandle {
  int t = 0;
  int d = 0;
  Loss loss = Loss::Squared;
  std::vector<int> n;
};

/// Checks that the task list forms a well-posed problem: nonempty, a shared
/// feature dimension, one loss kind, and valid labels for logistic tasks.
inline ProblemHandle validate_problem(const std::vector<TaskDataset>& tasks) {
  if (tasks.empty()) fail(ErrorCode::EmptyProblem, "no tasks given");
  ProblemHandle h;
  h.t = static_cast<int>(tasks.size());
  h.d = tasks.front().cols();
  h.loss = tasks.front().loss;
  h.n.reserve(tasks.size());
  for (const auto& task : tasks) {
    if (task.cols() != h.d)
      fail(ErrorCode::ShapeMismatch,
           "task " + std::to_string(task.id) + " has " + std::to_string(task.cols()) +
               " features, expected " + std::to_string(h.d));
    if (task.loss != h.loss)
      fail(ErrorCode::ShapeMismatch,
           "task " + std::to_string(task.id) + " has a different loss kind");
    if (task.rows() != static_cast<int>(task.y.size()))
      fail(ErrorCode::ShapeMismatch,
           "task " + std::to_string(task.id) + " has x.rows != y.len");
    if (task.rows() < 1)
      fail(ErrorCode::EmptyProblem, "task " + std::to_string(task.id) + " has no rows");
    if (!all_finite(task.x) || !all_finite(task.y))
      fail(ErrorCode::NonFinite, "task " + std::to_string(task.id) + " has non-finite data");
    if (task.loss == Loss::Logistic) {
      for (int r = 0; r < task.rows(); ++r)
        if (task.y(r) != 1.0 && task.y(r) != -1.0)
          fail(ErrorCode::BadLabels,
               "task " + std::to_string(task.id) + " row " + std::to_string(r) +
                   ": logistic label must be -1 or +1");
    }
    h.n.push_back(task.rows());
  }
  return h;
}

}  // namespace stcmtl

#endif  // STCMTL_TYPES_HPP

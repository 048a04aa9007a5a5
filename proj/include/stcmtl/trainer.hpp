// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0
//
// The outer alternating solver: per-task l1 initialization with in-loop
// hyper-parameter tuning, then repeated {membership update via soup, cluster
// coefficient update, early-stopped per-task refresh} until the penalized
// objective converges.

#ifndef STCMTL_TRAINER_HPP
#define STCMTL_TRAINER_HPP

#include <chrono>
#include <utility>
#include <vector>

#include "stcmtl/core.hpp"
#include "stcmtl/solver.hpp"
#include "stcmtl/soup.hpp"
#include "stcmtl/types.hpp"

namespace stcmtl {

/// RMSE curve over a cluster-count grid plus the winner (ties -> smaller k).
struct KSelection {
  int best_k = 0;
  std::vector<std::pair<int, double>> curve;  // (k, held-out rmse), k ascending
};

namespace detail {

class PhaseTimer {
 public:
  explicit PhaseTimer(std::vector<std::pair<std::string, double>>& sink)
      : sink_(sink) {}

  template <class F>
  auto time(const char* phase, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      add(phase, t0);
    } else {
      auto r = f();
      add(phase, t0);
      return r;
    }
  }

 private:
  void add(const char* phase, std::chrono::steady_clock::time_point t0) {
    const double s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    for (auto& [name, acc] : sink_)
      if (name == phase) {
        acc += s;
        return;
      }
    sink_.emplace_back(phase, s);
  }

  std::vector<std::pair<std::string, double>>& sink_;
};

// Per-cluster penalty: the base rate scaled by the root of the cluster's
// accumulated membership mass. This keeps the penalty-to-gradient-noise
// ratio of the cross-validated per-task fits when the update pools many
// tasks into one column, and reduces to gamma itself for a single task
// with unit membership.
inline Vector cluster_gammas(double gamma, const Matrix& v) {
  Vector g(v.rows());
  for (int k = 0; k < v.rows(); ++k)
    g(k) = gamma * std::sqrt(v.row(k).squaredNorm());
  return g;
}

// Cycles over cluster columns until the largest column change drops below
// hp.u_col_tol. The workspace state must already match (u, v).
inline int update_all_clusters(ClusterWorkspace& ws, Matrix& u, const Matrix& v,
                               const Vector& gammas, const HyperParams& hp) {
  const int k = static_cast<int>(u.cols());
  for (int cycle = 1; cycle <= hp.u_max_cycles; ++cycle) {
    double max_change = 0.0;
    for (int c = 0; c < k; ++c)
      max_change = std::max(max_change, ws.update_column(u, v, c, gammas(c)));
    if (max_change < hp.u_col_tol) return cycle;
  }
  return hp.u_max_cycles;
}

// Early-stopped per-task refresh of W, warm-started at U v_i. Tasks with
// include[i] == 0 keep their current column.
inline void refresh_w(const std::vector<TaskDataset>& tasks,
                      const std::vector<SingleTaskCd>& cds, const Vector& lambda,
                      const Matrix& u, const Matrix& v, int sweeps,
                      const std::vector<char>& include, Matrix& w) {
  const int t = static_cast<int>(tasks.size());
  parallel_for(t, [&](int i) {
    if (!include[static_cast<std::size_t>(i)]) return;
    Vector wi = u * v.col(i);
    if (tasks[static_cast<std::size_t>(i)].loss == Loss::Squared) {
      Vector e = tasks[static_cast<std::size_t>(i)].y -
                 tasks[static_cast<std::size_t>(i)].x * wi;
      cds[static_cast<std::size_t>(i)].solve(lambda(i), wi, e, sweeps,
                                             kCdExitSquared);
    } else {
      LassoProblem p{tasks[static_cast<std::size_t>(i)].x,
                     tasks[static_cast<std::size_t>(i)].y, std::nullopt, lambda(i),
                     Loss::Logistic};
      wi = fit_logistic_l1(p, wi, sweeps);
    }
    w.col(i) = wi;
  });
}

}  // namespace detail

/// Per-task initialization: cross-validation picks lambda_i, then an l1 fit
/// at lambda_i gives column i of W0. The lambda vector is reused by every
/// subsequent refresh.
inline std::pair<CoefMatrix, Vector> initialize(const std::vector<TaskDataset>& tasks,
                                                const std::vector<double>& grid,
                                                int folds, std::uint64_t seed) {
  auto h = validate_problem(tasks);
  Matrix w0(h.d, h.t);
  Vector lambda(h.t);
  parallel_for(h.t, [&](int i) {
    const auto& task = tasks[static_cast<std::size_t>(i)];
    auto cv = cross_validate(task, grid, folds, seed);
    lambda(i) = cv.best_lambda;
    LassoProblem p{task.x, task.y, std::nullopt, cv.best_lambda, task.loss};
    w0.col(i) = task.loss == Loss::Squared ? fit_lasso(p) : fit_logistic_l1(p);
  });
  return {CoefMatrix(std::move(w0)), std::move(lambda)};
}

/// Penalized objective sum_i (1/n_i) L(y_i, X_i U v_i) + gamma * ||U||_1,
/// with ||U||_1 the sum of column l1 norms.
inline double objective(const std::vector<TaskDataset>& tasks, const Matrix& u,
                        const Matrix& v, double gamma) {
  auto h = validate_problem(tasks);
  if (u.cols() != v.rows() || v.cols() != h.t || u.rows() != h.d)
    fail(ErrorCode::ShapeMismatch, "objective: U/V shapes inconsistent with tasks");
  auto ws = detail::ClusterWorkspace::make(tasks);
  ws.reset_state(u, v);
  return ws.objective(u, gamma);
}

namespace detail {

// Alternation loop shared by the plain and robust fits. `include` masks the
// tasks that participate (robust mode shrinks it as outliers are screened);
// `hook` runs at the top of every outer iteration and may modify `include`.
template <class IterHook>
StcmtlModel alternate(const std::vector<TaskDataset>& tasks, int k,
                      const HyperParams& hp, const CoefMatrix& w0,
                      const Vector& lambda, std::vector<char>& include,
                      IterHook&& hook, FitReport& report, PhaseTimer& timer) {
  const auto h = validate_problem(tasks);
  const int t = h.t;

  Matrix w = w0.w;
  Matrix u = Matrix::Zero(h.d, k);
  const double gamma = report.gamma;

  auto ws = timer.time("stack", [&] { return ClusterWorkspace::make(tasks); });
  std::vector<SingleTaskCd> cds;
  cds.reserve(static_cast<std::size_t>(t));
  for (const auto& task : tasks) cds.emplace_back(task.x, std::nullopt);

  Matrix v_full = Matrix::Zero(k, t);
  std::vector<int> last_pure;
  std::map<int, int> last_cluster_of_pure;

  for (int iter = 1; iter <= hp.max_outer; ++iter) {
    hook(iter, w, include);

    // V step: soup on the included columns of the current W.
    std::vector<int> act;
    for (int i = 0; i < t; ++i)
      if (include[static_cast<std::size_t>(i)]) act.push_back(i);
    if (static_cast<int>(act.size()) < k)
      fail(ErrorCode::AllOutliers, "fewer included tasks than clusters");

    timer.time("soup", [&] {
      Matrix w_act(w.rows(), static_cast<int>(act.size()));
      for (std::size_t j = 0; j < act.size(); ++j)
        w_act.col(static_cast<int>(j)) = w.col(act[j]);
      auto local = soup_membership(
          CoefMatrix(std::move(w_act)), k, hp.theta, hp.epsilon,
          stream_seed(hp.seed, "soup", static_cast<std::uint64_t>(iter)));
      v_full.setZero();
      for (std::size_t j = 0; j < act.size(); ++j)
        v_full.col(act[j]) = local.v().col(static_cast<int>(j));
      last_pure.clear();
      last_cluster_of_pure.clear();
      for (int p : local.pure_set()) {
        last_pure.push_back(act[static_cast<std::size_t>(p)]);
        last_cluster_of_pure[act[static_cast<std::size_t>(p)]] =
            local.cluster_of_pure().at(p);
      }
    });

    // U step: cyclic cluster-column coordinate descent. Excluded tasks have
    // zero membership, so their rows never enter the update.
    const Vector gammas = cluster_gammas(gamma, v_full);
    timer.time("u_update", [&] {
      ws.reset_state(u, v_full);
      update_all_clusters(ws, u, v_full, gammas, hp);
    });
    double objective_val = ws.objective(u, 0.0);
    for (int c = 0; c < k; ++c) objective_val += gammas(c) * u.col(c).lpNorm<1>();
    report.objective_trace.push_back(objective_val);
    report.iterations = iter;

    // W step: early-stopped per-task refresh from the composed coefficients.
    timer.time("w_refresh", [&] {
      refresh_w(tasks, cds, lambda, u, v_full, hp.w_sweeps, include, w);
    });

    const auto& trace = report.objective_trace;
    if (iter >= 2) {
      const double prev = trace[trace.size() - 2];
      const double cur = trace.back();
      if (std::abs(cur - prev) <= hp.tol * std::max(std::abs(prev), 1e-12)) {
        report.converged = true;
        break;
      }
    }
  }

  // Excluded tasks keep a placeholder uniform membership; prediction for them
  // bypasses V entirely via the stored per-task coefficients.
  Matrix v_out = v_full;
  for (int i = 0; i < t; ++i)
    if (!include[static_cast<std::size_t>(i)])
      v_out.col(i).setConstant(1.0 / k);
  Membership v_final(std::move(v_out), std::move(last_pure),
                     std::move(last_cluster_of_pure));

  StcmtlModel model(ClusterCoefs(u), std::move(v_final), std::move(report));
  return model;
}

inline StcmtlModel fit_with_init(const std::vector<TaskDataset>& tasks, int k,
                                 const HyperParams& hp, const CoefMatrix& w0,
                                 const Vector& lambda) {
  FitReport report;
  report.k = k;
  report.lambda = lambda;
  report.gamma = lambda.mean();
  detail::PhaseTimer timer(report.wall_time);
  const auto h = validate_problem(tasks);
  if (k < 1 || k > std::min(h.d, h.t))
    fail(ErrorCode::InvalidValue, "need 1 <= k <= min(D,T)");
  if (2 * k > std::min(h.d, h.t))
    report.warnings.push_back("cluster count is large relative to min(D,T)");
  std::vector<char> include(static_cast<std::size_t>(h.t), 1);
  return alternate(
      tasks, k, hp, w0, lambda, include,
      [](int, const Matrix&, std::vector<char>&) {}, report, timer);
}

}  // namespace detail

/// Fits the semisoft task-clustering model with k clusters.
inline StcmtlModel fit(const std::vector<TaskDataset>& tasks, int k,
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
  std::vector<char> include(static_cast<std::size_t>(h.t), 1);
  return detail::alternate(
      tasks, k, hp, w0, lambda, include,
      [](int, const Matrix&, std::vector<char>&) {}, report, timer);
}

/// Raw prediction scores X * (U v_i); for screened outlier tasks, the stored
/// per-task coefficients are used instead.
inline Vector predict_scores(const StcmtlModel& model, const Matrix& x_new, int task) {
  if (x_new.cols() != model.d())
    fail(ErrorCode::ShapeMismatch, "X has wrong feature count");
  if (task < 0 || task >= model.t())
    fail(ErrorCode::ShapeMismatch, "task index out of range");
  auto it = model.outlier_coefs.find(task);
  const Vector w = it != model.outlier_coefs.end()
                       ? it->second
                       : Vector(model.u.u * model.v.v().col(task));
  return x_new * w;
}

/// Predictions: identity for squared loss, sign for logistic.
inline Vector predict(const StcmtlModel& model, const Matrix& x_new, int task,
                      Loss loss) {
  Vector s = predict_scores(model, x_new, task);
  if (loss == Loss::Logistic)
    for (int i = 0; i < s.size(); ++i) s(i) = s(i) >= 0.0 ? 1.0 : -1.0;
  return s;
}

/// Fits once per k on a per-task 80/20 split and returns the k minimizing
/// held-out pooled RMSE (ties -> smaller k). The initialization does not
/// depend on k and is computed once on the training split.
inline KSelection select_k(const std::vector<TaskDataset>& tasks,
                           std::vector<int> k_grid, const HyperParams& hp) {
  if (k_grid.empty()) fail(ErrorCode::InvalidValue, "empty k grid");
  hp.validate();
  const auto h = validate_problem(tasks);
  std::sort(k_grid.begin(), k_grid.end());
  k_grid.erase(std::unique(k_grid.begin(), k_grid.end()), k_grid.end());

  std::vector<TaskDataset> train;
  std::vector<Matrix> x_val(static_cast<std::size_t>(h.t));
  std::vector<Vector> y_val(static_cast<std::size_t>(h.t));
  train.reserve(static_cast<std::size_t>(h.t));
  for (int i = 0; i < h.t; ++i) {
    const auto& task = tasks[static_cast<std::size_t>(i)];
    const int n = task.rows();
    const int n_val = std::max(1, n / 5);
    const int n_tr = n - n_val;
    if (n_tr < hp.folds) fail(ErrorCode::TooFewRows, "split leaves too few training rows");
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = stream_rng(hp.seed, "kselect", static_cast<std::uint64_t>(task.id));
    std::shuffle(perm.begin(), perm.end(), rng);
    TaskDataset tr;
    tr.loss = task.loss;
    tr.id = task.id;
    tr.x.resize(n_tr, h.d);
    tr.y.resize(n_tr);
    x_val[static_cast<std::size_t>(i)].resize(n_val, h.d);
    y_val[static_cast<std::size_t>(i)].resize(n_val);
    for (int r = 0; r < n_tr; ++r) {
      tr.x.row(r) = task.x.row(perm[static_cast<std::size_t>(r)]);
      tr.y(r) = task.y(perm[static_cast<std::size_t>(r)]);
    }
    for (int r = 0; r < n_val; ++r) {
      x_val[static_cast<std::size_t>(i)].row(r) =
          task.x.row(perm[static_cast<std::size_t>(n_tr + r)]);
      y_val[static_cast<std::size_t>(i)](r) = task.y(perm[static_cast<std::size_t>(n_tr + r)]);
    }
    train.push_back(std::move(tr));
  }

  auto [w0, lambda] = initialize(train, hp.lambda_grid, hp.folds, hp.seed);

  KSelection sel;
  double best_rmse = std::numeric_limits<double>::infinity();
  for (int k : k_grid) {
    auto model = detail::fit_with_init(train, k, hp, w0, lambda);
    double sq = 0.0;
    long long n_total = 0;
    for (int i = 0; i < h.t; ++i) {
      const Vector pred =
          predict(model, x_val[static_cast<std::size_t>(i)], i, h.loss);
      sq += (pred - y_val[static_cast<std::size_t>(i)]).squaredNorm();
      n_total += y_val[static_cast<std::size_t>(i)].size();
    }
    const double rmse = std::sqrt(sq / static_cast<double>(n_total));
    sel.curve.emplace_back(k, rmse);
    if (rmse < best_rmse) {
      best_rmse = rmse;
      sel.best_k = k;
    }
  }
  return sel;
}

}  // namespace stcmtl

#endif  // STCMTL_TRAINER_HPP

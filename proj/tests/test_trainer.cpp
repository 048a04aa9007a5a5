// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "stcmtl/bench.hpp"
#include "stcmtl/trainer.hpp"

using namespace stcmtl;

namespace {

TaskDataset make_task(const Matrix& x, const Vector& y, int id = 0) {
  TaskDataset t;
  t.x = x;
  t.y = y;
  t.loss = Loss::Squared;
  t.id = id;
  return t;
}

// Noiseless two-cluster toy: pure tasks only, per-task recovery is exact, so
// the alternation must not degrade it.
std::vector<TaskDataset> two_cluster_toy(Matrix& w_true) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  const int d = 8, n = 40;
  Vector ua = Vector::Zero(d), ub = Vector::Zero(d);
  ua(0) = 1.0;
  ua(1) = -0.6;
  ua(2) = 0.4;
  ub(5) = 0.9;
  ub(6) = 0.7;
  ub(7) = -0.5;
  w_true.resize(d, 6);
  std::vector<TaskDataset> tasks;
  for (int i = 0; i < 6; ++i) {
    const Vector& u = i < 3 ? ua : ub;
    w_true.col(i) = u;
    Matrix x(n, d);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < d; ++c) x(r, c) = g(rng);
    tasks.push_back(make_task(x, x * u, i));
  }
  return tasks;
}

}  // namespace

TEST_CASE("objective") {
  Matrix x(2, 1);
  x << 1.0, 2.0;
  Vector y(2);
  y << 1.0, 2.0;
  auto task = make_task(x, y);

  SUBCASE("zero model pays the full squared norm") {
    Matrix u = Matrix::Zero(1, 1);
    Matrix v = Matrix::Ones(1, 1);
    CHECK(objective({task}, u, v, 0.3) == doctest::Approx(y.squaredNorm() / 2.0));
  }
  SUBCASE("perfect fit with gamma 0") {
    Matrix u = Matrix::Ones(1, 1);
    Matrix v = Matrix::Ones(1, 1);
    CHECK(objective({task}, u, v, 0.0) == doctest::Approx(0.0));
  }
  SUBCASE("hand-evaluated toy") {
    Matrix u = Matrix::Ones(1, 1);
    Matrix v = Matrix::Ones(1, 1);
    CHECK(objective({task}, u, v, 0.1) == doctest::Approx(0.1));
  }
}

TEST_CASE("initialize") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);

  SUBCASE("identical tasks give identical columns and lambdas") {
    Matrix x(30, 4);
    for (int r = 0; r < 30; ++r)
      for (int c = 0; c < 4; ++c) x(r, c) = g(rng);
    Vector wt(4);
    wt << 0.5, 0.0, -1.0, 0.0;
    Vector y = x * wt;
    for (int r = 0; r < 30; ++r) y(r) += 0.1 * g(rng);
    std::vector<TaskDataset> tasks;
    for (int i = 0; i < 3; ++i) {
      auto t = make_task(x, y, i);
      t.id = 0;  // same id -> same CV folds -> bitwise identical columns
      tasks.push_back(t);
    }
    auto [w0, lambda] = initialize(tasks, HyperParams::default_lambda_grid(), 5, 42);
    CHECK((w0.w.col(0) - w0.w.col(1)).norm() == 0.0);
    CHECK((w0.w.col(0) - w0.w.col(2)).norm() == 0.0);
    CHECK(lambda(0) == lambda(1));
  }
  SUBCASE("noiseless single-cluster data recovers the truth") {
    Matrix w_true;
    auto tasks = two_cluster_toy(w_true);
    auto [w0, lambda] = initialize(tasks, HyperParams::default_lambda_grid(), 5, 42);
    CHECK((w0.w - w_true).lpNorm<Eigen::Infinity>() <= 0.05);
  }
  SUBCASE("zero response gives a zero fit") {
    Matrix x(12, 3);
    for (int r = 0; r < 12; ++r)
      for (int c = 0; c < 3; ++c) x(r, c) = g(rng);
    auto task = make_task(x, Vector::Zero(12));
    auto [w0, lambda] = initialize({task}, HyperParams::default_lambda_grid(), 4, 1);
    CHECK(w0.w.col(0).lpNorm<1>() == 0.0);
  }
}

TEST_CASE("predict") {
  // build a model by hand: u1=[1,-1], u2=[1,1], v = (0.5, 0.5)
  Matrix u(2, 2);
  u << 1.0, 1.0, -1.0, 1.0;
  Matrix v(2, 3);
  v << 1.0, 0.0, 0.5, 0.0, 1.0, 0.5;
  FitReport rep;
  rep.k = 2;
  rep.objective_trace = {1.0};
  rep.lambda = Vector::Ones(3);
  rep.gamma = 1.0;
  StcmtlModel model(ClusterCoefs(u), Membership(v, {0, 1}, {{0, 0}, {1, 1}}), rep);

  SUBCASE("zero input gives zero predictions") {
    Matrix x = Matrix::Zero(3, 2);
    CHECK(predict_scores(model, x, 2).norm() == 0.0);
  }
  SUBCASE("one-hot membership collapses to the cluster coefficients") {
    Matrix x(2, 2);
    x << 1.0, 0.0, 0.0, 1.0;
    Vector p = predict_scores(model, x, 0);
    CHECK(p(0) == doctest::Approx(1.0));
    CHECK(p(1) == doctest::Approx(-1.0));
  }
  SUBCASE("hand-computed mixed prediction") {
    Matrix x(1, 2);
    x << 2.0, 3.0;
    CHECK(predict_scores(model, x, 2)(0) == doctest::Approx(2.0));
  }
  SUBCASE("logistic predictions are signs") {
    Matrix x(2, 2);
    x << 5.0, 0.0, -5.0, 0.0;
    Vector p = predict(model, x, 0, Loss::Logistic);
    CHECK(p(0) == 1.0);
    CHECK(p(1) == -1.0);
  }
  SUBCASE("shape mismatch") {
    Matrix x(1, 3);
    x.setOnes();
    CHECK_THROWS_AS((void)predict_scores(model, x, 0), Error);
  }
}

TEST_CASE("fit on the noiseless two-cluster toy") {
  Matrix w_true;
  auto tasks = two_cluster_toy(w_true);
  HyperParams hp;
  hp.theta = 1.0;  // pure-tasks-only toy
  hp.seed = 5;
  auto model = fit(tasks, 2, hp);
  const Matrix w_hat = model.u.u * model.v.v();
  CHECK((w_hat - w_true).lpNorm<Eigen::Infinity>() <= 1e-3);
  CHECK(model.report.k == 2);
  CHECK(model.report.objective_trace.size() >= 1);
  CHECK(model.report.objective_trace.back() <=
        model.report.objective_trace.front() + 1e-12);
  // report.k matches the membership shape
  CHECK(model.v.k() == 2);
}

TEST_CASE("fit with K=1 degenerates to a shared model") {
  Matrix w_true;
  auto tasks = two_cluster_toy(w_true);
  HyperParams hp;
  hp.seed = 3;
  auto model = fit(tasks, 1, hp);
  CHECK((model.v.v() - Matrix::Ones(1, 6)).norm() == 0.0);
}

TEST_CASE("fit is deterministic") {
  Matrix w_true;
  auto tasks = two_cluster_toy(w_true);
  HyperParams hp;
  hp.theta = 1.0;
  hp.seed = 11;
  auto m1 = fit(tasks, 2, hp);
  auto m2 = fit(tasks, 2, hp);
  REQUIRE(m1.report.objective_trace.size() == m2.report.objective_trace.size());
  for (std::size_t i = 0; i < m1.report.objective_trace.size(); ++i)
    CHECK(m1.report.objective_trace[i] == m2.report.objective_trace[i]);
  CHECK((m1.u.u - m2.u.u).norm() == 0.0);
}

TEST_CASE("cluster-update inner loop is monotone in the objective") {
  Matrix w_true;
  auto tasks = two_cluster_toy(w_true);
  std::mt19937_64 rng(29);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix u(8, 2);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 2; ++c) u(r, c) = 0.3 * g(rng);
  Matrix v(2, 6);
  v << 1, 1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 1;
  const double gamma = 0.05;
  double prev = objective(tasks, u, v, gamma);
  for (int cycle = 0; cycle < 4; ++cycle) {
    for (int k = 0; k < 2; ++k) {
      u.col(k) = update_cluster_column(tasks, u, v, k, gamma);
      const double cur = objective(tasks, u, v, gamma);
      CHECK(cur <= prev + 1e-10);
      prev = cur;
    }
  }
}

TEST_CASE("fit on a small noisy benchmark instance") {
  SynthSpec spec;
  spec.t = 12;
  spec.d = 40;
  spec.k = 2;
  spec.n_train = 50;
  spec.n_test = 50;
  spec.pure_count = 10;
  spec.noise_sd = 0.3;
  spec.seed = 21;
  auto [train, test, truth] = generate(spec);
  HyperParams hp;
  hp.seed = 21;
  auto model = fit(train, 2, hp);
  double sq = 0.0;
  long long n = 0;
  for (int i = 0; i < 12; ++i) {
    const Vector pred = predict_scores(model, test[static_cast<std::size_t>(i)].x, i);
    sq += (test[static_cast<std::size_t>(i)].y - pred).squaredNorm();
    n += pred.size();
  }
  const double rmse_val = std::sqrt(sq / static_cast<double>(n));
  CHECK(rmse_val <= 0.45);  // noise floor is 0.3
  CHECK(model.report.iterations <= hp.max_outer);
}

TEST_CASE("select_k") {
  SUBCASE("single-point grid") {
    Matrix w_true;
    auto tasks = two_cluster_toy(w_true);
    HyperParams hp;
    hp.theta = 1.0;
    hp.seed = 2;
    auto sel = select_k(tasks, {2}, hp);
    CHECK(sel.best_k == 2);
    CHECK(sel.curve.size() == 1);
  }
  SUBCASE("single-cluster data gives a near-flat curve") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.0, 1.0);
    const int d = 10, n = 60;
    Vector u = Vector::Zero(d);
    u(0) = 1.0;
    u(3) = -0.7;
    std::vector<TaskDataset> tasks;
    for (int i = 0; i < 8; ++i) {
      Matrix x(n, d);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c) x(r, c) = g(rng);
      Vector y = x * u;
      for (int r = 0; r < n; ++r) y(r) += 0.1 * g(rng);
      tasks.push_back(make_task(x, y, i));
    }
    HyperParams hp;
    hp.seed = 13;
    auto sel = select_k(tasks, {2, 3}, hp);
    CHECK(std::abs(sel.curve[0].second - sel.curve[1].second) <= 0.05);
    CHECK((sel.best_k == 2 || sel.best_k == 3));
  }
  SUBCASE("empty grid is rejected") {
    Matrix w_true;
    auto tasks = two_cluster_toy(w_true);
    CHECK_THROWS_AS((void)select_k(tasks, {}, HyperParams()), Error);
  }
}

TEST_CASE("fit validates the cluster count") {
  Matrix w_true;
  auto tasks = two_cluster_toy(w_true);
  CHECK_THROWS_AS((void)fit(tasks, 0, HyperParams()), Error);
  CHECK_THROWS_AS((void)fit(tasks, 7, HyperParams()), Error);  // > min(D,T) = 6
}

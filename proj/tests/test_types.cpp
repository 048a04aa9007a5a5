// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stcmtl/types.hpp"

using namespace stcmtl;

namespace {

TaskDataset task_of(int n, int d, Loss loss = Loss::Squared, int id = 0) {
  TaskDataset t;
  t.x = Matrix::Ones(n, d);
  t.y = Vector::Ones(n);
  t.loss = loss;
  t.id = id;
  return t;
}

}  // namespace

TEST_CASE("validate_problem") {
  SUBCASE("shape passthrough") {
    std::vector<TaskDataset> tasks{task_of(10, 5, Loss::Squared, 0),
                                   task_of(10, 5, Loss::Squared, 1),
                                   task_of(10, 5, Loss::Squared, 2)};
    auto h = validate_problem(tasks);
    CHECK(h.t == 3);
    CHECK(h.d == 5);
    CHECK(h.n == std::vector<int>{10, 10, 10});
  }
  SUBCASE("mixed feature dimensions") {
    std::vector<TaskDataset> tasks{task_of(4, 5), task_of(4, 6)};
    CHECK_THROWS_WITH_AS((void)validate_problem(tasks),
                         doctest::Contains("features"), Error);
  }
  SUBCASE("empty problem") {
    std::vector<TaskDataset> tasks;
    CHECK_THROWS_AS((void)validate_problem(tasks), Error);
  }
  SUBCASE("bad logistic labels") {
    auto t = task_of(4, 2, Loss::Logistic);
    t.y(2) = 0.0;
    std::vector<TaskDataset> tasks{t};
    try {
      (void)validate_problem(tasks);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadLabels);
    }
  }
  SUBCASE("mixed loss kinds") {
    std::vector<TaskDataset> tasks{task_of(4, 2, Loss::Squared)};
    auto t = task_of(4, 2, Loss::Logistic);
    t.y.setOnes();
    tasks.push_back(t);
    CHECK_THROWS_AS((void)validate_problem(tasks), Error);
  }
}

TEST_CASE("Membership invariants") {
  SUBCASE("valid semisoft matrix") {
    Matrix v(2, 3);
    v << 1.0, 0.0, 0.4, 0.0, 1.0, 0.6;
    Membership m(v, {0, 1}, {{0, 0}, {1, 1}});
    CHECK(m.k() == 2);
    CHECK(m.t() == 3);
  }
  SUBCASE("column sum off by more than 1e-9 is rejected") {
    Matrix v(2, 2);
    v << 1.0, 0.4, 0.0, 0.59;
    CHECK_THROWS_AS(Membership(v, {0}, {{0, 0}}), Error);
  }
  SUBCASE("column sum within 1e-9 is accepted") {
    Matrix v(2, 2);
    v << 1.0, 0.4, 0.0, 0.6 + 5e-10;
    // cluster 1 still needs a pure task somewhere
    Matrix v2(2, 3);
    v2 << 1.0, 0.4, 0.0, 0.0, 0.6 + 5e-10, 1.0;
    Membership m(v2, {0, 2}, {{0, 0}, {2, 1}});
    CHECK(m.t() == 3);
  }
  SUBCASE("pure column must be one-hot") {
    Matrix v(2, 2);
    v << 0.7, 0.0, 0.3, 1.0;
    CHECK_THROWS_AS(Membership(v, {0, 1}, {{0, 0}, {1, 1}}), Error);
  }
  SUBCASE("every cluster needs a pure task") {
    Matrix v(2, 2);
    v << 1.0, 1.0, 0.0, 0.0;
    try {
      Membership m(v, {0, 1}, {{0, 0}, {1, 0}});
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyCluster);
    }
  }
  SUBCASE("entries outside [0,1] are rejected") {
    Matrix v(2, 2);
    v << 1.0, 1.2, 0.0, -0.2;
    CHECK_THROWS_AS(Membership(v, {0}, {{0, 0}}), Error);
  }
}

TEST_CASE("CoefMatrix and ClusterCoefs reject non-finite entries") {
  Matrix bad(2, 2);
  bad.setOnes();
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(CoefMatrix{bad}, Error);
  CHECK_THROWS_AS(ClusterCoefs{bad}, Error);
  Matrix good = Matrix::Identity(3, 2);
  CHECK(ClusterCoefs(good).rank_margin() > 0.5);
}

TEST_CASE("HyperParams validation and default grid") {
  HyperParams hp;
  hp.validate();
  CHECK(hp.lambda_grid.size() == 19);
  CHECK(hp.lambda_grid.front() == doctest::Approx(8.0));
  CHECK(hp.lambda_grid.back() == doctest::Approx(std::ldexp(1.0, -15)));
  hp.theta = 0.0;
  CHECK_THROWS_AS(hp.validate(), Error);
}

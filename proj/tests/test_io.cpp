// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "stcmtl/io.hpp"

using namespace stcmtl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("stcmtl_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

StcmtlModel small_model() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix u(4, 2);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 2; ++c) u(r, c) = g(rng);
  Matrix v(2, 3);
  v << 1.0, 0.0, 1.0 / 3.0, 0.0, 1.0, 2.0 / 3.0;
  FitReport rep;
  rep.k = 2;
  rep.gamma = 0.0625;
  rep.lambda = Vector(3);
  rep.lambda << 0.125, 0.25, std::ldexp(1.0, -13);
  rep.objective_trace = {3.14159, 2.5, 2.49999999999};
  rep.iterations = 3;
  rep.converged = true;
  rep.outliers = {2};
  StcmtlModel m(ClusterCoefs(u), Membership(v, {0, 1}, {{0, 0}, {1, 1}}), rep);
  Vector oc(4);
  oc << g(rng), g(rng), g(rng), 1e-300;
  m.outlier_coefs[2] = oc;
  return m;
}

}  // namespace

TEST_CASE("manifest and task csv loading") {
  TempDir td;
  write_file(td.path / "m.txt",
             "stcmtl-manifest v1\nloss squared\nstandardize 0\n"
             "task 1 t1.csv\ntask 2 t2.csv\n");
  write_file(td.path / "t1.csv", "y,x1,x2\n1.0,0.5,-0.5\n2.0,1.5,0.25\n0.0,0,1\n");
  write_file(td.path / "t2.csv", "y,x1,x2\n-1,2,3\n0.5,-1,0\n1,0,0\n");

  SUBCASE("well-formed problem loads") {
    auto tasks = load_tasks(td.path / "m.txt");
    CHECK(tasks.size() == 2);
    CHECK(tasks[0].x.cols() == 2);
    CHECK(tasks[0].x.rows() == 3);
    CHECK(tasks[0].y(1) == 2.0);
    CHECK(tasks[1].x(0, 1) == 3.0);
    CHECK(tasks[0].id == 0);
  }
  SUBCASE("non-numeric cell reports row and column") {
    write_file(td.path / "t2.csv", "y,x1,x2\n-1,2,3\n0.5,oops,0\n");
    try {
      (void)load_tasks(td.path / "m.txt");
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
      CHECK(std::string(e.what()).find("col 2") != std::string::npos);
    }
  }
  SUBCASE("header must start with y") {
    write_file(td.path / "t1.csv", "x1,x2,y\n1,2,3\n");
    CHECK_THROWS_AS((void)load_tasks(td.path / "m.txt"), Error);
  }
  SUBCASE("task ids must be contiguous from 1") {
    write_file(td.path / "m.txt",
               "stcmtl-manifest v1\nloss squared\ntask 1 t1.csv\ntask 3 t2.csv\n");
    CHECK_THROWS_AS((void)load_tasks(td.path / "m.txt"), Error);
  }
  SUBCASE("mismatched feature counts across tasks") {
    write_file(td.path / "t2.csv", "y,x1\n1,2\n3,4\n");
    CHECK_THROWS_AS((void)load_tasks(td.path / "m.txt"), Error);
  }
  SUBCASE("logistic labels are checked at load") {
    write_file(td.path / "m.txt",
               "stcmtl-manifest v1\nloss logistic\ntask 1 t1.csv\n");
    write_file(td.path / "t1.csv", "y,x1\n1,0.5\n0,1.5\n");
    try {
      (void)load_tasks(td.path / "m.txt");
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BadLabels);
    }
  }
  SUBCASE("standardize flag centers and scales") {
    write_file(td.path / "m.txt",
               "stcmtl-manifest v1\nloss squared\nstandardize 1\ntask 1 t1.csv\n");
    auto tasks = load_tasks(td.path / "m.txt");
    for (int c = 0; c < tasks[0].x.cols(); ++c) {
      CHECK(tasks[0].x.col(c).mean() == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(tasks[0].x.col(c).squaredNorm() / tasks[0].x.rows() ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("task csv round trip is bit exact") {
  TempDir td;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  TaskDataset t;
  t.id = 0;
  t.x.resize(7, 3);
  t.y.resize(7);
  for (int r = 0; r < 7; ++r) {
    t.y(r) = g(rng) * 1e-7;
    for (int c = 0; c < 3; ++c) t.x(r, c) = g(rng) * std::pow(10.0, r - 3);
  }
  atomic_write(td.path / "t.csv", write_task_csv_string(t));
  auto back = read_task_csv(td.path / "t.csv", Loss::Squared, 0);
  CHECK((back.x - t.x).norm() == 0.0);
  CHECK((back.y - t.y).norm() == 0.0);
}

TEST_CASE("model file round trip is bit exact") {
  TempDir td;
  auto m = small_model();
  write_model(td.path / "model.txt", m);
  auto back = read_model(td.path / "model.txt");
  CHECK((back.u.u - m.u.u).norm() == 0.0);
  CHECK((back.v.v() - m.v.v()).norm() == 0.0);
  CHECK(back.v.pure_set() == m.v.pure_set());
  CHECK(back.v.cluster_of_pure() == m.v.cluster_of_pure());
  CHECK(back.report.gamma == m.report.gamma);
  CHECK((back.report.lambda - m.report.lambda).norm() == 0.0);
  CHECK(back.report.objective_trace == m.report.objective_trace);
  CHECK(back.report.outliers == m.report.outliers);
  CHECK(back.report.iterations == m.report.iterations);
  CHECK(back.report.converged == m.report.converged);
  REQUIRE(back.outlier_coefs.count(2) == 1);
  CHECK((back.outlier_coefs.at(2) - m.outlier_coefs.at(2)).norm() == 0.0);
  // serialization is deterministic
  CHECK(write_model_string(back) == write_model_string(m));
}

TEST_CASE("model reader rejects malformed files") {
  TempDir td;
  write_file(td.path / "bad.txt", "not-a-model\n");
  CHECK_THROWS_AS((void)read_model(td.path / "bad.txt"), Error);
  auto m = small_model();
  std::string s = write_model_string(m);
  write_file(td.path / "trunc.txt", s.substr(0, s.size() / 2));
  CHECK_THROWS_AS((void)read_model(td.path / "trunc.txt"), Error);
}

TEST_CASE("atomic_write leaves no temp file") {
  TempDir td;
  atomic_write(td.path / "out.txt", "hello\n");
  CHECK(fs::exists(td.path / "out.txt"));
  CHECK(!fs::exists(td.path / "out.txt.tmp"));
  std::ifstream in(td.path / "out.txt");
  std::string line;
  std::getline(in, line);
  CHECK(line == "hello");
}

TEST_CASE("tsv emitters") {
  CHECK(metrics_tsv({{"rmse", 0.51}}) == "rmse\t0.510000\n");
  CHECK(trace_tsv({2.0, 1.0}).substr(0, 20) == "iteration\tobjective\n");
  CHECK(kcurve_tsv({{2, 0.9}, {3, 0.7}}).find("3\t0.700000") != std::string::npos);
  Matrix m(2, 2);
  m << 1.0, 2.0, 3.0, 4.0;
  TempDir td;
  atomic_write(td.path / "m.tsv", matrix_tsv(m));
  CHECK((read_matrix_tsv(td.path / "m.tsv") - m).norm() == 0.0);
}

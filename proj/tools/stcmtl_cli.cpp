// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment front-end: `simulate` writes synthetic task datasets, `train`
// fits a model from a manifest, `evaluate` scores a model against a test
// manifest (and ground truth, when available).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stcmtl/stcmtl.hpp"

namespace fs = std::filesystem;
using namespace stcmtl;

namespace {

std::pair<int, int> parse_k_grid(const std::string& s) {
  const auto pos = s.find("..");
  if (pos == std::string::npos)
    fail(ErrorCode::BadSpec, "--k-grid expects A..B, got '" + s + "'");
  try {
    const int a = std::stoi(s.substr(0, pos));
    const int b = std::stoi(s.substr(pos + 2));
    if (a < 1 || b < a) fail(ErrorCode::BadSpec, "--k-grid range is empty");
    return {a, b};
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::BadSpec, "--k-grid expects A..B, got '" + s + "'");
  }
}

int run_train(const std::string& manifest, int k, const std::string& k_grid,
              const HyperParams& hp, bool robust, const std::string& out) {
  auto tasks = load_tasks(manifest);

  int use_k = k;
  if (!k_grid.empty()) {
    auto [a, b] = parse_k_grid(k_grid);
    std::vector<int> grid;
    for (int kk = a; kk <= b; ++kk) grid.push_back(kk);
    auto sel = select_k(tasks, grid, hp);
    atomic_write(out + ".kcurve.tsv", kcurve_tsv(sel.curve));
    use_k = sel.best_k;
  }
  if (use_k < 1) fail(ErrorCode::BadSpec, "give --k or --k-grid");

  StcmtlModel model = robust ? fit_robust(tasks, use_k, hp) : fit(tasks, use_k, hp);
  write_model(out, model);
  for (const auto& w : model.report.warnings) std::cerr << "warning: " << w << "\n";
  std::printf("k=%d obj=%.6g iters=%d outliers=%zu\n", model.k(),
              model.report.objective_trace.back(), model.report.iterations,
              model.report.outliers.size());
  return 0;
}

int run_simulate(int d, int t, int k, const std::string& mixing, int outliers,
                 std::uint64_t seed, const std::string& out_dir) {
  SynthSpec spec;
  spec.d = d;
  spec.t = t;
  spec.k = k;
  spec.n_outliers = outliers;
  spec.seed = seed;
  if (mixing == "sparse")
    spec.mixing = Mixing::Sparse;
  else if (mixing == "dense")
    spec.mixing = Mixing::Dense;
  else
    fail(ErrorCode::BadSpec, "--mixing must be sparse or dense");
  spec.pure_count = (t * 5) / 6;  // 50 of 60 at the default size
  if (spec.pure_count < k) spec.pure_count = std::min(t, k);

  auto [train, test, truth] = generate(spec);

  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "train", ec);
  fs::create_directories(fs::path(out_dir) / "test", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create output directory " + out_dir);

  Manifest m_train, m_test;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const std::string rel_train = "train/task" + std::to_string(i + 1) + ".csv";
    const std::string rel_test = "test/task" + std::to_string(i + 1) + ".csv";
    atomic_write(fs::path(out_dir) / rel_train, write_task_csv_string(train[i]));
    atomic_write(fs::path(out_dir) / rel_test, write_task_csv_string(test[i]));
    m_train.tasks.emplace_back(static_cast<int>(i) + 1, rel_train);
    m_test.tasks.emplace_back(static_cast<int>(i) + 1, rel_test);
  }
  atomic_write(fs::path(out_dir) / "manifest_train.txt", write_manifest_string(m_train));
  atomic_write(fs::path(out_dir) / "manifest_test.txt", write_manifest_string(m_test));
  atomic_write(fs::path(out_dir) / "truth_u.tsv", matrix_tsv(truth.u_true));
  atomic_write(fs::path(out_dir) / "truth_v.tsv", matrix_tsv(truth.v_true));
  atomic_write(fs::path(out_dir) / "truth_w.tsv", matrix_tsv(truth.w_true));
  Matrix support(truth.w_true.rows(), truth.w_true.cols());
  for (int r = 0; r < support.rows(); ++r)
    for (int c = 0; c < support.cols(); ++c)
      support(r, c) = truth.support[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] ? 1.0 : 0.0;
  atomic_write(fs::path(out_dir) / "truth_support.tsv", matrix_tsv(support));
  std::string outs;
  for (int id : truth.outlier_ids) outs += std::to_string(id + 1) + "\n";
  atomic_write(fs::path(out_dir) / "truth_outliers.txt", outs);
  std::printf("wrote %zu tasks to %s\n", train.size(), out_dir.c_str());
  return 0;
}

int run_evaluate(const std::string& model_path, const std::string& manifest,
                 const std::string& truth_dir, const std::string& metrics_arg) {
  auto model = read_model(model_path);
  auto tasks = load_tasks(manifest);
  if (static_cast<int>(tasks.size()) != model.t())
    fail(ErrorCode::ShapeMismatch, "manifest task count differs from model");
  const Loss loss = tasks.front().loss;

  bool want_ree = false, want_mcc = false, explicit_metrics = false;
  if (!metrics_arg.empty()) {
    explicit_metrics = true;
    for (auto part : io_detail::split(metrics_arg, ',')) {
      if (part == "rmse" || part == "er") continue;
      if (part == "ree")
        want_ree = true;
      else if (part == "mcc")
        want_mcc = true;
      else
        fail(ErrorCode::BadSpec, "unknown metric '" + std::string(part) + "'");
    }
    if ((want_ree || want_mcc) && truth_dir.empty())
      fail(ErrorCode::MissingTruth, "ree/mcc need --truth DIR");
  }

  std::vector<std::pair<std::string, double>> rows;
  if (loss == Loss::Squared) {
    double sq = 0.0;
    long long n = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const Vector pred = predict_scores(model, tasks[i].x, static_cast<int>(i));
      sq += (tasks[i].y - pred).squaredNorm();
      n += tasks[i].y.size();
    }
    rows.emplace_back("rmse", std::sqrt(sq / static_cast<double>(n)));
  } else {
    long long wrong = 0, n = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const Vector pred = predict(model, tasks[i].x, static_cast<int>(i), loss);
      for (int r = 0; r < pred.size(); ++r)
        if (pred(r) != tasks[i].y(r)) ++wrong;
      n += pred.size();
    }
    rows.emplace_back("er", static_cast<double>(wrong) / static_cast<double>(n));
  }

  if (!truth_dir.empty() || want_ree || want_mcc) {
    if (truth_dir.empty()) fail(ErrorCode::MissingTruth, "ree/mcc need --truth DIR");
    // truth_w covers planted outlier columns, which the U V composition cannot.
    Matrix w_true;
    if (fs::exists(fs::path(truth_dir) / "truth_w.tsv")) {
      w_true = read_matrix_tsv(fs::path(truth_dir) / "truth_w.tsv");
    } else {
      w_true = read_matrix_tsv(fs::path(truth_dir) / "truth_u.tsv") *
               read_matrix_tsv(fs::path(truth_dir) / "truth_v.tsv");
    }
    Matrix support_true = read_matrix_tsv(fs::path(truth_dir) / "truth_support.tsv");
    if (w_true.rows() != model.d() || w_true.cols() != model.t())
      fail(ErrorCode::ShapeMismatch, "truth W shape differs from the model");
    Matrix w_hat(model.d(), model.t());
    for (int i = 0; i < model.t(); ++i) {
      auto it = model.outlier_coefs.find(i);
      w_hat.col(i) = it != model.outlier_coefs.end() ? it->second
                                                     : Vector(model.u.u * model.v.v().col(i));
    }
    if (!explicit_metrics || want_ree)
      rows.emplace_back("ree", ree(w_true, w_hat));
    if (!explicit_metrics || want_mcc) {
      SupportMatrix st(static_cast<std::size_t>(support_true.rows()),
                       std::vector<bool>(static_cast<std::size_t>(support_true.cols()), false));
      for (int r = 0; r < support_true.rows(); ++r)
        for (int c = 0; c < support_true.cols(); ++c)
          st[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = support_true(r, c) != 0.0;
      rows.emplace_back("mcc", mcc(st, support_of(w_hat)));
    }
  }

  std::fputs(metrics_tsv(rows).c_str(), stdout);
  atomic_write(model_path + ".trace.tsv", trace_tsv(model.report.objective_trace));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semisoft task clustering multi-task learner"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "fit a model from a task manifest");
  std::string tr_manifest, tr_out, tr_kgrid;
  int tr_k = 0;
  bool tr_robust = false;
  HyperParams hp;
  int tr_seed = 42;
  train->add_option("--manifest", tr_manifest, "task manifest path")->required();
  train->add_option("--k", tr_k, "cluster count");
  train->add_option("--k-grid", tr_kgrid, "cluster grid A..B (picks best by held-out RMSE)");
  train->add_option("--theta", hp.theta, "fraction of tasks declared pure");
  train->add_option("--epsilon", hp.epsilon, "neighbor fraction for purity scores");
  train->add_option("--folds", hp.folds, "cross-validation folds");
  train->add_option("--seed", tr_seed, "rng seed");
  train->add_option("--max-iter", hp.max_outer, "outer iteration cap");
  train->add_option("--tol", hp.tol, "relative objective tolerance");
  train->add_option("--w-sweeps", hp.w_sweeps, "refresh sweeps per task");
  train->add_flag("--robust", tr_robust, "screen outlier tasks");
  train->add_option("--out", tr_out, "model output path")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "write a synthetic benchmark dataset");
  int sm_d = 200, sm_t = 60, sm_k = 5, sm_outliers = 0;
  int sm_seed = 42;
  std::string sm_mixing = "sparse", sm_out;
  sim->add_option("--d", sm_d, "feature count");
  sim->add_option("--t", sm_t, "task count");
  sim->add_option("--k", sm_k, "cluster count");
  sim->add_option("--mixing", sm_mixing, "sparse|dense");
  sim->add_option("--outliers", sm_outliers, "planted outlier tasks");
  sim->add_option("--seed", sm_seed, "rng seed");
  sim->add_option("--out", sm_out, "output directory")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score a model on a test manifest");
  std::string ev_model, ev_manifest, ev_truth, ev_metrics;
  ev->add_option("--model", ev_model, "model file")->required();
  ev->add_option("--manifest", ev_manifest, "test manifest")->required();
  ev->add_option("--truth", ev_truth, "ground-truth directory (enables ree/mcc)");
  ev->add_option("--metrics", ev_metrics, "comma list: rmse,er,ree,mcc");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (train->parsed()) {
      hp.seed = static_cast<std::uint64_t>(tr_seed);
      return run_train(tr_manifest, tr_k, tr_kgrid, hp, tr_robust, tr_out);
    }
    if (sim->parsed())
      return run_simulate(sm_d, sm_t, sm_k, sm_mixing, sm_outliers,
                          static_cast<std::uint64_t>(sm_seed), sm_out);
    if (ev->parsed()) return run_evaluate(ev_model, ev_manifest, ev_truth, ev_metrics);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.numeric() ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

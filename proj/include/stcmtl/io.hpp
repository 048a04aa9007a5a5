// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0
//
// Plain-text experiment formats: task manifests, task CSVs, the versioned
// model file, and TSV metric/trace emission. Doubles are written with 17
// significant digits so every finite value round-trips bit-exactly.

#ifndef STCMTL_IO_HPP
#define STCMTL_IO_HPP

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stcmtl/core.hpp"
#include "stcmtl/types.hpp"

namespace stcmtl {

struct Manifest {
  Loss loss = Loss::Squared;
  bool standardize = false;
  std::vector<std::pair<int, std::string>> tasks;  // (1-based id, csv path)
};

namespace io_detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e)
    fail(ErrorCode::ParseError, "bad number '" + std::string(s) + "' at " + where);
  return v;
}

inline long parse_int(std::string_view s, const std::string& where) {
  long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    fail(ErrorCode::ParseError, "bad integer '" + std::string(s) + "' at " + where);
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace io_detail

/// Writes a file atomically (temp file + rename).
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot open " + tmp + " for writing");
    out << content;
    if (!out) fail(ErrorCode::IoError, "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot rename " + tmp + " -> " + path.string());
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open manifest " + path.string());
  Manifest m;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = io_detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto where = path.string() + ":" + std::to_string(lineno);
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (!header_seen) {
      std::string ver;
      ss >> ver;
      if (tag != "stcmtl-manifest" || ver != "v1")
        fail(ErrorCode::ParseError, "not a stcmtl-manifest v1 file at " + where);
      header_seen = true;
      continue;
    }
    if (tag == "loss") {
      std::string v;
      ss >> v;
      if (v == "squared")
        m.loss = Loss::Squared;
      else if (v == "logistic")
        m.loss = Loss::Logistic;
      else
        fail(ErrorCode::ParseError, "unknown loss '" + v + "' at " + where);
    } else if (tag == "standardize") {
      int v = 0;
      ss >> v;
      m.standardize = v != 0;
    } else if (tag == "task") {
      int id = 0;
      std::string rel;
      ss >> id;
      std::getline(ss, rel);
      const auto first = rel.find_first_not_of(" \t");
      if (first == std::string::npos)
        fail(ErrorCode::ParseError, "task line without path at " + where);
      rel = rel.substr(first);
      m.tasks.emplace_back(id, rel);
    } else {
      fail(ErrorCode::ParseError, "unknown manifest entry '" + tag + "' at " + where);
    }
  }
  if (!header_seen) fail(ErrorCode::ParseError, "empty manifest " + path.string());
  if (m.tasks.empty()) fail(ErrorCode::EmptyProblem, "manifest lists no tasks");
  for (std::size_t i = 0; i < m.tasks.size(); ++i)
    if (m.tasks[i].first != static_cast<int>(i) + 1)
      fail(ErrorCode::ParseError,
           "task ids must be contiguous from 1; saw id " +
               std::to_string(m.tasks[i].first) + " in position " + std::to_string(i + 1));
  return m;
}

/// Task CSV: header `y,x1,...,xD`, one observation per row.
inline TaskDataset read_task_csv(const std::filesystem::path& path, Loss loss, int id) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open task csv " + path.string());
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorCode::ParseError, "empty csv " + path.string());
  line = io_detail::strip_cr(line);
  auto header = io_detail::split(line, ',');
  if (header.empty() || header[0] != "y")
    fail(ErrorCode::ParseError, "header must start with 'y' in " + path.string());
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1) fail(ErrorCode::ParseError, "no feature columns in " + path.string());
  for (int j = 0; j < d; ++j) {
    const std::string want = "x" + std::to_string(j + 1);
    if (header[static_cast<std::size_t>(j + 1)] != want)
      fail(ErrorCode::ParseError, "header column " + std::to_string(j + 2) +
                                      " must be '" + want + "' in " + path.string());
  }

  std::vector<double> ys;
  std::vector<double> xs;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = io_detail::strip_cr(line);
    if (line.empty()) continue;
    auto cells = io_detail::split(line, ',');
    if (static_cast<int>(cells.size()) != d + 1)
      fail(ErrorCode::ParseError, path.string() + " row " + std::to_string(row) +
                                      ": expected " + std::to_string(d + 1) +
                                      " cells, got " + std::to_string(cells.size()));
    for (int c = 0; c <= d; ++c) {
      const auto where =
          path.string() + " row " + std::to_string(row) + " col " + std::to_string(c + 1);
      const double v = io_detail::parse_double(cells[static_cast<std::size_t>(c)], where);
      if (c == 0)
        ys.push_back(v);
      else
        xs.push_back(v);
    }
  }
  if (ys.empty()) fail(ErrorCode::ParseError, "no data rows in " + path.string());

  TaskDataset task;
  task.id = id;
  task.loss = loss;
  const int n = static_cast<int>(ys.size());
  task.x.resize(n, d);
  task.y.resize(n);
  for (int r = 0; r < n; ++r) {
    task.y(r) = ys[static_cast<std::size_t>(r)];
    for (int c = 0; c < d; ++c)
      task.x(r, c) = xs[static_cast<std::size_t>(r) * d + c];
  }
  return task;
}

/// Centers and unit-scales each feature column (population sd). Constant
/// columns are centered only.
inline void standardize_task(TaskDataset& task) {
  const int n = task.rows();
  for (int c = 0; c < task.cols(); ++c) {
    const double mean = task.x.col(c).mean();
    task.x.col(c).array() -= mean;
    const double sd = std::sqrt(task.x.col(c).squaredNorm() / n);
    if (sd > 1e-12) task.x.col(c) /= sd;
  }
}

/// Loads and validates all tasks listed in a manifest. Relative CSV paths
/// resolve against the manifest's directory.
inline std::vector<TaskDataset> load_tasks(const std::filesystem::path& manifest_path) {
  const Manifest m = read_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  std::vector<TaskDataset> tasks;
  tasks.reserve(m.tasks.size());
  for (const auto& [id, rel] : m.tasks) {
    std::filesystem::path p(rel);
    if (p.is_relative()) p = base / p;
    tasks.push_back(read_task_csv(p, m.loss, id - 1));
    if (m.standardize) standardize_task(tasks.back());
  }
  validate_problem(tasks);
  return tasks;
}

inline std::string write_manifest_string(const Manifest& m) {
  std::string s = "stcmtl-manifest v1\n";
  s += std::string("loss ") + (m.loss == Loss::Squared ? "squared" : "logistic") + "\n";
  s += std::string("standardize ") + (m.standardize ? "1" : "0") + "\n";
  for (const auto& [id, rel] : m.tasks)
    s += "task " + std::to_string(id) + " " + rel + "\n";
  return s;
}

inline std::string write_task_csv_string(const TaskDataset& task) {
  std::string s = "y";
  for (int c = 0; c < task.cols(); ++c) s += ",x" + std::to_string(c + 1);
  s += "\n";
  for (int r = 0; r < task.rows(); ++r) {
    s += io_detail::format_double(task.y(r));
    for (int c = 0; c < task.cols(); ++c)
      s += "," + io_detail::format_double(task.x(r, c));
    s += "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

inline std::string write_model_string(const StcmtlModel& m) {
  std::string s = "stcmtl-model v1\n";
  const auto& r = m.report;
  s += "k " + std::to_string(m.k()) + "\n";
  s += "d " + std::to_string(m.d()) + "\n";
  s += "t " + std::to_string(m.t()) + "\n";
  s += "gamma " + io_detail::format_double(r.gamma) + "\n";
  s += "iterations " + std::to_string(r.iterations) + "\n";
  s += std::string("converged ") + (r.converged ? "1" : "0") + "\n";
  s += "lambda";
  for (int i = 0; i < r.lambda.size(); ++i)
    s += " " + io_detail::format_double(r.lambda(i));
  s += "\npure";
  for (int i : m.v.pure_set())
    s += " " + std::to_string(i + 1) + ":" + std::to_string(m.v.cluster_of_pure().at(i) + 1);
  s += "\nU\n";
  for (int row = 0; row < m.d(); ++row) {
    for (int c = 0; c < m.k(); ++c)
      s += (c ? " " : "") + io_detail::format_double(m.u.u(row, c));
    s += "\n";
  }
  s += "V\n";
  for (int row = 0; row < m.k(); ++row) {
    for (int c = 0; c < m.t(); ++c)
      s += (c ? " " : "") + io_detail::format_double(m.v.v()(row, c));
    s += "\n";
  }
  s += "outliers";
  for (int i : r.outliers) s += " " + std::to_string(i + 1);
  s += "\n";
  for (const auto& [id, coef] : m.outlier_coefs) {
    s += "outlier_coef " + std::to_string(id + 1);
    for (int row = 0; row < coef.size(); ++row)
      s += " " + io_detail::format_double(coef(row));
    s += "\n";
  }
  s += "trace";
  for (double v : r.objective_trace) s += " " + io_detail::format_double(v);
  s += "\n";
  return s;
}

inline void write_model(const std::filesystem::path& path, const StcmtlModel& m) {
  atomic_write(path, write_model_string(m));
}

inline StcmtlModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open model " + path.string());
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line))
      fail(ErrorCode::ParseError, std::string("model file truncated before ") + what);
    line = io_detail::strip_cr(line);
  };

  next_line("header");
  if (line != "stcmtl-model v1")
    fail(ErrorCode::ParseError, "not a stcmtl-model v1 file: " + path.string());

  int k = 0, d = 0, t = 0;
  FitReport report;
  auto read_kv = [&](const char* key) {
    next_line(key);
    auto parts = io_detail::split(line, ' ');
    if (parts.size() != 2 || parts[0] != key)
      fail(ErrorCode::ParseError, std::string("expected '") + key + "' line");
    return std::string(parts[1]);
  };
  k = static_cast<int>(io_detail::parse_int(read_kv("k"), "k"));
  d = static_cast<int>(io_detail::parse_int(read_kv("d"), "d"));
  t = static_cast<int>(io_detail::parse_int(read_kv("t"), "t"));
  report.k = k;
  report.gamma = io_detail::parse_double(read_kv("gamma"), "gamma");
  report.iterations = static_cast<int>(io_detail::parse_int(read_kv("iterations"), "iterations"));
  report.converged = io_detail::parse_int(read_kv("converged"), "converged") != 0;

  next_line("lambda");
  {
    auto parts = io_detail::split(line, ' ');
    if (parts.empty() || parts[0] != "lambda")
      fail(ErrorCode::ParseError, "expected lambda line");
    report.lambda.resize(static_cast<int>(parts.size()) - 1);
    for (std::size_t i = 1; i < parts.size(); ++i)
      report.lambda(static_cast<int>(i) - 1) = io_detail::parse_double(parts[i], "lambda");
  }

  std::vector<int> pure;
  std::map<int, int> cluster_of_pure;
  next_line("pure");
  {
    auto parts = io_detail::split(line, ' ');
    if (parts.empty() || parts[0] != "pure")
      fail(ErrorCode::ParseError, "expected pure line");
    for (std::size_t i = 1; i < parts.size(); ++i) {
      auto pc = io_detail::split(parts[i], ':');
      if (pc.size() != 2) fail(ErrorCode::ParseError, "bad pure entry");
      const int id = static_cast<int>(io_detail::parse_int(pc[0], "pure id")) - 1;
      const int c = static_cast<int>(io_detail::parse_int(pc[1], "pure cluster")) - 1;
      pure.push_back(id);
      cluster_of_pure[id] = c;
    }
  }

  next_line("U");
  if (line != "U") fail(ErrorCode::ParseError, "expected U section");
  Matrix u(d, k);
  for (int row = 0; row < d; ++row) {
    next_line("U row");
    auto parts = io_detail::split(line, ' ');
    if (static_cast<int>(parts.size()) != k)
      fail(ErrorCode::ParseError, "U row " + std::to_string(row + 1) + " has wrong arity");
    for (int c = 0; c < k; ++c) u(row, c) = io_detail::parse_double(parts[static_cast<std::size_t>(c)], "U");
  }
  next_line("V");
  if (line != "V") fail(ErrorCode::ParseError, "expected V section");
  Matrix v(k, t);
  for (int row = 0; row < k; ++row) {
    next_line("V row");
    auto parts = io_detail::split(line, ' ');
    if (static_cast<int>(parts.size()) != t)
      fail(ErrorCode::ParseError, "V row " + std::to_string(row + 1) + " has wrong arity");
    for (int c = 0; c < t; ++c) v(row, c) = io_detail::parse_double(parts[static_cast<std::size_t>(c)], "V");
  }

  next_line("outliers");
  {
    auto parts = io_detail::split(line, ' ');
    if (parts.empty() || parts[0] != "outliers")
      fail(ErrorCode::ParseError, "expected outliers line");
    for (std::size_t i = 1; i < parts.size(); ++i)
      if (!parts[i].empty())
        report.outliers.push_back(static_cast<int>(io_detail::parse_int(parts[i], "outliers")) - 1);
  }

  std::map<int, Vector> outlier_coefs;
  while (std::getline(in, line)) {
    line = io_detail::strip_cr(line);
    if (line.empty()) continue;
    auto parts = io_detail::split(line, ' ');
    if (parts[0] == "outlier_coef") {
      if (static_cast<int>(parts.size()) != d + 2)
        fail(ErrorCode::ParseError, "outlier_coef has wrong arity");
      const int id = static_cast<int>(io_detail::parse_int(parts[1], "outlier id")) - 1;
      Vector coef(d);
      for (int r = 0; r < d; ++r)
        coef(r) = io_detail::parse_double(parts[static_cast<std::size_t>(r) + 2], "outlier coef");
      outlier_coefs[id] = std::move(coef);
    } else if (parts[0] == "trace") {
      for (std::size_t i = 1; i < parts.size(); ++i)
        if (!parts[i].empty())
          report.objective_trace.push_back(io_detail::parse_double(parts[i], "trace"));
    } else {
      fail(ErrorCode::ParseError, "unknown model section '" + std::string(parts[0]) + "'");
    }
  }

  StcmtlModel model(ClusterCoefs(std::move(u)),
                    Membership(std::move(v), std::move(pure), std::move(cluster_of_pure)),
                    std::move(report));
  model.outlier_coefs = std::move(outlier_coefs);
  return model;
}

// ---------------------------------------------------------------------------
// TSV emission
// ---------------------------------------------------------------------------

inline std::string metrics_tsv(const std::vector<std::pair<std::string, double>>& rows) {
  std::string s;
  for (const auto& [name, value] : rows) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    s += name + "\t" + buf + "\n";
  }
  return s;
}

inline std::string trace_tsv(const std::vector<double>& trace) {
  std::string s = "iteration\tobjective\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    s += std::to_string(i + 1) + "\t" + io_detail::format_double(trace[i]) + "\n";
  return s;
}

inline std::string kcurve_tsv(const std::vector<std::pair<int, double>>& curve) {
  std::string s = "k\trmse\n";
  for (const auto& [k, r] : curve) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", r);
    s += std::to_string(k) + "\t" + buf + "\n";
  }
  return s;
}

/// Dense matrix as TSV (row per line).
inline std::string matrix_tsv(const Matrix& m) {
  std::string s;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c)
      s += (c ? "\t" : "") + io_detail::format_double(m(r, c));
    s += "\n";
  }
  return s;
}

inline Matrix read_matrix_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = io_detail::strip_cr(line);
    if (line.empty()) continue;
    auto parts = io_detail::split(line, '\t');
    std::vector<double> row;
    row.reserve(parts.size());
    for (const auto& p : parts)
      row.push_back(io_detail::parse_double(
          p, path.string() + ":" + std::to_string(lineno)));
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorCode::ParseError, "ragged rows in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::ParseError, "empty matrix file " + path.string());
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c)
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return m;
}

}  // namespace stcmtl

#endif  // STCMTL_IO_HPP

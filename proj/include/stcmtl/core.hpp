// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0

#ifndef STCMTL_CORE_HPP
#define STCMTL_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace stcmtl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Loss { Squared, Logistic };

/// Error taxonomy shared by all modules. Data errors map to CLI exit code 2,
/// numeric errors to exit code 3.
enum class ErrorCode {
  ShapeMismatch,
  EmptyProblem,
  BadLabels,
  LengthMismatch,
  TooFewRows,
  ParseError,
  MissingTruth,
  IoError,
  BadSpec,
  InvalidValue,
  NonFinite,
  EmptyCluster,
  SingularBasis,
  RankDeficient,
  AllOutliers,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

  /// True for failures of the numeric pipeline (as opposed to bad input).
  bool numeric() const {
    switch (code_) {
      case ErrorCode::NonFinite:
      case ErrorCode::EmptyCluster:
      case ErrorCode::SingularBasis:
      case ErrorCode::RankDeficient:
      case ErrorCode::AllOutliers:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

// ---------------------------------------------------------------------------
// Seeded RNG streams.
//
// Every stochastic choice draws from a stream identified by (seed, name,
// counters), so adding a consumer never perturbs existing ones.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view name,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream name
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  h = splitmix64(h ^ splitmix64(seed));
  h = splitmix64(h ^ splitmix64(a ^ 0x517cc1b727220a95ULL));
  h = splitmix64(h ^ splitmix64(b ^ 0x2545f4914f6cdd1dULL));
  return h;
}

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::string_view name,
                                  std::uint64_t a = 0, std::uint64_t b = 0) {
  return std::mt19937_64(stream_seed(seed, name, a, b));
}

// ---------------------------------------------------------------------------
// Parallel helper. Work items must be independent and write disjoint slots;
// results are then deterministic regardless of scheduling. Thread count is
// capped by the STCMTL_THREADS environment variable.
// ---------------------------------------------------------------------------

inline int max_threads() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("STCMTL_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1 && v < 1024) hw = std::min<long>(hw, v);
  }
  return hw;
}

template <class F>
void parallel_for(int n, F&& body) {
  int nt = std::min(max_threads(), n);
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::exception_ptr err;
  std::mutex err_mu;
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// Small numeric utilities.
// ---------------------------------------------------------------------------

/// Proximal operator of the l1 norm: sign(z) * max(|z| - t, 0). Requires t >= 0.
inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// Linear-interpolation ("type 7") sample quantile of an unsorted vector.
inline double quantile_type7(std::vector<double> xs, double q) {
  if (xs.empty()) fail(ErrorCode::InvalidValue, "quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  if (xs.size() == 1) return xs[0];
  double h = q * static_cast<double>(xs.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= xs.size()) return xs.back();
  double frac = h - static_cast<double>(lo);
  return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace stcmtl

#endif  // STCMTL_CORE_HPP

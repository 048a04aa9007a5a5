// Copyright 2026 the stcmtl authors
// SPDX-License-Identifier: Apache-2.0
//
// Semisoft clustering of task coefficient columns: similarity, purity
// scoring, pure-task selection via K-means on the spectral embedding, and
// membership recovery V = A Theta.

#ifndef STCMTL_SOUP_HPP
#define STCMTL_SOUP_HPP

#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "stcmtl/core.hpp"
#include "stcmtl/spectral.hpp"
#include "stcmtl/types.hpp"

namespace stcmtl {

/// Symmetric task similarity S = W^T W.
struct SimilarityMatrix {
  Matrix s;  // T x T
};

/// Rows are the top-K eigenvectors of S; eigenvalues sorted descending.
struct SpectralBasis {
  Matrix theta;       // K x T
  Vector eigenvalues; // K, descending
};

/// Purity-ranked pure-task set with K-means cluster labels.
struct PureTaskSelection {
  Vector scores;               // all T purity scores
  std::vector<int> pure_set;   // sorted ascending task indices
  std::vector<int> labels;     // cluster id per pure_set entry
};

inline SimilarityMatrix similarity(const CoefMatrix& w) {
  Matrix s;
  s.noalias() = w.w.transpose() * w.w;
  s = 0.5 * (s + s.transpose());
  return {std::move(s)};
}

inline SpectralBasis spectral_basis(const SimilarityMatrix& sim, int k) {
  const int t = static_cast<int>(sim.s.rows());
  if (k < 1 || k > t) fail(ErrorCode::ShapeMismatch, "need 1 <= K <= T");
  auto eig = jacobi_eigensolver(sim.s);
  SpectralBasis b;
  b.theta = eig.eigenvectors.leftCols(k).transpose();
  b.eigenvalues = eig.eigenvalues.head(k);
  return b;
}

/// Purity score per task: the mean of the ceil(epsilon*T) largest
/// cosine-normalized off-diagonal similarities in the task's row,
/// cos(i,j) = S_ij / sqrt(S_ii S_jj). Pure tasks sit inside dense similarity
/// blocks of near-duplicate directions, so their top-neighbor cosines
/// approach 1; mixed columns point strictly between cluster directions and
/// score lower. (Normalizing by S_ii alone would instead reward mixed tasks,
/// whose convex-combination columns have smaller norms.)
inline Vector purity_scores(const SimilarityMatrix& sim, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    fail(ErrorCode::InvalidValue, "epsilon must be in (0,1]");
  const int t = static_cast<int>(sim.s.rows());
  const int m = std::min(t - 1, static_cast<int>(std::ceil(epsilon * t)));
  Vector scores = Vector::Zero(t);
  if (m < 1) return scores;  // T == 1: no neighbors
  std::vector<double> row;
  row.reserve(static_cast<std::size_t>(t - 1));
  for (int i = 0; i < t; ++i) {
    const double self = sim.s(i, i);
    if (self < 1e-12) {
      scores(i) = 0.0;
      continue;
    }
    row.clear();
    for (int j = 0; j < t; ++j) {
      if (j == i) continue;
      const double other = sim.s(j, j);
      row.push_back(other < 1e-12 ? 0.0 : sim.s(i, j) / std::sqrt(self * other));
    }
    std::nth_element(row.begin(), row.begin() + (m - 1), row.end(),
                     std::greater<double>());
    double top = std::accumulate(row.begin(), row.begin() + m, 0.0);
    scores(i) = top / m;
  }
  return scores;
}

namespace detail {

struct KmeansResult {
  std::vector<int> labels;
  Matrix centroids;  // dim x k
  double inertia = 0.0;
};

// Lloyd iterations from a k-means++ start. Points are columns. Empty clusters
// are re-seeded with the point farthest from its centroid.
inline KmeansResult kmeans_once(const Matrix& pts, int k, std::mt19937_64& rng) {
  const int n = static_cast<int>(pts.cols());
  const int dim = static_cast<int>(pts.rows());
  KmeansResult res;
  res.centroids.resize(dim, k);

  // k-means++ seeding
  std::uniform_int_distribution<int> uni(0, n - 1);
  res.centroids.col(0) = pts.col(uni(rng));
  Vector d2 =
      (pts.colwise() - res.centroids.col(0)).colwise().squaredNorm().transpose();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    int pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> ur(0.0, total);
      double r = ur(rng);
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= r) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = uni(rng);
    }
    res.centroids.col(c) = pts.col(pick);
    for (int i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), (pts.col(i) - res.centroids.col(c)).squaredNorm());
  }

  res.labels.assign(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = (pts.col(i) - res.centroids.col(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double dd = (pts.col(i) - res.centroids.col(c)).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (res.labels[static_cast<std::size_t>(i)] != best) {
        res.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    Matrix sums = Matrix::Zero(dim, k);
    for (int i = 0; i < n; ++i) {
      sums.col(res.labels[static_cast<std::size_t>(i)]) += pts.col(i);
      ++count[static_cast<std::size_t>(res.labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) {
        res.centroids.col(c) = sums.col(c) / count[static_cast<std::size_t>(c)];
      } else {
        // farthest point from its own centroid takes over the empty cluster
        int far_i = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double dd =
              (pts.col(i) -
               res.centroids.col(res.labels[static_cast<std::size_t>(i)]))
                  .squaredNorm();
          if (dd > far_d) {
            far_d = dd;
            far_i = i;
          }
        }
        res.centroids.col(c) = pts.col(far_i);
        res.labels[static_cast<std::size_t>(far_i)] = c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
  }

  res.inertia = 0.0;
  for (int i = 0; i < n; ++i)
    res.inertia +=
        (pts.col(i) - res.centroids.col(res.labels[static_cast<std::size_t>(i)]))
            .squaredNorm();
  return res;
}

inline KmeansResult kmeans(const Matrix& pts, int k, std::uint64_t seed,
                           int restarts = 10) {
  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    auto rng = stream_rng(seed, "kmeans", static_cast<std::uint64_t>(r));
    auto cur = kmeans_once(pts, k, rng);
    if (cur.inertia < best.inertia) best = std::move(cur);  // tie -> lower restart
  }
  return best;
}

}  // namespace detail

/// Declares the top ceil(theta*T) tasks by purity score pure (ties broken by
/// lower index) and partitions them into k clusters by seeded K-means on
/// their K-dimensional spectral embeddings. Labels are canonicalized so that
/// cluster ids follow the order of first appearance by task index.
inline PureTaskSelection select_pure(const SpectralBasis& basis, const Vector& scores,
                                     double theta, int k, std::uint64_t seed) {
  const int t = static_cast<int>(scores.size());
  if (basis.theta.cols() != t) fail(ErrorCode::ShapeMismatch, "basis/scores size mismatch");
  if (!(theta > 0.0 && theta <= 1.0)) fail(ErrorCode::InvalidValue, "theta must be in (0,1]");
  const int m = std::min(t, static_cast<int>(std::ceil(theta * t)));
  if (m < k)
    fail(ErrorCode::EmptyCluster,
         "only " + std::to_string(m) + " pure tasks for " + std::to_string(k) + " clusters");

  std::vector<int> order(static_cast<std::size_t>(t));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });
  std::vector<int> pure(order.begin(), order.begin() + m);
  std::sort(pure.begin(), pure.end());

  Matrix pts(basis.theta.rows(), m);
  for (int i = 0; i < m; ++i) pts.col(i) = basis.theta.col(pure[static_cast<std::size_t>(i)]);

  auto km = detail::kmeans(pts, k, seed);
  std::vector<int> count(static_cast<std::size_t>(k), 0);
  for (int lab : km.labels) ++count[static_cast<std::size_t>(lab)];
  for (int c = 0; c < k; ++c)
    if (count[static_cast<std::size_t>(c)] == 0)
      fail(ErrorCode::EmptyCluster, "K-means produced an empty cluster");

  // canonical labels: order of first appearance over ascending task index
  std::vector<int> relabel(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (int i = 0; i < m; ++i) {
    int& r = relabel[static_cast<std::size_t>(km.labels[static_cast<std::size_t>(i)])];
    if (r < 0) r = next++;
  }
  PureTaskSelection sel;
  sel.scores = scores;
  sel.pure_set = std::move(pure);
  sel.labels.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    sel.labels[static_cast<std::size_t>(i)] =
        relabel[static_cast<std::size_t>(km.labels[static_cast<std::size_t>(i)])];
  return sel;
}

/// Recovers the full membership matrix from the pure-task one-hot block:
/// solves V_P = A Theta_P in least squares (ridge jitter 1e-10), extends to
/// V = A Theta, clamps negatives, renormalizes columns, and forces pure
/// columns exactly one-hot. A column that clamps to zero is assigned to the
/// cluster with the nearest pure-task centroid in embedding space.
inline Membership recover_membership(const SpectralBasis& basis,
                                     const PureTaskSelection& sel) {
  const int k = static_cast<int>(basis.theta.rows());
  const int t = static_cast<int>(basis.theta.cols());
  const int m = static_cast<int>(sel.pure_set.size());
  if (m < 1) fail(ErrorCode::EmptyCluster, "empty pure set");

  Matrix theta_p(k, m);
  Matrix v_p = Matrix::Zero(k, m);
  for (int i = 0; i < m; ++i) {
    theta_p.col(i) = basis.theta.col(sel.pure_set[static_cast<std::size_t>(i)]);
    v_p(sel.labels[static_cast<std::size_t>(i)], i) = 1.0;
  }

  Matrix gram = theta_p * theta_p.transpose();
  gram.diagonal().array() += 1e-10;
  Eigen::LDLT<Matrix> ldlt(gram);
  Matrix a = ldlt.solve(theta_p * v_p.transpose()).transpose();
  if (!all_finite(a)) fail(ErrorCode::SingularBasis, "pure-task basis is singular");

  Matrix v = a * basis.theta;

  // pure-cluster centroids in embedding space, for zero-column fallback
  Matrix centroid = Matrix::Zero(k, k);
  std::vector<int> ccount(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < m; ++i) {
    centroid.col(sel.labels[static_cast<std::size_t>(i)]) += theta_p.col(i);
    ++ccount[static_cast<std::size_t>(sel.labels[static_cast<std::size_t>(i)])];
  }
  for (int c = 0; c < k; ++c) {
    if (ccount[static_cast<std::size_t>(c)] == 0)
      fail(ErrorCode::EmptyCluster, "cluster without pure task");
    centroid.col(c) /= ccount[static_cast<std::size_t>(c)];
  }

  std::map<int, int> cluster_of_pure;
  for (int i = 0; i < m; ++i)
    cluster_of_pure[sel.pure_set[static_cast<std::size_t>(i)]] =
        sel.labels[static_cast<std::size_t>(i)];

  for (int col = 0; col < t; ++col) {
    auto it = cluster_of_pure.find(col);
    if (it != cluster_of_pure.end()) {
      v.col(col).setZero();
      v(it->second, col) = 1.0;
      continue;
    }
    for (int r = 0; r < k; ++r)
      if (v(r, col) < 0.0) v(r, col) = 0.0;
    const double sum = v.col(col).sum();
    if (sum <= 0.0) {
      int best = 0;
      double bd = (basis.theta.col(col) - centroid.col(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double dd = (basis.theta.col(col) - centroid.col(c)).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      v.col(col).setZero();
      v(best, col) = 1.0;
    } else {
      v.col(col) /= sum;
      for (int r = 0; r < k; ++r)
        if (v(r, col) > 1.0) v(r, col) = 1.0;
    }
  }

  return Membership(std::move(v), sel.pure_set, std::move(cluster_of_pure));
}

/// Full SOUP pass over a coefficient matrix: similarity, spectral basis,
/// purity scores, pure-task selection, membership recovery.
inline Membership soup_membership(const CoefMatrix& w, int k, double theta,
                                  double epsilon, std::uint64_t seed) {
  auto sim = similarity(w);
  auto basis = spectral_basis(sim, k);
  auto scores = purity_scores(sim, epsilon);
  auto sel = select_pure(basis, scores, theta, k, seed);
  return recover_membership(basis, sel);
}

}  // namespace stcmtl

#endif  // STCMTL_SOUP_HPP

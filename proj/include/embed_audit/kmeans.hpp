// Copyright 2026 The embed-audit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "embed_audit/errors.hpp"
#include "embed_audit/rng.hpp"
#include "embed_audit/tensor.hpp"

namespace embed_audit {

namespace detail {

inline double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

}  // namespace detail

struct KmeansResult {
  std::vector<int> assignments;
  Tensor centroids;  // [k, d]
  int iterations = 0;
  // Within-cluster squared distance evaluated at each assignment step;
  // non-increasing across Lloyd iterations.
  std::vector<double> inertia_history;
  double inertia = 0.0;
};

inline int nearest_centroid(const double* x, const Tensor& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = detail::squared_distance(x, centroids.row_ptr(c), centroids.cols());
    if (d < best_d) {  // ties resolve to the lowest index
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

// Lloyd iterations with seeded k-means++ initialization. Runs to an
// assignment fixed point or the iteration cap; deterministic for a fixed
// seed. Empty clusters are re-seeded with the point farthest from its
// current centroid.
inline KmeansResult kmeans(const Tensor& points, int k, std::uint64_t seed,
                           int max_iterations = 300) {
  check_arg(points.shape.size() == 2, "kmeans: points must be [n, d]");
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  check_arg(k >= 1, "kmeans: k must be positive");
  check_arg(static_cast<std::size_t>(k) <= n, "kmeans: k must not exceed the number of points");

  Rng rng = Rng(seed).stream("kmeans-init");
  Tensor centroids({static_cast<std::size_t>(k), d});

  // k-means++: first center uniform, then D^2-weighted sampling.
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng.uniform_int(n));
  std::copy_n(points.row_ptr(first), d, centroids.row_ptr(0));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dist = detail::squared_distance(points.row_ptr(i), centroids.row_ptr(c - 1), d);
      min_d2[i] = std::min(min_d2[i], dist);
      total += min_d2[i];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = static_cast<std::size_t>(rng.uniform_int(n));
    } else {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= min_d2[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
        pick = i;  // numeric tail falls through to the last point
      }
    }
    std::copy_n(points.row_ptr(pick), d, centroids.row_ptr(static_cast<std::size_t>(c)));
  }

  KmeansResult result;
  result.assignments.assign(n, -1);
  std::vector<int> prev(n, -1);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k));

  for (int iter = 0; iter < max_iterations; ++iter) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = nearest_centroid(points.row_ptr(i), centroids);
      result.assignments[i] = c;
      inertia += detail::squared_distance(points.row_ptr(i),
                                          centroids.row_ptr(static_cast<std::size_t>(c)), d);
    }
    result.inertia_history.push_back(inertia);
    result.inertia = inertia;
    result.iterations = iter + 1;
    if (result.assignments == prev) break;
    prev = result.assignments;

    centroids.fill(0.0);
    std::fill(counts.begin(), counts.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.assignments[i]);
      double* cent = centroids.row_ptr(c);
      const double* x = points.row_ptr(i);
      for (std::size_t j = 0; j < d; ++j) cent[j] += x[j];
      ++counts[c];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] == 0) continue;
      double* cent = centroids.row_ptr(c);
      for (std::size_t j = 0; j < d; ++j) cent[j] /= static_cast<double>(counts[c]);
    }
    // Re-seed any empty cluster with the point farthest from its centroid.
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto a = static_cast<std::size_t>(result.assignments[i]);
        if (counts[a] <= 1) continue;  // keep donor clusters non-empty
        const double dist = detail::squared_distance(points.row_ptr(i), centroids.row_ptr(a), d);
        if (dist > far_d) {
          far_d = dist;
          far = i;
        }
      }
      const auto donor = static_cast<std::size_t>(result.assignments[far]);
      --counts[donor];
      counts[c] = 1;
      result.assignments[far] = static_cast<int>(c);
      std::copy_n(points.row_ptr(far), d, centroids.row_ptr(c));
    }
  }

  result.centroids = centroids;
  return result;
}

// Minimum-cost perfect assignment on a square matrix (Hungarian algorithm,
// potential form, O(n^3)). Returns row -> column.
inline std::vector<int> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  check_arg(n > 0, "min_cost_assignment: empty matrix");
  for (const auto& row : cost)
    check_arg(static_cast<int>(row.size()) == n, "min_cost_assignment: matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] > 0)
      row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

// Best-permutation agreement between cluster ids and reference labels: the
// fraction of samples whose cluster maps to their label under the optimal
// one-to-one cluster -> label matching.
inline double cluster_label_agreement(const std::vector<int>& clusters,
                                      const std::vector<int>& labels) {
  check_arg(clusters.size() == labels.size() && !clusters.empty(),
            "cluster_label_agreement: inputs must align and be non-empty");
  int k = 0, c_max = 0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    check_arg(clusters[i] >= 0 && labels[i] >= 0, "cluster_label_agreement: ids must be >= 0");
    k = std::max(k, clusters[i] + 1);
    c_max = std::max(c_max, labels[i] + 1);
  }
  const int m = std::max(k, c_max);
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(m),
                                        std::vector<double>(static_cast<std::size_t>(m), 0.0));
  for (std::size_t i = 0; i < clusters.size(); ++i)
    cost[static_cast<std::size_t>(clusters[i])][static_cast<std::size_t>(labels[i])] -= 1.0;
  const std::vector<int> match = min_cost_assignment(cost);
  double agreed = 0.0;
  for (int c = 0; c < m; ++c) agreed -= cost[static_cast<std::size_t>(c)][static_cast<std::size_t>(match[static_cast<std::size_t>(c)])];
  return agreed / static_cast<double>(clusters.size());
}

}  // namespace embed_audit

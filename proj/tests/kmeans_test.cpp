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

#include <algorithm>

#include <gtest/gtest.h>

#include "embed_audit/kmeans.hpp"
#include "embed_audit/rng.hpp"

namespace embed_audit {
namespace {

TEST(Kmeans, SeparatedPairsFormTwoClusters) {
  Tensor points({4, 2}, {0.0, 0.0, 0.1, 0.0, 10.0, 10.0, 10.1, 10.0});
  const auto result = kmeans(points, 2, 1);
  EXPECT_EQ(result.assignments[0], result.assignments[1]);
  EXPECT_EQ(result.assignments[2], result.assignments[3]);
  EXPECT_NE(result.assignments[0], result.assignments[2]);
}

TEST(Kmeans, KOneGivesCoordinateWiseMean) {
  Tensor points({3, 2}, {0.0, 0.0, 3.0, 3.0, 6.0, 0.0});
  const auto result = kmeans(points, 1, 9);
  for (int a : result.assignments) EXPECT_EQ(a, 0);
  EXPECT_NEAR(result.centroids(0, 0), 3.0, 1e-12);
  EXPECT_NEAR(result.centroids(0, 1), 1.0, 1e-12);
}

TEST(Kmeans, KEqualsNGivesZeroInertia) {
  Rng rng(4);
  Tensor points({6, 3});
  for (auto& v : points.data) v = rng.normal();
  const auto result = kmeans(points, 6, 2);
  EXPECT_NEAR(result.inertia, 0.0, 1e-18);
  std::vector<int> sorted = result.assignments;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 6; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
}

TEST(Kmeans, InvalidKRejected) {
  Tensor points({3, 2});
  EXPECT_THROW(kmeans(points, 0, 1), std::invalid_argument);
  EXPECT_THROW(kmeans(points, -2, 1), std::invalid_argument);
  EXPECT_THROW(kmeans(points, 4, 1), std::invalid_argument);
}

TEST(Kmeans, DeterministicForFixedSeed) {
  Rng rng(8);
  Tensor points({80, 4});
  for (auto& v : points.data) v = rng.normal();
  const auto a = kmeans(points, 5, 1234);
  const auto b = kmeans(points, 5, 1234);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.centroids.data, b.centroids.data);
  EXPECT_EQ(a.inertia_history, b.inertia_history);
}

TEST(Kmeans, InertiaNonIncreasingAcrossLloydIterations) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Tensor points({120, 3});
    for (auto& v : points.data) v = rng.normal() + (rng.uniform() < 0.5 ? 2.0 : -2.0);
    const auto result = kmeans(points, 4, seed * 31 + 7);
    for (std::size_t i = 1; i < result.inertia_history.size(); ++i)
      EXPECT_LE(result.inertia_history[i], result.inertia_history[i - 1] + 1e-9)
          << "seed " << seed << " iteration " << i;
  }
}

TEST(Kmeans, AssignmentsInRange) {
  Rng rng(2);
  Tensor points({50, 2});
  for (auto& v : points.data) v = rng.uniform();
  const auto result = kmeans(points, 7, 5);
  for (int a : result.assignments) {
    EXPECT_GE(a, 0);
    EXPECT_LT(a, 7);
  }
}

// Exhaustive permutation oracle for the Hungarian-based agreement score.
double brute_force_agreement(const std::vector<int>& clusters, const std::vector<int>& labels,
                             int m) {
  std::vector<int> perm(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
  double best = 0.0;
  do {
    double agreed = 0.0;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      if (perm[static_cast<std::size_t>(clusters[i])] == labels[i]) agreed += 1.0;
    best = std::max(best, agreed);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(clusters.size());
}

TEST(ClusterLabelAgreement, MatchesExhaustiveOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform_int(4));  // up to 5 ids
    const int n = 10 + static_cast<int>(rng.uniform_int(30));
    std::vector<int> clusters, labels;
    for (int i = 0; i < n; ++i) {
      clusters.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(m))));
      labels.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(m))));
    }
    // Ensure every id appears so that both sides span [0, m).
    for (int i = 0; i < m; ++i) {
      clusters[static_cast<std::size_t>(i)] = i;
      labels[static_cast<std::size_t>(n - 1 - i)] = i;
    }
    EXPECT_NEAR(cluster_label_agreement(clusters, labels),
                brute_force_agreement(clusters, labels, m), 1e-12)
        << "trial " << trial;
  }
}

TEST(ClusterLabelAgreement, PerfectPermutedLabeling) {
  std::vector<int> clusters = {2, 0, 1, 2, 0, 1};
  std::vector<int> labels = {0, 1, 2, 0, 1, 2};
  EXPECT_EQ(cluster_label_agreement(clusters, labels), 1.0);
}

}  // namespace
}  // namespace embed_audit

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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "embed_audit/errors.hpp"

namespace embed_audit {

struct RocCurve {
  // (false positive rate, true positive rate), non-decreasing in FPR,
  // starting at (0,0) and ending at (1,1). Tied scores share one point, so
  // ties appear as diagonal segments.
  std::vector<std::pair<double, double>> points;
  double auc = 0.0;
};

// Mann-Whitney AUC with half credit for ties: the exact probability that a
// random positive outscores a random negative, plus half the tie mass.
// Computed via average ranks; equals pairwise counting exactly.
inline RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_arg(scores.size() == labels.size(), "roc_auc: scores and labels must align");
  check_arg(!scores.empty(), "roc_auc: empty input");
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    check_arg(labels[i] == 0 || labels[i] == 1, "roc_auc: labels must be 0 or 1");
    check_arg(std::isfinite(scores[i]), "roc_auc: scores must be finite");
    if (labels[i] == 1)
      ++n_pos;
    else
      ++n_neg;
  }
  check_arg(n_pos > 0 && n_neg > 0, "roc_auc: need at least one positive and one negative label");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return a < b;  // stable tie-break for determinism
  });

  // Rank sum of positives with average ranks over tie groups. All ranks are
  // multiples of 0.5, so the sum is exact in f64.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  const double p = static_cast<double>(n_pos);
  const double u = rank_sum_pos - p * (p + 1.0) / 2.0;

  RocCurve curve;
  curve.auc = u / (p * static_cast<double>(n_neg));

  // Threshold sweep from +inf down; one point per distinct score.
  curve.points.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0;
  std::size_t k = order.size();
  while (k > 0) {
    std::size_t j = k;
    const double s = scores[order[k - 1]];
    while (j > 0 && scores[order[j - 1]] == s) {
      if (labels[order[j - 1]] == 1)
        ++tp;
      else
        ++fp;
      --j;
    }
    curve.points.emplace_back(static_cast<double>(fp) / static_cast<double>(n_neg),
                              static_cast<double>(tp) / static_cast<double>(n_pos));
    k = j;
  }
  return curve;
}

// Trapezoidal area under the curve points; used to cross-check `auc`.
inline double trapezoid_area(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& [x0, y0] = curve.points[i - 1];
    const auto& [x1, y1] = curve.points[i];
    area += (x1 - x0) * (y0 + y1) / 2.0;
  }
  return area;
}

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  // Set when the prediction was empty and precision defaulted to 1.0.
  bool degenerate_empty_prediction = false;
};

inline PrecisionRecall set_precision_recall(const std::set<int>& predicted,
                                            const std::set<int>& truth) {
  check_arg(!truth.empty(), "set_precision_recall: truth set must be non-empty");
  std::size_t hit = 0;
  for (int t : predicted)
    if (truth.count(t)) ++hit;
  PrecisionRecall pr;
  if (predicted.empty()) {
    pr.precision = 1.0;
    pr.degenerate_empty_prediction = true;
  } else {
    pr.precision = static_cast<double>(hit) / static_cast<double>(predicted.size());
  }
  pr.recall = static_cast<double>(hit) / static_cast<double>(truth.size());
  return pr;
}

inline double set_f1(const PrecisionRecall& pr) {
  const double s = pr.precision + pr.recall;
  return s > 0.0 ? 2.0 * pr.precision * pr.recall / s : 0.0;
}

inline double mean(const std::vector<double>& v) {
  check_arg(!v.empty(), "mean: empty input");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
  check_arg(!v.empty(), "median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace embed_audit

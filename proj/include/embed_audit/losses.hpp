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

#include <cmath>
#include <cstddef>
#include <vector>

#include "embed_audit/errors.hpp"
#include "embed_audit/tensor.hpp"

namespace embed_audit {

// In-place softmax; max is subtracted for numerical stability.
inline void softmax_inplace(double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - m);
    sum += x[i];
  }
  for (std::size_t i = 0; i < n; ++i) x[i] /= sum;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> p = logits;
  softmax_inplace(p.data(), p.size());
  return p;
}

// Negative log-softmax of the true class, computed without forming the
// softmax (stable for saturated logits).
inline double cross_entropy_one(const double* logits, std::size_t n, int label) {
  check_arg(label >= 0 && static_cast<std::size_t>(label) < n,
            "cross_entropy_one: label out of range");
  double m = logits[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, logits[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(logits[i] - m);
  return std::log(sum) - (logits[static_cast<std::size_t>(label)] - m);
}

struct LossAndGrad {
  double loss = 0.0;
  Tensor grad;  // d(loss)/d(logits), same shape as the logits
};

// Mean cross-entropy over a batch of logits [batch, C] with integer labels.
inline LossAndGrad softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  check_arg(logits.shape.size() == 2, "softmax_cross_entropy: logits must be [batch, C]");
  const std::size_t batch = logits.rows();
  const std::size_t classes = logits.cols();
  check_arg(labels.size() == batch, "softmax_cross_entropy: one label per row required");

  LossAndGrad out;
  out.grad = Tensor(logits.shape);
  double total = 0.0;
  std::vector<double> p(classes);
  for (std::size_t i = 0; i < batch; ++i) {
    const int y = labels[i];
    check_arg(y >= 0 && static_cast<std::size_t>(y) < classes,
              "softmax_cross_entropy: label out of range");
    const double* row = logits.row_ptr(i);
    for (std::size_t c = 0; c < classes; ++c) p[c] = row[c];
    softmax_inplace(p.data(), classes);
    total += cross_entropy_one(row, classes, y);
    double* g = out.grad.row_ptr(i);
    for (std::size_t c = 0; c < classes; ++c) g[c] = p[c] / static_cast<double>(batch);
    g[static_cast<std::size_t>(y)] -= 1.0 / static_cast<double>(batch);
  }
  out.loss = total / static_cast<double>(batch);
  return out;
}

// Cross-entropy of one sample against a soft target distribution, with the
// student softmax taken at temperature T. Gradient is w.r.t. the raw logits.
inline double soft_cross_entropy_one(const double* logits, const double* target,
                                     std::size_t n, double temperature, double* grad_logits) {
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = logits[i] / temperature;
  softmax_inplace(p.data(), n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (target[i] > 0.0) loss -= target[i] * std::log(std::max(p[i], 1e-300));
    if (grad_logits) grad_logits[i] = (p[i] - target[i]) / temperature;
  }
  return loss;
}

}  // namespace embed_audit

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

#include "embed_audit/errors.hpp"
#include "embed_audit/tensor.hpp"

namespace embed_audit {

// Adam with bias correction. Moments start at zero; step_count increases by
// one per step.
struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-3;

  AdamState() = default;

  explicit AdamState(const std::vector<std::size_t>& shape, double lr = 1e-3,
                     double b1 = 0.9, double b2 = 0.999, double eps = 1e-8)
      : first_moment(shape),
        second_moment(shape),
        beta1(b1),
        beta2(b2),
        epsilon(eps),
        learning_rate(lr) {
    check_arg(b1 > 0.0 && b1 < 1.0, "AdamState: beta1 must be in (0,1)");
    check_arg(b2 > 0.0 && b2 < 1.0, "AdamState: beta2 must be in (0,1)");
    check_arg(eps > 0.0, "AdamState: epsilon must be positive");
    check_arg(lr > 0.0, "AdamState: learning_rate must be positive");
  }

  // Drops accumulated moments but keeps the hyperparameters.
  void reset_moments() {
    first_moment.fill(0.0);
    second_moment.fill(0.0);
    step_count = 0;
  }
};

inline Tensor& adam_step(Tensor& params, const Tensor& grads, AdamState& state) {
  check_arg(params.same_shape(grads) && params.same_shape(state.first_moment),
            "adam_step: params, grads and state moments must share one shape");
  state.step_count += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads.data[i];
    double& m = state.first_moment.data[i];
    double& v = state.second_moment.data[i];
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    params.data[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
  return params;
}

inline void sgd_step(Tensor& params, const Tensor& grads, double learning_rate) {
  check_arg(params.same_shape(grads), "sgd_step: params and grads must share one shape");
  for (std::size_t i = 0; i < params.size(); ++i)
    params.data[i] -= learning_rate * grads.data[i];
}

}  // namespace embed_audit

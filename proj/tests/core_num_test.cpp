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

#include <cmath>

#include <gtest/gtest.h>

#include "embed_audit/losses.hpp"
#include "embed_audit/optim.hpp"
#include "embed_audit/rng.hpp"
#include "embed_audit/tensor.hpp"

namespace embed_audit {
namespace {

TEST(Rng, StreamsAreIndependentAndDeterministic) {
  Rng a(42);
  Rng b(42);
  EXPECT_EQ(a.stream("x").next_u64(), b.stream("x").next_u64());
  EXPECT_NE(Rng(42).stream("x").next_u64(), Rng(42).stream("y").next_u64());
  EXPECT_NE(Rng(42).next_u64(), Rng(43).next_u64());
}

TEST(Rng, UniformInRangeNormalHasMoments) {
  Rng rng(7);
  double sum = 0.0, sum2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.03);
  EXPECT_NEAR(sum2 / n, 1.0, 0.05);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(3);
  auto p = rng.permutation(100);
  std::vector<char> seen(100, 0);
  for (int v : p) {
    ASSERT_GE(v, 0);
    ASSERT_LT(v, 100);
    seen[static_cast<std::size_t>(v)] = 1;
  }
  for (char s : seen) EXPECT_TRUE(s);
}

TEST(Tensor, ShapeInvariant) {
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_THROW(Tensor({2, 3}, {1.0, 2.0}), std::invalid_argument);
  t(1, 2) = 5.0;
  EXPECT_EQ(t.data[5], 5.0);
  EXPECT_TRUE(t.all_finite());
  t[0] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Adam, ZeroGradientIsAFixedPointForAnyStepCount) {
  Tensor params({3}, {1.0, -2.0, 0.5});
  const Tensor snapshot = params;
  AdamState state(params.shape, 0.1);
  Tensor zero({3});
  for (int step = 0; step < 50; ++step) adam_step(params, zero, state);
  EXPECT_EQ(params.data, snapshot.data);
  EXPECT_EQ(state.step_count, 50);
}

// Bias-corrected first step with g = 1: m_hat = 1, v_hat = 1, so the update
// is lr / (1 + eps).
TEST(Adam, HandEvaluatedFirstStep) {
  Tensor params({1}, {0.0});
  Tensor grads({1}, {1.0});
  AdamState state(params.shape, 1e-3);
  adam_step(params, grads, state);
  EXPECT_LT(std::abs(params[0] + 1e-3), 1e-6);
  EXPECT_EQ(state.step_count, 1);
}

TEST(Adam, MinimizesScalarQuadratic) {
  Tensor x({1}, {1.0});
  AdamState state(x.shape, 1e-3);
  Tensor grad({1});
  for (int i = 0; i < 5000; ++i) {
    grad[0] = 2.0 * x[0];  // d/dx x^2
    adam_step(x, grad, state);
  }
  EXPECT_LT(std::abs(x[0]), 0.01);
}

TEST(Adam, ShapeMismatchRejected) {
  Tensor params({2});
  Tensor grads({3});
  AdamState state(params.shape);
  EXPECT_THROW(adam_step(params, grads, state), std::invalid_argument);
}

TEST(Adam, InvalidHyperparametersRejected) {
  EXPECT_THROW(AdamState({1}, 1e-3, 1.0), std::invalid_argument);
  EXPECT_THROW(AdamState({1}, 1e-3, 0.9, 0.999, 0.0), std::invalid_argument);
  EXPECT_THROW(AdamState({1}, 0.0), std::invalid_argument);
}

TEST(SoftmaxCrossEntropy, UniformLogits) {
  Tensor logits({1, 4});
  const auto out = softmax_cross_entropy(logits, {2});
  EXPECT_NEAR(out.loss, std::log(4.0), 1e-12);
}

TEST(SoftmaxCrossEntropy, TwoClassClosedForm) {
  Tensor logits({1, 2}, {1.0, 0.0});
  const auto out = softmax_cross_entropy(logits, {0});
  EXPECT_NEAR(out.loss, std::log(1.0 + std::exp(-1.0)), 1e-12);
}

TEST(SoftmaxCrossEntropy, SaturatedLogitsVanishingLoss) {
  Tensor logits({1, 2}, {50.0, 0.0});
  const auto out = softmax_cross_entropy(logits, {0});
  EXPECT_LT(out.loss, 1e-8);
}

TEST(SoftmaxCrossEntropy, LabelOutOfRangeRejected) {
  Tensor logits({1, 3});
  EXPECT_THROW(softmax_cross_entropy(logits, {3}), std::invalid_argument);
  EXPECT_THROW(softmax_cross_entropy(logits, {-1}), std::invalid_argument);
}

// Central finite differences on random 5x4 logits; the analytic gradient
// must match within 1e-6 relative error.
TEST(SoftmaxCrossEntropy, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  Tensor logits({5, 4});
  for (auto& v : logits.data) v = rng.normal();
  std::vector<int> labels = {0, 3, 1, 2, 2};
  const auto out = softmax_cross_entropy(logits, labels);
  const double h = 1e-6;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    Tensor plus = logits, minus = logits;
    plus.data[i] += h;
    minus.data[i] -= h;
    const double fd = (softmax_cross_entropy(plus, labels).loss -
                       softmax_cross_entropy(minus, labels).loss) /
                      (2.0 * h);
    const double scale = std::max({std::abs(fd), std::abs(out.grad.data[i]), 1e-8});
    EXPECT_LT(std::abs(fd - out.grad.data[i]) / scale, 1e-6) << "coordinate " << i;
  }
}

}  // namespace
}  // namespace embed_audit

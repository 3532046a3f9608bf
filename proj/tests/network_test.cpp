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
#include <filesystem>

#include <gtest/gtest.h>

#include "embed_audit/dataset.hpp"
#include "embed_audit/metrics.hpp"
#include "embed_audit/network.hpp"

namespace embed_audit {
namespace {

std::vector<int> iota_idx(std::size_t n) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  return idx;
}

TEST(Mlp, DepthZeroIsIdentityTap) {
  Mlp model({5, 8, 3}, Activation::kTanh, 1);
  std::vector<double> x = {0.1, -0.2, 0.3, 0.4, -0.5};
  EXPECT_EQ(model.embed_one(x.data(), 0), x);
}

// Architecture template from the tabular experiments: hidden widths
// [1024, 512, 256] over 100 classes; depth 2 taps the 512-wide layer.
TEST(Mlp, PaperArchitectureTapWidths) {
  Mlp model({600, 1024, 512, 256, 100}, Activation::kTanh, 2);
  std::vector<double> x(600, 0.1);
  EXPECT_EQ(model.embed_one(x.data(), 2).size(), 512u);
  EXPECT_EQ(model.embed_one(x.data(), 1).size(), 1024u);
  EXPECT_EQ(model.embed_one(x.data(), 4).size(), 100u);
}

TEST(Mlp, EmbeddingsAreDeterministic) {
  Mlp model({6, 16, 8, 4}, Activation::kRelu, 3);
  Rng rng(5);
  std::vector<double> x(6);
  for (auto& v : x) v = rng.normal();
  for (int depth = 0; depth <= 3; ++depth)
    EXPECT_EQ(model.embed_one(x.data(), depth), model.embed_one(x.data(), depth));
}

TEST(Mlp, DepthOutOfRangeRejected) {
  Mlp model({4, 8, 2}, Activation::kTanh, 1);
  std::vector<double> x(4, 0.5);
  EXPECT_THROW(model.embed_one(x.data(), 3), std::invalid_argument);
  EXPECT_THROW(model.embed_one(x.data(), -1), std::invalid_argument);
}

TEST(Mlp, ZeroWeightsPredictUniform) {
  Mlp model({7, 12, 5}, Activation::kTanh);  // zero-initialized
  std::vector<double> x = {1.0, 2.0, -1.0, 0.5, 0.0, 3.0, -2.0};
  const auto p = model.predict_vector_one(x.data());
  for (double v : p) EXPECT_NEAR(v, 0.2, 1e-15);
}

TEST(Mlp, PredictVectorRowsSumToOne) {
  Mlp model({10, 24, 12, 6}, Activation::kTanh, 9);
  Rng rng(17);
  Tensor X({100, 10});
  for (auto& v : X.data) v = rng.normal();
  const Tensor probs = model.predict_vector(X);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      EXPECT_GE(probs(i, c), 0.0);
      sum += probs(i, c);
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Mlp, ArgmaxOfPredictVectorMatchesLogits) {
  Mlp model({8, 16, 4}, Activation::kRelu, 11);
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(8);
    for (auto& v : x) v = rng.normal();
    const auto logits = model.embed_one(x.data(), 2);
    const auto probs = model.predict_vector_one(x.data());
    std::size_t logit_arg = 0, prob_arg = 0;
    for (std::size_t c = 1; c < logits.size(); ++c) {
      if (logits[c] > logits[logit_arg]) logit_arg = c;
      if (probs[c] > probs[prob_arg]) prob_arg = c;
    }
    EXPECT_EQ(logit_arg, prob_arg);
    EXPECT_EQ(static_cast<int>(logit_arg), model.predict_class_one(x.data()));
  }
}

TEST(Mlp, EmbedAtFinalDepthEqualsLogits) {
  Mlp model({6, 10, 3}, Activation::kTanh, 13);
  Rng rng(23);
  std::vector<double> x(6);
  for (auto& v : x) v = rng.uniform(-2.0, 2.0);
  const auto logits = model.embed_one(x.data(), model.num_layers());
  auto probs = logits;
  softmax_inplace(probs.data(), probs.size());
  EXPECT_EQ(model.predict_vector_one(x.data()), probs);
}

TEST(Mlp, PredictionLossUniformAndMonotone) {
  Mlp zero({5, 10}, Activation::kTanh);  // zero weights -> uniform softmax
  std::vector<double> x(5, 0.3);
  EXPECT_NEAR(zero.prediction_loss_one(x.data(), 3), std::log(10.0), 1e-12);

  // Raising the true-class logit with others fixed strictly lowers the loss.
  Mlp model({1, 4}, Activation::kTanh);
  std::vector<double> one = {1.0};
  double prev = model.prediction_loss_one(one.data(), 2);
  for (int step = 0; step < 5; ++step) {
    model.weights()[0](2, 0) += 0.5;
    const double cur = model.prediction_loss_one(one.data(), 2);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
  EXPECT_THROW(model.prediction_loss_one(one.data(), 4), std::invalid_argument);
}

TEST(Mlp, InputGradientMatchesFiniteDifferences) {
  Mlp model({6, 12, 8, 4}, Activation::kTanh, 29);
  Rng rng(31);
  std::vector<double> x(6);
  for (auto& v : x) v = rng.normal();
  for (int tap = 1; tap <= 3; ++tap) {
    // Scalar loss: 0.5 * ||embed(x, tap)||^2, so d(loss)/d(out) = out.
    const auto out = model.embed_one(x.data(), tap);
    const auto grad = model.input_gradient(x.data(), tap, out);
    const double h = 1e-6;
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      auto norm_half = [&](const std::vector<double>& v) {
        const auto e = model.embed_one(v.data(), tap);
        double s = 0.0;
        for (double u : e) s += u * u;
        return 0.5 * s;
      };
      const double fd = (norm_half(xp) - norm_half(xm)) / (2.0 * h);
      const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
      EXPECT_LT(std::abs(fd - grad[i]) / scale, 1e-5) << "tap " << tap << " coord " << i;
    }
  }
}

TEST(TrainTarget, UntrainedModelSitsAtChance) {
  const auto ds = gen_property_blobs(400, 10, 4, {}, 1.0, 41);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 1;
  const auto idx = iota_idx(ds.size());
  const auto [model, report] = train_target(ds, idx, idx, {10, 16, 8, 4}, Activation::kTanh, cfg);
  EXPECT_NEAR(report.train_accuracy, 0.25, 0.1);
  EXPECT_TRUE(report.epoch_loss.empty());
}

TEST(TrainTarget, SeparableBlobsReachHighTrainAccuracy) {
  const auto ds = gen_property_blobs(600, 12, 3, {}, 0.05, 43);
  std::vector<int> train_idx, test_idx;
  for (std::size_t i = 0; i < ds.size(); ++i)
    (i < 400 ? train_idx : test_idx).push_back(static_cast<int>(i));
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 5e-3;
  cfg.seed = 2;
  const auto [model, report] =
      train_target(ds, train_idx, test_idx, {12, 24, 12, 3}, Activation::kTanh, cfg);
  EXPECT_GE(report.train_accuracy, 0.99);
  EXPECT_GE(report.test_accuracy, 0.95);
  EXPECT_EQ(report.overfit_gap, report.train_accuracy - report.test_accuracy);
}

// Overfitting recipe: few samples per class, many epochs, no
// regularization. The resulting gap powers the loss-based attacks.
TEST(TrainTarget, OverfitRecipeProducesGapAndLossSignal) {
  const auto ds = gen_purchase_like(900, 48, 50, 0.3, 47);
  const auto split = split_membership(ds, 0.5, 0.5, 47);
  TrainConfig cfg;
  cfg.epochs = 120;
  cfg.learning_rate = 2e-3;
  cfg.seed = 3;
  const auto [model, report] = train_target(ds, split.member_indices, split.nonmember_indices,
                                            {48, 64, 48, 32, 50}, Activation::kTanh, cfg);
  EXPECT_GE(report.overfit_gap, 0.10);

  const auto member_losses =
      per_sample_losses(model, ds.features, ds.labels, split.attack_eval_members);
  const auto nonmember_losses =
      per_sample_losses(model, ds.features, ds.labels, split.attack_eval_nonmembers);
  EXPECT_LT(mean(member_losses), mean(nonmember_losses));
}

TEST(TrainTarget, TrainingIsSeedDeterministic) {
  const auto ds = gen_purchase_like(300, 20, 5, 0.2, 53);
  const auto idx = iota_idx(200);
  std::vector<int> test_idx;
  for (int i = 200; i < 300; ++i) test_idx.push_back(i);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.seed = 9;
  const auto [m1, r1] = train_target(ds, idx, test_idx, {20, 16, 5}, Activation::kRelu, cfg);
  const auto [m2, r2] = train_target(ds, idx, test_idx, {20, 16, 5}, Activation::kRelu, cfg);
  EXPECT_EQ(r1.epoch_loss, r2.epoch_loss);
  EXPECT_EQ(r1.train_accuracy, r2.train_accuracy);
  for (std::size_t l = 0; l < m1.weights().size(); ++l)
    EXPECT_EQ(m1.weights()[l].data, m2.weights()[l].data);
}

TEST(TrainTarget, DimensionMismatchRejected) {
  const auto ds = gen_purchase_like(100, 20, 5, 0.2, 53);
  TrainConfig cfg;
  const auto idx = iota_idx(100);
  EXPECT_THROW(train_target(ds, idx, {}, {19, 16, 5}, Activation::kTanh, cfg),
               std::invalid_argument);
  EXPECT_THROW(train_target(ds, idx, {}, {20, 16, 6}, Activation::kTanh, cfg),
               std::invalid_argument);
}

TEST(Checkpoint, RoundTripIsExact) {
  Mlp model({9, 14, 7, 3}, Activation::kRelu, 61);
  const auto dir = std::filesystem::temp_directory_path() / "embed_audit_tests";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "model.bin").string();
  model.save(path);
  const Mlp loaded = Mlp::load(path);
  EXPECT_EQ(loaded.layer_sizes(), model.layer_sizes());
  EXPECT_EQ(loaded.activation(), model.activation());
  for (std::size_t l = 0; l < model.weights().size(); ++l) {
    EXPECT_EQ(loaded.weights()[l].data, model.weights()[l].data);
    EXPECT_EQ(loaded.biases()[l].data, model.biases()[l].data);
  }
}

TEST(Checkpoint, CorruptFilesRejected) {
  const auto dir = std::filesystem::temp_directory_path() / "embed_audit_tests";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "garbage.bin").string();
  std::ofstream(path) << "not a checkpoint at all";
  EXPECT_THROW(Mlp::load(path), std::runtime_error);
  EXPECT_THROW(Mlp::load((dir / "does_not_exist.bin").string()), std::runtime_error);
}

TEST(TrainRegressor, LearnsLinearMap) {
  Rng rng(67);
  Tensor X({200, 4});
  for (auto& v : X.data) v = rng.normal();
  Tensor Y({200, 3});
  // y = A x + b for a fixed random affine map
  std::vector<double> A(12), b = {0.3, -0.2, 0.1};
  for (auto& v : A) v = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t o = 0; o < 3; ++o) {
      double acc = b[o];
      for (std::size_t j = 0; j < 4; ++j) acc += A[o * 4 + j] * X(i, j);
      Y(i, o) = acc;
    }
  Mlp reg({4, 3}, Activation::kTanh, 5);  // single affine layer
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.batch_size = 200;
  cfg.learning_rate = 0.05;
  cfg.seed = 8;
  const double mse = train_regressor(reg, X, Y, iota_idx(200), cfg);
  EXPECT_LT(mse, 1e-6);
}

}  // namespace
}  // namespace embed_audit

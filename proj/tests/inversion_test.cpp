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

#include "embed_audit/experiments.hpp"
#include "embed_audit/inversion.hpp"

namespace embed_audit {
namespace {

// Orthonormal rows via Gram-Schmidt on seeded Gaussian draws.
Tensor orthonormal_vocab(std::size_t n_tokens, std::size_t e, std::uint64_t seed) {
  Rng rng(seed);
  Tensor vocab({n_tokens, e});
  for (std::size_t i = 0; i < n_tokens; ++i) {
    std::vector<double> v(e);
    for (auto& x : v) x = rng.normal();
    for (std::size_t j = 0; j < i; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < e; ++k) dot += v[k] * vocab(j, k);
      for (std::size_t k = 0; k < e; ++k) v[k] -= dot * vocab(j, k);
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < e; ++k) vocab(i, k) = v[k] / norm;
  }
  return vocab;
}

// Closed-form least squares (normal equations, Gaussian elimination with
// partial pivoting); the independent oracle for the linear mapping fit.
std::vector<double> solve_normal_equations(const Tensor& X, const std::vector<double>& y) {
  const std::size_t n = X.rows(), d = X.cols() + 1;  // augmented with bias
  std::vector<std::vector<double>> a(d, std::vector<double>(d + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d);
    for (std::size_t j = 0; j + 1 < d; ++j) row[j] = X(i, j);
    row[d - 1] = 1.0;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = 0; q < d; ++q) a[p][q] += row[p] * row[q];
      a[p][d] += row[p] * y[i];
    }
  }
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < d; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < d; ++r) {
      if (r == col || a[col][col] == 0.0) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t q = col; q <= d; ++q) a[r][q] -= f * a[col][q];
    }
  }
  std::vector<double> w(d);
  for (std::size_t j = 0; j < d; ++j) w[j] = a[j][d] / a[j][j];
  return w;
}

TEST(TrainMapping, IdentityRegressionConverges) {
  const auto aux = gen_property_blobs(400, 10, 2, {}, 0.8, 3);
  TrainConfig tcfg;
  tcfg.epochs = 20;
  tcfg.seed = 1;
  std::vector<int> idx;
  for (int i = 0; i < 400; ++i) idx.push_back(i);
  const auto [target, fit] = train_target(aux, idx, {}, {10, 12, 8, 2}, Activation::kTanh, tcfg);

  TrainConfig mcfg;
  mcfg.epochs = 1000;
  mcfg.batch_size = 400;
  mcfg.learning_rate = 0.02;
  mcfg.seed = 2;
  const auto [mapping, mse] = train_mapping(target, aux, 1, 1, mcfg);
  EXPECT_LT(mse, 1e-4);
}

// The last affine layer has full column rank here, so a linear mapping from
// the logits back to the last hidden layer solves exactly; the normal
// equations give the reference.
TEST(TrainMapping, LinearlySolvableSystemReachesOracleFit) {
  const auto aux = gen_property_blobs(500, 12, 8, {}, 0.6, 5);
  TrainConfig tcfg;
  tcfg.epochs = 15;
  tcfg.seed = 3;
  std::vector<int> idx;
  for (int i = 0; i < 500; ++i) idx.push_back(i);
  const auto [target, fit] = train_target(aux, idx, {}, {12, 10, 4, 8}, Activation::kTanh, tcfg);

  const int from = target.num_layers();       // logits, width 8
  const int to = target.num_layers() - 1;     // last hidden, width 4
  TrainConfig mcfg;
  mcfg.epochs = 600;
  mcfg.batch_size = 500;
  mcfg.learning_rate = 0.05;
  mcfg.seed = 4;
  const auto [mapping, mse] = train_mapping(target, aux, from, to, mcfg);
  EXPECT_LT(mse, 1e-6);

  const Tensor X = target.embed(aux.features, from);
  const Tensor Y = target.embed(aux.features, to);
  double oracle_sse = 0.0;
  for (std::size_t c = 0; c < Y.cols(); ++c) {
    std::vector<double> y(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) y[i] = Y(i, c);
    const auto w = solve_normal_equations(X, y);
    for (std::size_t i = 0; i < X.rows(); ++i) {
      double pred = w.back();
      for (std::size_t j = 0; j < X.cols(); ++j) pred += w[j] * X(i, j);
      oracle_sse += (pred - y[i]) * (pred - y[i]);
    }
  }
  const double oracle_mse = oracle_sse / (static_cast<double>(X.rows()) * static_cast<double>(Y.cols()));
  EXPECT_LT(oracle_mse, 1e-12);  // the system is exactly solvable
}

TEST(TrainMapping, DepthOrderingEnforced) {
  const auto aux = gen_property_blobs(50, 8, 2, {}, 0.5, 7);
  Mlp target({8, 6, 4, 2}, Activation::kTanh, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_THROW(train_mapping(target, aux, 1, 2, cfg), std::invalid_argument);
}

TEST(TrainMapping, DeterministicPerSeed) {
  const auto aux = gen_property_blobs(200, 8, 2, {}, 0.5, 9);
  Mlp target({8, 6, 4, 2}, Activation::kTanh, 1);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 5;
  const auto [m1, mse1] = train_mapping(target, aux, 2, 1, cfg);
  const auto [m2, mse2] = train_mapping(target, aux, 2, 1, cfg);
  EXPECT_EQ(mse1, mse2);
  for (std::size_t l = 0; l < m1.weights().size(); ++l)
    EXPECT_EQ(m1.weights()[l].data, m2.weights()[l].data);
}

TEST(InvertSetup1, SingleTokenVocabulary) {
  Mlp identity_carrier({3, 2}, Activation::kTanh, 1);  // only depth 0 is used
  InversionProblem prob;
  prob.model = &identity_carrier;
  prob.vocab = Tensor({1, 3}, {0.5, -0.25, 1.0});
  prob.target_output = {0.5, -0.25, 1.0};
  prob.from_depth = 0;
  prob.to_depth = 0;
  InversionConfig cfg;
  cfg.setup = InversionSetup::kSetup1;
  cfg.steps = 50;
  const auto rec = invert_setup1(prob, cfg);
  EXPECT_EQ(rec.tokens, std::set<int>{0});
  EXPECT_EQ(rec.argmax_token, 0);
}

// Enumeration oracle: with the identity tap and orthonormal one-hot
// vocabulary, token 3 is the unique best candidate for target e_3.
TEST(InvertSetup1, RecoversOneHotToken) {
  const std::size_t w = 8;
  Mlp identity_carrier({static_cast<int>(w), 2}, Activation::kTanh, 1);
  Tensor vocab({w, w});
  for (std::size_t i = 0; i < w; ++i) vocab(i, i) = 1.0;
  InversionProblem prob;
  prob.model = &identity_carrier;
  prob.vocab = vocab;
  prob.target_output.assign(w, 0.0);
  prob.target_output[3] = 1.0;
  prob.from_depth = 0;
  prob.to_depth = 0;
  InversionConfig cfg;
  cfg.setup = InversionSetup::kSetup1;
  cfg.steps = 800;
  cfg.seed = 2;
  const auto rec = invert_setup1(prob, cfg);
  EXPECT_EQ(rec.argmax_token, 3);
  EXPECT_EQ(rec.tokens, std::set<int>{3});

  double best = 1e300;
  int best_token = -1;
  for (std::size_t i = 0; i < w; ++i) {
    double obj = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      const double diff = vocab(i, j) - prob.target_output[j];
      obj += diff * diff;
    }
    if (obj < best) {
      best = obj;
      best_token = static_cast<int>(i);
    }
  }
  EXPECT_EQ(best_token, 3);
}

// Sharper softmax (the pinned T = 0.05) must not recover fewer documents
// than a blunt one.
TEST(InvertSetup1, LowTemperatureRecoversAtLeastAsMuch) {
  const std::size_t w = 20;
  Mlp identity_carrier({static_cast<int>(w), 2}, Activation::kTanh, 1);
  Tensor vocab({w, w});
  for (std::size_t i = 0; i < w; ++i) vocab(i, i) = 1.0;
  Rng rng(31);
  auto recovery_rate = [&](double temperature) {
    Rng doc_rng(77);
    int hits = 0;
    const int docs = 10;
    for (int d = 0; d < docs; ++d) {
      std::set<int> truth;
      while (truth.size() < 3) truth.insert(static_cast<int>(doc_rng.uniform_int(w)));
      InversionProblem prob;
      prob.model = &identity_carrier;
      prob.vocab = vocab;
      prob.target_output.assign(w, 0.0);
      for (int t : truth) prob.target_output[static_cast<std::size_t>(t)] = 1.0;
      prob.from_depth = 0;
      prob.to_depth = 0;
      InversionConfig cfg;
      cfg.setup = InversionSetup::kSetup1;
      cfg.temperature = temperature;
      cfg.steps = 1200;
      cfg.known_doc_len = 3;
      cfg.seed = static_cast<std::uint64_t>(d);
      const auto rec = invert_setup1(prob, cfg);
      if (rec.tokens == truth) ++hits;
    }
    return static_cast<double>(hits) / docs;
  };
  EXPECT_GE(recovery_rate(0.05), recovery_rate(0.5));
}

TEST(InvertSetup2, ZeroTargetWithL1GivesEmptySet) {
  InversionProblem prob;
  prob.vocab = orthonormal_vocab(6, 10, 3);
  prob.target_output.assign(10, 0.0);
  prob.from_depth = 0;
  prob.to_depth = 0;
  InversionConfig cfg;
  cfg.setup = InversionSetup::kSetup2;
  cfg.steps = 500;
  const auto rec = invert_setup2(prob, cfg);
  EXPECT_TRUE(rec.tokens.empty());
  for (double z : rec.z) EXPECT_LE(z, 1e-9);
}

// With orthonormal rows each coordinate decouples: z_i = max(0, <v_i, t> -
// lambda/2). The solver must match the closed form within 1e-6 per
// coordinate.
TEST(InvertSetup2, MatchesDecoupledClosedForm) {
  const std::size_t n_tokens = 16, e = 24;
  const Tensor vocab = orthonormal_vocab(n_tokens, e, 11);
  Rng rng(13);
  InversionProblem prob;
  prob.vocab = vocab;
  prob.target_output.assign(e, 0.0);
  // target = v3 + v7 plus a small off-span component
  for (std::size_t j = 0; j < e; ++j)
    prob.target_output[j] = vocab(3, j) + vocab(7, j) + 0.01 * rng.normal();
  prob.from_depth = 0;
  prob.to_depth = 0;
  InversionConfig cfg;
  cfg.setup = InversionSetup::kSetup2;
  cfg.l1_weight = 0.1;
  cfg.sparsity_threshold = 0.01;
  cfg.steps = 6000;
  const auto rec = invert_setup2(prob, cfg);
  EXPECT_EQ(rec.tokens, (std::set<int>{3, 7}));
  for (std::size_t i = 0; i < n_tokens; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < e; ++j) dot += vocab(i, j) * prob.target_output[j];
    const double closed_form = std::max(0.0, dot - cfg.l1_weight / 2.0);
    EXPECT_NEAR(rec.z[i], closed_form, 1e-6) << "coordinate " << i;
  }
}

TEST(InvertSetup2, IteratesStayNonnegativeAndObjectiveDecreases) {
  Rng rng(17);
  Tensor vocab({12, 9});
  for (auto& v : vocab.data) v = rng.normal();
  InversionProblem prob;
  prob.vocab = vocab;
  prob.target_output.assign(9, 0.0);
  for (auto& t : prob.target_output) t = rng.normal();
  prob.from_depth = 0;
  prob.to_depth = 0;
  InversionConfig cfg;
  cfg.setup = InversionSetup::kSetup2;
  cfg.steps = 800;
  const auto rec = invert_setup2(prob, cfg);
  for (double z : rec.z) EXPECT_GE(z, 0.0);
  double initial = 0.0;  // objective at z = 0
  for (double t : prob.target_output) initial += t * t;
  EXPECT_LE(rec.objective, initial);
}

TEST(InvertSetup2, NonFiniteObjectiveRaisesNumericFailure) {
  InversionProblem prob;
  prob.vocab = Tensor({2, 2}, {1e200, 0.0, 0.0, 1e200});
  prob.target_output = {-1e200, -1e200};
  prob.from_depth = 0;
  prob.to_depth = 0;
  InversionConfig cfg;
  cfg.setup = InversionSetup::kSetup2;
  cfg.learning_rate = 1e150;
  cfg.steps = 50;
  try {
    invert_setup2(prob, cfg);
    FAIL() << "expected NumericFailure";
  } catch (const NumericFailure& e) {
    EXPECT_GE(e.step(), 0);
  }
}

TEST(InvertDirect, DepthZeroReproducesInputExactly) {
  Mlp model({6, 4, 2}, Activation::kTanh, 1);
  Rng rng(19);
  std::vector<double> x_star(6);
  for (auto& v : x_star) v = rng.uniform(-1.0, 1.0);
  InversionConfig cfg;
  cfg.setup = InversionSetup::kDirect;
  cfg.learning_rate = 0.5;
  cfg.steps = 300;
  const auto result = invert_direct(model, x_star, 0, cfg);
  EXPECT_LT(result.residual, 1e-12);
  for (std::size_t i = 0; i < x_star.size(); ++i) EXPECT_NEAR(result.x_hat[i], x_star[i], 1e-6);
}

// A full-column-rank first layer is injective, so the observed activation
// pins down x* exactly.
TEST(InvertDirect, FullRankLayerRecoversInput) {
  Mlp model({8, 24, 4}, Activation::kTanh, 23);
  Rng rng(29);
  std::vector<double> x_star(8);
  for (auto& v : x_star) v = 0.5 * rng.normal();
  InversionConfig cfg;
  cfg.setup = InversionSetup::kDirect;
  cfg.learning_rate = 0.1;
  cfg.steps = 4000;
  cfg.seed = 7;
  const auto result = invert_direct(model, x_star, 1, cfg);
  double max_err = 0.0;
  for (std::size_t i = 0; i < x_star.size(); ++i)
    max_err = std::max(max_err, std::abs(result.x_hat[i] - x_star[i]));
  EXPECT_LT(max_err, 1e-4);
}

// Rank-deficient taps leave a null space: the residual still vanishes while
// the reconstruction may sit far from x*.
TEST(InvertDirect, RankDeficientLayerStillMatchesResidual) {
  Mlp model({10, 3, 2}, Activation::kTanh, 31);  // 3 < 10: rank-deficient
  Rng rng(37);
  std::vector<double> x_star(10);
  for (auto& v : x_star) v = rng.normal();
  InversionConfig cfg;
  cfg.setup = InversionSetup::kDirect;
  cfg.learning_rate = 0.2;
  cfg.steps = 4000;
  const auto result = invert_direct(model, x_star, 1, cfg);
  EXPECT_LT(result.residual, 1e-6);
}

TEST(ScoreInversion, DelegatesToSetMetric) {
  const auto pr = score_inversion({1, 2, 3}, {1, 2, 4});
  EXPECT_NEAR(pr.precision, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(pr.recall, 2.0 / 3.0, 1e-15);
}

// Mirrors the access hierarchy: mapping from a shallow representation beats
// inverting from the final output alone.
TEST(BowBenchmark, LowerLayerAccessImprovesRecovery) {
  DeskScaleParams p;
  p.bow_aux_n = 2000;  // slimmer than the acceptance benchmark
  const auto b = bench::make_bow_bundle(p, derive_seed(42, "run-0"));
  InversionConfig inv;
  inv.setup = InversionSetup::kSetup2;
  inv.steps = 1500;
  const auto shallow = run_setup2_over_docs(b.model, b.aux, b.ds, b.doc_indices, 1,
                                            bench::mapping_config(p, 41), {}, inv);
  const auto from_logits = run_setup2_over_docs(b.model, b.aux, b.ds, b.doc_indices,
                                                b.model.num_layers(),
                                                bench::mapping_config(p, 41), {}, inv);
  EXPECT_GE(shallow.mean_f1, from_logits.mean_f1);
  EXPECT_GE(shallow.mean_f1, 0.7);
}

}  // namespace
}  // namespace embed_audit

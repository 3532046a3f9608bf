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
#include <string>
#include <vector>

#include "embed_audit/dataset.hpp"
#include "embed_audit/losses.hpp"
#include "embed_audit/metrics.hpp"
#include "embed_audit/network.hpp"
#include "embed_audit/optim.hpp"

namespace embed_audit {

// Whitebox inversion instance: the observed representation of the unknown
// input, the vocabulary matrix (one token embedding per row), the model the
// representation came from and an optional mapping model M that translates
// the observation into a lower-layer space.
struct InversionProblem {
  const Mlp* model = nullptr;
  Tensor vocab;                       // [|W|, e]
  std::vector<double> target_output;  // observed representation of x*
  int from_depth = 0;                 // depth of target_output
  int to_depth = 0;                   // depth the comparison runs at
  const Mlp* mapping = nullptr;       // optional M: from_depth -> to_depth
  std::vector<int> true_tokens;       // optional, for scoring

  // Target vector in the comparison space.
  std::vector<double> mapped_target() const {
    if (!mapping) return target_output;
    check_arg(mapping->input_width() == static_cast<int>(target_output.size()),
              "InversionProblem: mapping input width does not match the observation");
    return mapping->embed_one(target_output.data(), mapping->num_layers());
  }
};

enum class InversionSetup { kSetup1, kSetup2, kDirect };

inline std::string to_string(InversionSetup s) {
  switch (s) {
    case InversionSetup::kSetup1:
      return "setup1";
    case InversionSetup::kSetup2:
      return "setup2";
    case InversionSetup::kDirect:
      return "direct";
  }
  return "?";
}

inline InversionSetup inversion_setup_from_string(const std::string& s) {
  if (s == "setup1") return InversionSetup::kSetup1;
  if (s == "setup2") return InversionSetup::kSetup2;
  if (s == "direct") return InversionSetup::kDirect;
  throw std::invalid_argument("unknown setup '" + s + "' (expected setup1, setup2 or direct)");
}

struct InversionConfig {
  InversionSetup setup = InversionSetup::kSetup2;
  double temperature = 0.05;        // setup 1
  double l1_weight = 0.1;           // setup 2
  double sparsity_threshold = 0.01;  // setup 2
  double learning_rate = 1e-3;
  int steps = 2000;
  std::uint64_t seed = 0;
  // Setup 1 inference recovers the single argmax token as written; with a
  // known document length it takes the top-k instead. Both are recorded.
  int known_doc_len = 0;

  void validate() const {
    check_arg(temperature > 0.0, "InversionConfig: temperature must be positive");
    check_arg(l1_weight >= 0.0, "InversionConfig: l1_weight must be >= 0");
    check_arg(sparsity_threshold >= 0.0, "InversionConfig: sparsity_threshold must be >= 0");
    check_arg(learning_rate > 0.0, "InversionConfig: learning_rate must be positive");
    check_arg(steps >= 1, "InversionConfig: steps must be >= 1");
  }
};

struct TokenRecovery {
  std::set<int> tokens;
  int argmax_token = -1;
  std::vector<double> z;
  double objective = 0.0;
  int steps_run = 0;
};

// Trains the mapping model M that regresses the lower-layer representation
// from the observed one over an auxiliary dataset. Returns M and its final
// training MSE. to_depth == from_depth is the identity sanity case.
inline std::pair<Mlp, double> train_mapping(const Mlp& target, const LabeledDataset& aux,
                                            int from_depth, int to_depth, const TrainConfig& cfg,
                                            const std::vector<int>& hidden = {}) {
  check_arg(to_depth <= from_depth,
            "train_mapping: to_depth must not exceed from_depth (mapping goes to a lower layer)");
  const Tensor X = target.embed(aux.features, from_depth);
  const Tensor Y = target.embed(aux.features, to_depth);
  std::vector<int> sizes = {static_cast<int>(X.cols())};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(static_cast<int>(Y.cols()));
  Mlp mapping(sizes, Activation::kTanh, derive_seed(cfg.seed, "mapping-init"));
  std::vector<int> idx(X.rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  TrainConfig map_cfg = cfg;
  map_cfg.seed = derive_seed(cfg.seed, "mapping");
  const double mse = train_regressor(mapping, X, Y, idx, map_cfg);
  return {std::move(mapping), mse};
}

namespace detail {

inline std::set<int> top_k_tokens(const std::vector<double>& z, int k) {
  std::vector<int> ids(z.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (z[static_cast<std::size_t>(a)] != z[static_cast<std::size_t>(b)])
      return z[static_cast<std::size_t>(a)] > z[static_cast<std::size_t>(b)];
    return a < b;
  });
  const int take = std::min<int>(k, static_cast<int>(ids.size()));
  return std::set<int>(ids.begin(), ids.begin() + take);
}

}  // namespace detail

// Setup 1: optimize a continuous score vector z over the vocabulary; the
// candidate input is the softmax(z/T)-weighted token-embedding mix pushed
// through the model and compared against the (mapped) observation.
inline TokenRecovery invert_setup1(const InversionProblem& prob, const InversionConfig& cfg) {
  cfg.validate();
  check_arg(prob.model != nullptr, "invert_setup1: model required");
  check_arg(prob.vocab.shape.size() == 2 && prob.vocab.rows() >= 1,
            "invert_setup1: vocabulary matrix must be [|W|, e] with |W| >= 1");
  check_arg(prob.vocab.all_finite(), "invert_setup1: vocabulary must be finite");
  const std::size_t n_tokens = prob.vocab.rows();
  const std::size_t e = prob.vocab.cols();
  check_arg(prob.model->input_width() == static_cast<int>(e),
            "invert_setup1: token embedding width must match the model input");
  const std::vector<double> target = prob.mapped_target();
  check_arg(static_cast<int>(target.size()) == prob.model->width_at(prob.to_depth),
            "invert_setup1: target width does not match the comparison depth");

  Rng rng = Rng(cfg.seed).stream("setup1-init");
  Tensor z({n_tokens});
  for (auto& v : z.data) v = 0.01 * rng.normal();
  AdamState adam(z.shape, cfg.learning_rate);

  std::vector<double> s(n_tokens), x(e), grad_x, grad_s(n_tokens);
  Tensor grad_z({n_tokens});
  double objective = 0.0;
  for (int step = 0; step < cfg.steps; ++step) {
    for (std::size_t i = 0; i < n_tokens; ++i) s[i] = z[i] / cfg.temperature;
    softmax_inplace(s.data(), n_tokens);
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t i = 0; i < n_tokens; ++i) {
      const double* v = prob.vocab.row_ptr(i);
      for (std::size_t j = 0; j < e; ++j) x[j] += v[j] * s[i];
    }
    const std::vector<double> f = prob.model->embed_one(x.data(), prob.to_depth);
    std::vector<double> r(f.size());
    objective = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      r[j] = 2.0 * (f[j] - target[j]);
      objective += (f[j] - target[j]) * (f[j] - target[j]);
    }
    if (!std::isfinite(objective))
      throw NumericFailure("invert_setup1: objective is not finite", step);
    grad_x = prob.to_depth == 0 ? r : prob.model->input_gradient(x.data(), prob.to_depth, r);
    double weighted = 0.0;
    for (std::size_t i = 0; i < n_tokens; ++i) {
      const double* v = prob.vocab.row_ptr(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < e; ++j) acc += v[j] * grad_x[j];
      grad_s[i] = acc;
      weighted += s[i] * acc;
    }
    for (std::size_t i = 0; i < n_tokens; ++i)
      grad_z[i] = s[i] * (grad_s[i] - weighted) / cfg.temperature;
    adam_step(z, grad_z, adam);
  }

  TokenRecovery out;
  out.z.assign(z.data.begin(), z.data.end());
  out.objective = objective;
  out.steps_run = cfg.steps;
  out.argmax_token = *detail::top_k_tokens(out.z, 1).begin();
  out.tokens = detail::top_k_tokens(out.z, cfg.known_doc_len > 0 ? cfg.known_doc_len : 1);
  return out;
}

// Setup 2: nonnegative sparse coding of the (mapped) observation against
// the vocabulary, solved by projected Adam with an L1 penalty. The step
// halves whenever the objective would increase, so the iterates are
// monotone and converge tightly. Recovered tokens are those with
// z_i > sparsity_threshold.
inline TokenRecovery invert_setup2(const InversionProblem& prob, const InversionConfig& cfg) {
  cfg.validate();
  check_arg(prob.vocab.shape.size() == 2 && prob.vocab.rows() >= 1,
            "invert_setup2: vocabulary matrix must be [|W|, e] with |W| >= 1");
  check_arg(prob.vocab.all_finite(), "invert_setup2: vocabulary must be finite");
  const std::size_t n_tokens = prob.vocab.rows();
  const std::size_t e = prob.vocab.cols();
  const std::vector<double> target = prob.mapped_target();
  check_arg(target.size() == e,
            "invert_setup2: target width must match the token embedding width");

  Tensor z({n_tokens});  // zeros: feasible start on the constraint set
  AdamState adam(z.shape, cfg.learning_rate);
  double lr = cfg.learning_rate;

  std::vector<double> residual(e);
  Tensor grad({n_tokens});
  auto objective_at = [&](const Tensor& zz) {
    double obj = 0.0;
    for (std::size_t j = 0; j < e; ++j) {
      double acc = -target[j];
      for (std::size_t i = 0; i < n_tokens; ++i) acc += prob.vocab(i, j) * zz[i];
      residual[j] = acc;
      obj += acc * acc;
    }
    for (std::size_t i = 0; i < n_tokens; ++i) obj += cfg.l1_weight * zz[i];
    return obj;
  };

  double objective = objective_at(z);
  int steps_run = 0;
  for (int step = 0; step < cfg.steps; ++step) {
    ++steps_run;
    // residual is valid for the current z (objective_at was called last on it)
    for (std::size_t i = 0; i < n_tokens; ++i) {
      const double* v = prob.vocab.row_ptr(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < e; ++j) acc += v[j] * residual[j];
      grad[i] = 2.0 * acc + cfg.l1_weight;
    }
    const Tensor z_prev = z;
    adam.learning_rate = lr;
    adam_step(z, grad, adam);
    for (auto& v : z.data) v = std::max(v, 0.0);  // projection onto z >= 0
    const double proposed = objective_at(z);
    if (!std::isfinite(proposed))
      throw NumericFailure("invert_setup2: objective is not finite", step);
    if (proposed > objective) {
      z = z_prev;
      objective = objective_at(z);  // restore residual cache
      lr *= 0.5;
      adam.reset_moments();
      if (lr < 1e-18) break;
    } else {
      objective = proposed;
    }
  }

  TokenRecovery out;
  out.z.assign(z.data.begin(), z.data.end());
  out.objective = objective;
  out.steps_run = steps_run;
  out.argmax_token = *detail::top_k_tokens(out.z, 1).begin();
  for (std::size_t i = 0; i < n_tokens; ++i)
    if (z[i] > cfg.sparsity_threshold) out.tokens.insert(static_cast<int>(i));
  return out;
}

struct DirectInversion {
  Tensor x_hat;
  double residual = 0.0;  // ||phi_d(x_hat) - phi_d(x*)||^2 at the end
  int steps_run = 0;
};

// The simplest whitebox attack: gradient descent on the input so that its
// depth-d representation matches the observed one. Backtracking keeps the
// loss monotone; with a full-column-rank first layer this recovers x*.
inline DirectInversion invert_direct(const Mlp& target, const std::vector<double>& x_star,
                                     int depth, const InversionConfig& cfg) {
  cfg.validate();
  check_arg(static_cast<int>(x_star.size()) == target.input_width(),
            "invert_direct: x* width does not match the model input");
  const std::vector<double> observed = target.embed_one(x_star.data(), depth);

  Rng rng = Rng(cfg.seed).stream("direct-init");
  std::vector<double> x(x_star.size());
  for (auto& v : x) v = 0.01 * rng.normal();

  auto loss_at = [&](const std::vector<double>& xx) {
    const auto f = target.embed_one(xx.data(), depth);
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double diff = f[j] - observed[j];
      s += diff * diff;
    }
    return s;
  };

  double step_size = cfg.learning_rate;
  double loss = loss_at(x);
  DirectInversion out;
  for (int step = 0; step < cfg.steps; ++step) {
    ++out.steps_run;
    if (!std::isfinite(loss)) throw NumericFailure("invert_direct: loss is not finite", step);
    if (loss < 1e-18 || step_size < 1e-20) break;
    const auto f = target.embed_one(x.data(), depth);
    std::vector<double> r(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) r[j] = 2.0 * (f[j] - observed[j]);
    const std::vector<double> g =
        depth == 0 ? r : target.input_gradient(x.data(), depth, r);
    std::vector<double> proposed = x;
    for (std::size_t j = 0; j < x.size(); ++j) proposed[j] -= step_size * g[j];
    const double proposed_loss = loss_at(proposed);
    if (proposed_loss <= loss) {
      x.swap(proposed);
      loss = proposed_loss;
      step_size *= 1.25;
    } else {
      step_size *= 0.5;
    }
  }
  out.x_hat = Tensor({x.size()}, x);
  out.residual = loss;
  return out;
}

// Delegates to the shared set metric (the Table-11-style score).
inline PrecisionRecall score_inversion(const std::set<int>& recovered,
                                       const std::set<int>& truth) {
  return set_precision_recall(recovered, truth);
}

// --- canned bag-of-words benchmark ----------------------------------------

struct Setup2BenchmarkResult {
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f1 = 0.0;
  double mapping_mse = 0.0;
  std::vector<PrecisionRecall> per_doc;
};

// Runs the mapping + setup-2 pipeline over a list of documents of a
// multi-hot corpus. The vocabulary matrix is the identity: token i embeds
// as the i-th input coordinate.
inline Setup2BenchmarkResult run_setup2_over_docs(const Mlp& target, const LabeledDataset& aux,
                                                  const LabeledDataset& docs,
                                                  const std::vector<int>& doc_indices,
                                                  int from_depth, const TrainConfig& mapping_cfg,
                                                  const std::vector<int>& mapping_hidden,
                                                  const InversionConfig& inv_cfg) {
  check_arg(!doc_indices.empty(), "run_setup2_over_docs: need at least one document");
  check_arg(!docs.token_sets.empty(), "run_setup2_over_docs: corpus lacks token sets");
  const auto vocab_size = static_cast<std::size_t>(target.input_width());
  Tensor vocab({vocab_size, vocab_size});
  for (std::size_t i = 0; i < vocab_size; ++i) vocab(i, i) = 1.0;

  auto [mapping, mse] = train_mapping(target, aux, from_depth, 0, mapping_cfg, mapping_hidden);

  Setup2BenchmarkResult result;
  result.mapping_mse = mse;
  std::vector<double> precisions, recalls, f1s;
  for (int doc : doc_indices) {
    const auto row = static_cast<std::size_t>(doc);
    check_arg(row < docs.size(), "run_setup2_over_docs: document index out of range");
    InversionProblem prob;
    prob.model = &target;
    prob.vocab = vocab;
    prob.target_output = target.embed_one(docs.features.row_ptr(row), from_depth);
    prob.from_depth = from_depth;
    prob.to_depth = 0;
    prob.mapping = &mapping;
    const TokenRecovery rec = invert_setup2(prob, inv_cfg);
    const std::set<int> truth(docs.token_sets[row].begin(), docs.token_sets[row].end());
    const PrecisionRecall pr = score_inversion(rec.tokens, truth);
    result.per_doc.push_back(pr);
    precisions.push_back(pr.precision);
    recalls.push_back(pr.recall);
    f1s.push_back(set_f1(pr));
  }
  result.mean_precision = mean(precisions);
  result.mean_recall = mean(recalls);
  result.mean_f1 = mean(f1s);
  return result;
}

}  // namespace embed_audit

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

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "embed_audit/dataset.hpp"
#include "embed_audit/errors.hpp"
#include "embed_audit/losses.hpp"
#include "embed_audit/optim.hpp"
#include "embed_audit/rng.hpp"
#include "embed_audit/tensor.hpp"

namespace embed_audit {

enum class Activation { kTanh, kRelu };

inline std::string to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "relu"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation '" + s + "' (expected tanh or relu)");
}

enum class Optimizer { kAdam, kSgd };

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t seed = 0;
  double l2_penalty = 0.0;

  void validate() const {
    check_arg(epochs >= 0, "TrainConfig: epochs must be >= 0");
    check_arg(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
    check_arg(learning_rate > 0.0, "TrainConfig: learning_rate must be positive");
    check_arg(l2_penalty >= 0.0, "TrainConfig: l2_penalty must be >= 0");
  }
};

struct FitReport {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double overfit_gap = 0.0;  // train_accuracy - test_accuracy
  std::vector<double> epoch_loss;
};

// Layered dense network with named tap points. Depth 0 taps the raw input,
// depths 1..L-1 the post-activation hidden layers, depth L the logits.
// Also serves as the attack-model MLP, the shadow model and the mapping
// regressor; the output head is always linear.
class Mlp {
 public:
  Mlp() = default;

  // Zero-initialized parameters (uniform predictions).
  Mlp(std::vector<int> layer_sizes, Activation act)
      : sizes_(std::move(layer_sizes)), act_(act) {
    validate_sizes();
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weights_.emplace_back(Tensor({static_cast<std::size_t>(sizes_[l + 1]),
                                    static_cast<std::size_t>(sizes_[l])}));
      biases_.emplace_back(Tensor({static_cast<std::size_t>(sizes_[l + 1])}));
    }
  }

  // Seeded Xavier-uniform initialization.
  Mlp(std::vector<int> layer_sizes, Activation act, std::uint64_t init_seed)
      : Mlp(std::move(layer_sizes), act) {
    Rng rng = Rng(init_seed).stream("init");
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const double bound =
          std::sqrt(6.0 / static_cast<double>(sizes_[l] + sizes_[l + 1]));
      for (auto& w : weights_[l].data) w = rng.uniform(-bound, bound);
    }
  }

  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation activation() const { return act_; }
  int input_width() const { return sizes_.front(); }
  int output_width() const { return sizes_.back(); }
  int width_at(int depth) const {
    check_arg(depth >= 0 && depth <= num_layers(), "depth out of range [0, " +
                                                       std::to_string(num_layers()) + "]");
    return sizes_[static_cast<std::size_t>(depth)];
  }

  std::vector<Tensor>& weights() { return weights_; }
  std::vector<Tensor>& biases() { return biases_; }
  const std::vector<Tensor>& weights() const { return weights_; }
  const std::vector<Tensor>& biases() const { return biases_; }

  double activate(double z) const {
    return act_ == Activation::kTanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
  }

  // Derivative expressed through the post-activation value.
  double activate_grad(double a) const {
    return act_ == Activation::kTanh ? 1.0 - a * a : (a > 0.0 ? 1.0 : 0.0);
  }

  // Stores input and every layer output: acts[0] = x, acts[l] for l in
  // [1, L-1] post-activation, acts[L] logits.
  void forward_taps(const double* x, std::vector<std::vector<double>>& acts) const {
    const int L = num_layers();
    acts.resize(static_cast<std::size_t>(L) + 1);
    acts[0].assign(x, x + sizes_[0]);
    for (int l = 0; l < L; ++l) {
      const Tensor& W = weights_[static_cast<std::size_t>(l)];
      const Tensor& b = biases_[static_cast<std::size_t>(l)];
      const std::vector<double>& in = acts[static_cast<std::size_t>(l)];
      std::vector<double>& out = acts[static_cast<std::size_t>(l) + 1];
      out.resize(static_cast<std::size_t>(sizes_[static_cast<std::size_t>(l) + 1]));
      for (std::size_t o = 0; o < out.size(); ++o) {
        const double* w = W.row_ptr(o);
        double acc = b[o];
        for (std::size_t i = 0; i < in.size(); ++i) acc += w[i] * in[i];
        out[o] = l + 1 < L ? activate(acc) : acc;
      }
    }
  }

  // Post-activation output of layer `depth`; depth 0 is the identity tap,
  // depth L the logits.
  std::vector<double> embed_one(const double* x, int depth) const {
    const int L = num_layers();
    check_arg(depth >= 0 && depth <= L,
              "embed: depth out of range [0, " + std::to_string(L) + "]");
    std::vector<double> cur(x, x + sizes_[0]);
    std::vector<double> next;
    for (int l = 0; l < depth; ++l) {
      const Tensor& W = weights_[static_cast<std::size_t>(l)];
      const Tensor& b = biases_[static_cast<std::size_t>(l)];
      next.resize(static_cast<std::size_t>(sizes_[static_cast<std::size_t>(l) + 1]));
      for (std::size_t o = 0; o < next.size(); ++o) {
        const double* w = W.row_ptr(o);
        double acc = b[o];
        for (std::size_t i = 0; i < cur.size(); ++i) acc += w[i] * cur[i];
        next[o] = l + 1 < L ? activate(acc) : acc;
      }
      cur.swap(next);
    }
    return cur;
  }

  Tensor embed(const Tensor& X, int depth) const {
    check_arg(X.shape.size() == 2, "embed: X must be [n, d]");
    check_arg(static_cast<int>(X.cols()) == sizes_[0], "embed: input width mismatch");
    Tensor out({X.rows(), static_cast<std::size_t>(width_at(depth))});
    for (std::size_t i = 0; i < X.rows(); ++i) {
      const std::vector<double> e = embed_one(X.row_ptr(i), depth);
      std::copy(e.begin(), e.end(), out.row_ptr(i));
    }
    return out;
  }

  std::vector<double> predict_vector_one(const double* x) const {
    std::vector<double> p = embed_one(x, num_layers());
    softmax_inplace(p.data(), p.size());
    return p;
  }

  Tensor predict_vector(const Tensor& X) const {
    Tensor logits = embed(X, num_layers());
    for (std::size_t i = 0; i < logits.rows(); ++i)
      softmax_inplace(logits.row_ptr(i), logits.cols());
    return logits;
  }

  // Per-sample cross-entropy of the softmax output at class y.
  double prediction_loss_one(const double* x, int y) const {
    check_arg(y >= 0 && y < output_width(), "prediction_loss: class out of range");
    const std::vector<double> logits = embed_one(x, num_layers());
    return cross_entropy_one(logits.data(), logits.size(), y);
  }

  int predict_class_one(const double* x) const {
    const std::vector<double> logits = embed_one(x, num_layers());
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.size(); ++c)
      if (logits[c] > logits[best]) best = c;
    return static_cast<int>(best);
  }

  // Gradient of a scalar loss w.r.t. the input, given the loss gradient on
  // the depth-`tap` output. Used by the inversion attacks.
  std::vector<double> input_gradient(const double* x, int tap,
                                     const std::vector<double>& output_grad) const {
    const int L = num_layers();
    check_arg(tap >= 1 && tap <= L, "input_gradient: tap must be in [1, L]");
    check_arg(output_grad.size() == static_cast<std::size_t>(width_at(tap)),
              "input_gradient: gradient width mismatch");
    std::vector<std::vector<double>> acts;
    forward_taps(x, acts);
    std::vector<double> delta = output_grad;  // becomes d(loss)/d(z_l)
    if (tap < L)
      for (std::size_t o = 0; o < delta.size(); ++o)
        delta[o] *= activate_grad(acts[static_cast<std::size_t>(tap)][o]);
    for (int l = tap - 1; l >= 0; --l) {
      const Tensor& W = weights_[static_cast<std::size_t>(l)];
      std::vector<double> prev(static_cast<std::size_t>(sizes_[static_cast<std::size_t>(l)]), 0.0);
      for (std::size_t o = 0; o < delta.size(); ++o) {
        const double* w = W.row_ptr(o);
        const double dv = delta[o];
        for (std::size_t i = 0; i < prev.size(); ++i) prev[i] += w[i] * dv;
      }
      if (l > 0)
        for (std::size_t i = 0; i < prev.size(); ++i)
          prev[i] *= activate_grad(acts[static_cast<std::size_t>(l)][i]);
      delta.swap(prev);
    }
    return delta;
  }

  // --- checkpoint io ---------------------------------------------------
  // Versioned header, layer sizes, activation tag, raw little-endian f64
  // weight blobs; round-trip exact.

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    check_arg(out.good(), "Mlp::save: cannot open " + path);
    out.write(kMagic, 8);
    detail_put_u32(out, 1);  // version
    detail_put_u32(out, act_ == Activation::kTanh ? 0u : 1u);
    detail_put_u32(out, static_cast<std::uint32_t>(sizes_.size()));
    for (int s : sizes_) detail_put_u32(out, static_cast<std::uint32_t>(s));
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (double v : weights_[l].data) detail_put_f64(out, v);
      for (double v : biases_[l].data) detail_put_f64(out, v);
    }
    check_arg(out.good(), "Mlp::save: write failed for " + path);
  }

  static Mlp load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw std::runtime_error("Mlp::load: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in.good() || std::string(magic, 8) != std::string(kMagic, 8))
      throw std::runtime_error("Mlp::load: bad magic in " + path);
    const std::uint32_t version = detail_get_u32(in);
    if (version != 1)
      throw std::runtime_error("Mlp::load: unsupported version " + std::to_string(version));
    const std::uint32_t act_tag = detail_get_u32(in);
    if (act_tag > 1) throw std::runtime_error("Mlp::load: bad activation tag");
    const std::uint32_t n_sizes = detail_get_u32(in);
    if (n_sizes < 2 || n_sizes > 64) throw std::runtime_error("Mlp::load: bad layer count");
    std::vector<int> sizes(n_sizes);
    for (auto& s : sizes) s = static_cast<int>(detail_get_u32(in));
    Mlp model(sizes, act_tag == 0 ? Activation::kTanh : Activation::kRelu);
    for (std::size_t l = 0; l < model.weights_.size(); ++l) {
      for (auto& v : model.weights_[l].data) v = detail_get_f64(in);
      for (auto& v : model.biases_[l].data) v = detail_get_f64(in);
    }
    if (!in.good()) throw std::runtime_error("Mlp::load: truncated file " + path);
    return model;
  }

 private:
  static constexpr const char* kMagic = "EAUDMLP1";

  void validate_sizes() const {
    check_arg(sizes_.size() >= 2, "Mlp: need at least input and output layer sizes");
    for (int s : sizes_) check_arg(s >= 1, "Mlp: layer sizes must be positive");
  }

  static void detail_put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
    os.write(b, 4);
  }

  static std::uint32_t detail_get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }

  static void detail_put_f64(std::ostream& os, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
    os.write(b, 8);
  }

  static double detail_get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
  }

  std::vector<int> sizes_;
  Activation act_ = Activation::kTanh;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

// --- training ------------------------------------------------------------

namespace detail {

enum class LossKind { kHardCe, kSoftCe, kMse };

struct SupervisedData {
  const Tensor* inputs = nullptr;          // [n, in]
  const std::vector<int>* labels = nullptr;  // hard CE
  const Tensor* targets = nullptr;         // soft CE distributions or MSE targets
  double temperature = 1.0;                // soft CE only
};

// Shared minibatch loop. Gradients are averaged over the batch; the L2
// penalty applies to weights only. Shuffling and the optimizer state are
// fully determined by cfg.seed. With `anneal_on_increase`, the learning
// rate halves whenever the epoch loss goes up (used by the regressor to
// converge tightly).
inline std::vector<double> train_minibatch(Mlp& model, const SupervisedData& data,
                                           std::vector<int> idx, LossKind kind,
                                           const TrainConfig& cfg,
                                           bool anneal_on_increase = false) {
  cfg.validate();
  const Tensor& X = *data.inputs;
  const int L = model.num_layers();
  const int out_w = model.output_width();
  check_arg(static_cast<int>(X.cols()) == model.input_width(),
            "train: input width does not match the model");
  if (kind == LossKind::kHardCe) check_arg(data.labels != nullptr, "train: labels required");
  if (kind != LossKind::kHardCe) {
    check_arg(data.targets != nullptr, "train: targets required");
    check_arg(static_cast<int>(data.targets->cols()) == out_w,
              "train: target width does not match the model");
  }

  std::vector<Tensor> grad_w, grad_b;
  std::vector<AdamState> adam_w, adam_b;
  for (int l = 0; l < L; ++l) {
    grad_w.emplace_back(Tensor(model.weights()[static_cast<std::size_t>(l)].shape));
    grad_b.emplace_back(Tensor(model.biases()[static_cast<std::size_t>(l)].shape));
    if (cfg.optimizer == Optimizer::kAdam) {
      adam_w.emplace_back(AdamState(model.weights()[static_cast<std::size_t>(l)].shape, cfg.learning_rate));
      adam_b.emplace_back(AdamState(model.biases()[static_cast<std::size_t>(l)].shape, cfg.learning_rate));
    }
  }

  Rng shuffle_rng = Rng(cfg.seed).stream("shuffle");
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev;
  std::vector<double> epoch_losses;
  double lr = cfg.learning_rate;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(idx);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      for (int l = 0; l < L; ++l) {
        grad_w[static_cast<std::size_t>(l)].fill(0.0);
        grad_b[static_cast<std::size_t>(l)].fill(0.0);
      }
      for (std::size_t s = start; s < end; ++s) {
        const auto row = static_cast<std::size_t>(idx[s]);
        model.forward_taps(X.row_ptr(row), acts);
        const std::vector<double>& logits = acts[static_cast<std::size_t>(L)];
        delta.assign(static_cast<std::size_t>(out_w), 0.0);
        switch (kind) {
          case LossKind::kHardCe: {
            const int y = (*data.labels)[row];
            check_arg(y >= 0 && y < out_w, "train: label out of range");
            std::vector<double> p = logits;
            softmax_inplace(p.data(), p.size());
            loss_sum += cross_entropy_one(logits.data(), logits.size(), y);
            for (int c = 0; c < out_w; ++c) delta[static_cast<std::size_t>(c)] = p[static_cast<std::size_t>(c)];
            delta[static_cast<std::size_t>(y)] -= 1.0;
            break;
          }
          case LossKind::kSoftCe: {
            loss_sum += soft_cross_entropy_one(logits.data(), data.targets->row_ptr(row),
                                               static_cast<std::size_t>(out_w),
                                               data.temperature, delta.data());
            break;
          }
          case LossKind::kMse: {
            const double* t = data.targets->row_ptr(row);
            double acc = 0.0;
            const double inv_w = 1.0 / static_cast<double>(out_w);
            for (int c = 0; c < out_w; ++c) {
              const double diff = logits[static_cast<std::size_t>(c)] - t[c];
              acc += diff * diff;
              delta[static_cast<std::size_t>(c)] = 2.0 * diff * inv_w;
            }
            loss_sum += acc * inv_w;
            break;
          }
        }
        // Backprop: delta holds d(loss)/d(z) of the current layer.
        for (int l = L - 1; l >= 0; --l) {
          Tensor& gw = grad_w[static_cast<std::size_t>(l)];
          Tensor& gb = grad_b[static_cast<std::size_t>(l)];
          const std::vector<double>& in = acts[static_cast<std::size_t>(l)];
          for (std::size_t o = 0; o < delta.size(); ++o) {
            const double dv = delta[o];
            gb[o] += dv;
            double* g = gw.row_ptr(o);
            for (std::size_t i = 0; i < in.size(); ++i) g[i] += dv * in[i];
          }
          if (l > 0) {
            const Tensor& W = model.weights()[static_cast<std::size_t>(l)];
            prev.assign(in.size(), 0.0);
            for (std::size_t o = 0; o < delta.size(); ++o) {
              const double* w = W.row_ptr(o);
              const double dv = delta[o];
              for (std::size_t i = 0; i < prev.size(); ++i) prev[i] += w[i] * dv;
            }
            for (std::size_t i = 0; i < prev.size(); ++i)
              prev[i] *= model.activate_grad(in[i]);
            delta.swap(prev);
          }
        }
      }
      for (int l = 0; l < L; ++l) {
        Tensor& gw = grad_w[static_cast<std::size_t>(l)];
        Tensor& gb = grad_b[static_cast<std::size_t>(l)];
        Tensor& W = model.weights()[static_cast<std::size_t>(l)];
        Tensor& b = model.biases()[static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < gw.size(); ++i) {
          gw.data[i] *= inv_batch;
          if (cfg.l2_penalty > 0.0) gw.data[i] += 2.0 * cfg.l2_penalty * W.data[i];
        }
        for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] *= inv_batch;
        if (cfg.optimizer == Optimizer::kAdam) {
          adam_w[static_cast<std::size_t>(l)].learning_rate = lr;
          adam_b[static_cast<std::size_t>(l)].learning_rate = lr;
          adam_step(W, gw, adam_w[static_cast<std::size_t>(l)]);
          adam_step(b, gb, adam_b[static_cast<std::size_t>(l)]);
        } else {
          sgd_step(W, gw, lr);
          sgd_step(b, gb, lr);
        }
      }
    }
    const double epoch_loss = loss_sum / static_cast<double>(idx.size());
    if (!std::isfinite(epoch_loss))
      throw NumericFailure("training loss is not finite", epoch);
    if (anneal_on_increase && !epoch_losses.empty() && epoch_loss > epoch_losses.back())
      lr *= 0.5;
    epoch_losses.push_back(epoch_loss);
  }
  return epoch_losses;
}

}  // namespace detail

inline std::vector<double> train_classifier(Mlp& model, const Tensor& X,
                                            const std::vector<int>& y,
                                            const std::vector<int>& train_idx,
                                            const TrainConfig& cfg) {
  detail::SupervisedData data;
  data.inputs = &X;
  data.labels = &y;
  return detail::train_minibatch(model, data, train_idx, detail::LossKind::kHardCe, cfg);
}

// Full-dataset regression fit; returns the final per-element MSE over the
// given rows. Anneals the step on loss increases so convex fits converge
// tightly.
inline double train_regressor(Mlp& model, const Tensor& X, const Tensor& Y,
                              const std::vector<int>& idx, const TrainConfig& cfg) {
  detail::SupervisedData data;
  data.inputs = &X;
  data.targets = &Y;
  detail::train_minibatch(model, data, idx, detail::LossKind::kMse, cfg, true);
  double mse = 0.0;
  for (int i : idx) {
    const auto row = static_cast<std::size_t>(i);
    const std::vector<double> out = model.embed_one(X.row_ptr(row), model.num_layers());
    for (std::size_t c = 0; c < out.size(); ++c) {
      const double diff = out[c] - Y(row, c);
      mse += diff * diff;
    }
  }
  return mse / (static_cast<double>(idx.size()) * static_cast<double>(Y.cols()));
}

inline std::vector<double> train_soft_classifier(Mlp& model, const Tensor& X,
                                                 const Tensor& soft_targets,
                                                 const std::vector<int>& train_idx,
                                                 double temperature, const TrainConfig& cfg) {
  check_arg(temperature > 0.0, "train_soft_classifier: temperature must be positive");
  detail::SupervisedData data;
  data.inputs = &X;
  data.targets = &soft_targets;
  data.temperature = temperature;
  return detail::train_minibatch(model, data, train_idx, detail::LossKind::kSoftCe, cfg);
}

inline double evaluate_accuracy(const Mlp& model, const Tensor& X, const std::vector<int>& y,
                                const std::vector<int>& idx) {
  check_arg(!idx.empty(), "evaluate_accuracy: empty index set");
  std::size_t hits = 0;
  for (int i : idx) {
    const auto row = static_cast<std::size_t>(i);
    if (model.predict_class_one(X.row_ptr(row)) == y[row]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(idx.size());
}

inline std::vector<double> per_sample_losses(const Mlp& model, const Tensor& X,
                                             const std::vector<int>& y,
                                             const std::vector<int>& idx) {
  std::vector<double> losses;
  losses.reserve(idx.size());
  for (int i : idx) {
    const auto row = static_cast<std::size_t>(i);
    losses.push_back(model.prediction_loss_one(X.row_ptr(row), y[row]));
  }
  return losses;
}

// Trains a target classifier on the given split with controllable
// overfitting (epochs, training-set size, l2). Fully seed-deterministic:
// initialization and shuffling derive from cfg.seed.
inline std::pair<Mlp, FitReport> train_target(const LabeledDataset& ds,
                                              const std::vector<int>& train_idx,
                                              const std::vector<int>& test_idx,
                                              const std::vector<int>& layer_sizes,
                                              Activation act, const TrainConfig& cfg) {
  check_arg(layer_sizes.size() >= 2, "train_target: need at least two layer sizes");
  check_arg(static_cast<int>(ds.width()) == layer_sizes.front(),
            "train_target: feature width does not match layer_sizes[0]");
  check_arg(ds.num_classes == layer_sizes.back(),
            "train_target: class count does not match the last layer size");
  check_arg(!train_idx.empty(), "train_target: empty training split");

  Mlp model(layer_sizes, act, derive_seed(cfg.seed, "target-init"));
  FitReport report;
  report.epoch_loss = train_classifier(model, ds.features, ds.labels, train_idx, cfg);
  report.train_accuracy = evaluate_accuracy(model, ds.features, ds.labels, train_idx);
  report.test_accuracy =
      test_idx.empty() ? 0.0 : evaluate_accuracy(model, ds.features, ds.labels, test_idx);
  report.overfit_gap = report.train_accuracy - report.test_accuracy;
  return {std::move(model), std::move(report)};
}

}  // namespace embed_audit

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

#include <string>
#include <vector>

#include "embed_audit/dataset.hpp"
#include "embed_audit/kmeans.hpp"
#include "embed_audit/metrics.hpp"
#include "embed_audit/network.hpp"

namespace embed_audit {

// The three NN MIA settings: embeddings from an intermediate layer,
// prediction vectors, or the per-sample prediction loss.
enum class MiaSetting { kEmbedding, kPrediction, kLoss };

struct AttackFeatureSpec {
  MiaSetting setting = MiaSetting::kLoss;
  int depth = -1;  // embedding setting only

  std::string provenance() const {
    switch (setting) {
      case MiaSetting::kEmbedding:
        return "embedding@" + std::to_string(depth);
      case MiaSetting::kPrediction:
        return "prediction";
      case MiaSetting::kLoss:
        return "loss";
    }
    return "?";
  }
};

// Attack features with balanced membership labels in both partitions.
// Loss-style features are width-1 rows.
struct AttackDataset {
  Tensor train_features;
  Tensor eval_features;
  std::vector<int> train_membership;
  std::vector<int> eval_membership;
  std::string provenance;

  void validate() const {
    check_arg(train_features.rows() == train_membership.size() &&
                  eval_features.rows() == eval_membership.size(),
              "AttackDataset: features and membership labels must align");
    auto count_pos = [](const std::vector<int>& v) {
      std::size_t p = 0;
      for (int y : v) p += static_cast<std::size_t>(y == 1);
      return p;
    };
    const std::size_t train_pos = count_pos(train_membership);
    const std::size_t eval_pos = count_pos(eval_membership);
    check_arg(train_pos > 0 && train_pos * 2 == train_membership.size(),
              "AttackDataset: attack-train partition must be balanced");
    check_arg(eval_pos > 0 && eval_pos * 2 == eval_membership.size(),
              "AttackDataset: attack-eval partition must be balanced");
  }
};

namespace detail {

inline void fill_attack_rows(const Mlp& target, const LabeledDataset& ds,
                             const std::vector<int>& members, const std::vector<int>& nonmembers,
                             const AttackFeatureSpec& spec, Tensor& features,
                             std::vector<int>& membership) {
  std::vector<int> rows = members;
  rows.insert(rows.end(), nonmembers.begin(), nonmembers.end());
  std::size_t width = 0;
  switch (spec.setting) {
    case MiaSetting::kEmbedding:
      width = static_cast<std::size_t>(target.width_at(spec.depth));
      break;
    case MiaSetting::kPrediction:
      width = static_cast<std::size_t>(target.output_width());
      break;
    case MiaSetting::kLoss:
      width = 1;
      break;
  }
  features = Tensor({rows.size(), width});
  membership.assign(rows.size(), 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<std::size_t>(rows[r]);
    check_arg(rows[r] >= 0 && i < ds.size(), "build_attack_features: index out of range");
    membership[r] = r < members.size() ? 1 : 0;
    const double* x = ds.features.row_ptr(i);
    switch (spec.setting) {
      case MiaSetting::kEmbedding: {
        const auto e = target.embed_one(x, spec.depth);
        std::copy(e.begin(), e.end(), features.row_ptr(r));
        break;
      }
      case MiaSetting::kPrediction: {
        const auto p = target.predict_vector_one(x);
        std::copy(p.begin(), p.end(), features.row_ptr(r));
        break;
      }
      case MiaSetting::kLoss: {
        features(r, 0) = target.prediction_loss_one(x, ds.labels[i]);
        break;
      }
    }
  }
}

}  // namespace detail

// Extracts attack features for one setting. Membership label 1 marks
// members; balance comes from the split construction (truncation, never
// resampling).
inline AttackDataset build_attack_features(const Mlp& target, const LabeledDataset& ds,
                                           const MembershipSplit& split,
                                           const AttackFeatureSpec& spec) {
  check_arg(static_cast<int>(ds.width()) == target.input_width(),
            "build_attack_features: dataset width does not match the target");
  AttackDataset ads;
  ads.provenance = spec.provenance();
  detail::fill_attack_rows(target, ds, split.attack_train_members, split.attack_train_nonmembers,
                           spec, ads.train_features, ads.train_membership);
  detail::fill_attack_rows(target, ds, split.attack_eval_members, split.attack_eval_nonmembers,
                           spec, ads.eval_features, ads.eval_membership);
  ads.validate();
  return ads;
}

struct MiaResult {
  double auc = 0.0;
  double attack_accuracy = 0.0;
  std::string setting;
  int depth = -1;
  std::uint64_t seed = 0;
  double clustering_quality = -1.0;  // pseudo-label attacks only
  // The result is recomputable from the stored eval scores.
  std::vector<double> eval_scores;
  std::vector<int> eval_labels;
};

// Trains the attack MLP ([f, 64, 32, 2], relu) on the attack-train
// partition and reports the ROC AUC of the member-class probability on
// attack-eval. Width-1 features are z-scored over attack-train first.
inline MiaResult run_mia(const AttackDataset& ads, const TrainConfig& cfg) {
  ads.validate();
  Tensor train = ads.train_features;
  Tensor eval = ads.eval_features;
  if (train.cols() == 1) {
    double m = 0.0;
    for (std::size_t i = 0; i < train.rows(); ++i) m += train(i, 0);
    m /= static_cast<double>(train.rows());
    double var = 0.0;
    for (std::size_t i = 0; i < train.rows(); ++i) {
      const double d = train(i, 0) - m;
      var += d * d;
    }
    double sd = std::sqrt(var / static_cast<double>(train.rows()));
    if (sd < 1e-12) sd = 1.0;
    for (std::size_t i = 0; i < train.rows(); ++i) train(i, 0) = (train(i, 0) - m) / sd;
    for (std::size_t i = 0; i < eval.rows(); ++i) eval(i, 0) = (eval(i, 0) - m) / sd;
  }

  const std::uint64_t attack_seed = derive_seed(cfg.seed, "attack");
  Mlp attack({static_cast<int>(train.cols()), 64, 32, 2}, Activation::kRelu, attack_seed);
  TrainConfig attack_cfg = cfg;
  attack_cfg.seed = attack_seed;
  std::vector<int> idx(train.rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  train_classifier(attack, train, ads.train_membership, idx, attack_cfg);

  MiaResult result;
  result.setting = ads.provenance;
  result.seed = cfg.seed;
  const auto at = ads.provenance.find('@');
  if (at != std::string::npos) result.depth = std::stoi(ads.provenance.substr(at + 1));
  result.eval_labels = ads.eval_membership;
  result.eval_scores.reserve(eval.rows());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < eval.rows(); ++i) {
    const auto p = attack.predict_vector_one(eval.row_ptr(i));
    result.eval_scores.push_back(p[1]);
    const int predicted = p[1] > p[0] ? 1 : 0;
    if (predicted == ads.eval_membership[i]) ++hits;
  }
  result.attack_accuracy = static_cast<double>(hits) / static_cast<double>(eval.rows());
  result.auc = roc_auc(result.eval_scores, result.eval_labels).auc;
  return result;
}

namespace detail {

// Loss-based MIA on the per-sample losses of an already-trained stand-in
// model (shadow); shared by the label and pseudo-label attacks.
inline MiaResult mia_from_shadow_losses(const Mlp& shadow, const Tensor& train_emb,
                                        const std::vector<int>& train_labels,
                                        const Tensor& eval_emb,
                                        const std::vector<int>& eval_labels,
                                        const std::vector<int>& train_membership,
                                        const std::vector<int>& eval_membership,
                                        const std::string& provenance, const TrainConfig& cfg) {
  AttackDataset ads;
  ads.provenance = provenance;
  ads.train_features = Tensor({train_emb.rows(), 1});
  ads.eval_features = Tensor({eval_emb.rows(), 1});
  for (std::size_t i = 0; i < train_emb.rows(); ++i)
    ads.train_features(i, 0) = shadow.prediction_loss_one(train_emb.row_ptr(i), train_labels[i]);
  for (std::size_t i = 0; i < eval_emb.rows(); ++i)
    ads.eval_features(i, 0) = shadow.prediction_loss_one(eval_emb.row_ptr(i), eval_labels[i]);
  ads.train_membership = train_membership;
  ads.eval_membership = eval_membership;
  return run_mia(ads, cfg);
}

}  // namespace detail

// F4 strategy: the attacker holds embeddings plus ground-truth labels,
// trains a shadow MLP from embeddings to labels and runs the loss-based
// MIA on the shadow's losses.
inline MiaResult shadow_attack_with_labels(const Mlp& target, const LabeledDataset& ds,
                                           const MembershipSplit& split, int depth,
                                           const std::vector<int>& shadow_hidden,
                                           const TrainConfig& cfg) {
  const AttackFeatureSpec spec{MiaSetting::kEmbedding, depth};
  const AttackDataset emb = build_attack_features(target, ds, split, spec);

  auto gather_labels = [&](const std::vector<int>& members, const std::vector<int>& nonmembers) {
    std::vector<int> labels;
    for (int i : members) labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
    for (int i : nonmembers) labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
    return labels;
  };
  const std::vector<int> train_labels =
      gather_labels(split.attack_train_members, split.attack_train_nonmembers);
  const std::vector<int> eval_labels =
      gather_labels(split.attack_eval_members, split.attack_eval_nonmembers);

  std::vector<int> sizes = {static_cast<int>(emb.train_features.cols())};
  sizes.insert(sizes.end(), shadow_hidden.begin(), shadow_hidden.end());
  sizes.push_back(ds.num_classes);
  const std::uint64_t shadow_seed = derive_seed(cfg.seed, "shadow");
  Mlp shadow(sizes, Activation::kTanh, shadow_seed);
  TrainConfig shadow_cfg = cfg;
  shadow_cfg.seed = shadow_seed;
  std::vector<int> idx(emb.train_features.rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  train_classifier(shadow, emb.train_features, train_labels, idx, shadow_cfg);

  MiaResult result = detail::mia_from_shadow_losses(
      shadow, emb.train_features, train_labels, emb.eval_features, eval_labels,
      emb.train_membership, emb.eval_membership, "shadow-loss@" + std::to_string(depth), cfg);
  result.depth = depth;
  return result;
}

// F5 strategy: pseudo-labels from k-means clustering of the attack-train
// embeddings stand in for the ground truth. clustering_quality is the
// best-permutation agreement with the true labels.
inline MiaResult shadow_attack_with_pseudolabels(const Mlp& target, const LabeledDataset& ds,
                                                 const MembershipSplit& split, int depth, int k,
                                                 const TrainConfig& cfg) {
  check_arg(k >= 2, "shadow_attack_with_pseudolabels: k must be >= 2");
  const AttackFeatureSpec spec{MiaSetting::kEmbedding, depth};
  const AttackDataset emb = build_attack_features(target, ds, split, spec);

  // Seeded restarts; the lowest-inertia clustering wins (ties keep the
  // first), so the result stays deterministic.
  KmeansResult clusters;
  for (int restart = 0; restart < 8; ++restart) {
    KmeansResult candidate = kmeans(
        emb.train_features, k,
        derive_seed(cfg.seed, "pseudo-kmeans-" + std::to_string(restart)));
    if (restart == 0 || candidate.inertia < clusters.inertia) clusters = std::move(candidate);
  }
  std::vector<int> eval_pseudo(emb.eval_features.rows());
  for (std::size_t i = 0; i < emb.eval_features.rows(); ++i)
    eval_pseudo[i] = nearest_centroid(emb.eval_features.row_ptr(i), clusters.centroids);

  std::vector<int> true_train_labels;
  for (int i : split.attack_train_members) true_train_labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
  for (int i : split.attack_train_nonmembers) true_train_labels.push_back(ds.labels[static_cast<std::size_t>(i)]);

  const std::uint64_t shadow_seed = derive_seed(cfg.seed, "pseudo-shadow");
  Mlp shadow({static_cast<int>(emb.train_features.cols()), 64, 32, k}, Activation::kTanh,
             shadow_seed);
  TrainConfig shadow_cfg = cfg;
  shadow_cfg.seed = shadow_seed;
  std::vector<int> idx(emb.train_features.rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  train_classifier(shadow, emb.train_features, clusters.assignments, idx, shadow_cfg);

  MiaResult result = detail::mia_from_shadow_losses(
      shadow, emb.train_features, clusters.assignments, emb.eval_features, eval_pseudo,
      emb.train_membership, emb.eval_membership, "pseudo-loss@" + std::to_string(depth), cfg);
  result.depth = depth;
  result.clustering_quality = cluster_label_agreement(clusters.assignments, true_train_labels);
  return result;
}

}  // namespace embed_audit

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
#include "embed_audit/metrics.hpp"
#include "embed_audit/network.hpp"

namespace embed_audit {

struct PiaResult {
  std::string property;
  int depth = -1;
  std::string depth_tag;  // "shallow" / "deep" / "depth-<k>"
  double attack_accuracy = 0.0;        // held-out auxiliary eval
  double attack_train_accuracy = 0.0;  // logged for completeness
  double target_train_acc = -1.0;      // target-task accuracy, for context
  double target_test_acc = -1.0;
  std::uint64_t seed = 0;
};

// Property inference: auxiliary samples are fed through the target to get
// embeddings at `depth`; one binary MLP attack model is trained per
// property and scored on a held-out portion of the auxiliary set.
inline PiaResult run_pia(const Mlp& target, const LabeledDataset& aux,
                         const std::string& property, int depth, const TrainConfig& cfg,
                         double eval_fraction = 0.5, const FitReport* target_fit = nullptr) {
  const auto it = aux.property_labels.find(property);
  check_arg(it != aux.property_labels.end(), "run_pia: unknown property '" + property + "'");
  check_arg(eval_fraction > 0.0 && eval_fraction < 1.0,
            "run_pia: eval_fraction must be in (0,1)");
  check_arg(static_cast<int>(aux.width()) == target.input_width(),
            "run_pia: auxiliary width does not match the target");
  const std::vector<int>& prop = it->second;

  const Tensor embeddings = target.embed(aux.features, depth);
  std::vector<int> perm = Rng(cfg.seed).stream("pia-split").permutation(static_cast<int>(aux.size()));
  const auto n_eval = static_cast<std::size_t>(
      std::llround(static_cast<double>(perm.size()) * eval_fraction));
  check_arg(n_eval >= 1 && n_eval < perm.size(), "run_pia: eval_fraction leaves an empty side");
  const std::vector<int> train_idx(perm.begin(), perm.end() - static_cast<long>(n_eval));
  const std::vector<int> eval_idx(perm.end() - static_cast<long>(n_eval), perm.end());

  const std::uint64_t attack_seed = derive_seed(cfg.seed, "pia-attack");
  Mlp attack({static_cast<int>(embeddings.cols()), 64, 32, 2}, Activation::kRelu, attack_seed);
  TrainConfig attack_cfg = cfg;
  attack_cfg.seed = attack_seed;
  train_classifier(attack, embeddings, prop, train_idx, attack_cfg);

  PiaResult result;
  result.property = property;
  result.depth = depth;
  result.seed = cfg.seed;
  const int deepest = target.num_layers() - 1;
  if (depth == 1 && deepest == 1)
    result.depth_tag = "depth-1";
  else if (depth == 1)
    result.depth_tag = "shallow";
  else if (depth == deepest)
    result.depth_tag = "deep";
  else
    result.depth_tag = "depth-" + std::to_string(depth);
  result.attack_accuracy = evaluate_accuracy(attack, embeddings, prop, eval_idx);
  result.attack_train_accuracy = evaluate_accuracy(attack, embeddings, prop, train_idx);
  if (target_fit) {
    result.target_train_acc = target_fit->train_accuracy;
    result.target_test_acc = target_fit->test_accuracy;
  }
  return result;
}

}  // namespace embed_audit

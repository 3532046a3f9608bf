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

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "embed_audit/dataset.hpp"
#include "embed_audit/defense.hpp"
#include "embed_audit/inversion.hpp"
#include "embed_audit/metrics.hpp"
#include "embed_audit/mia.hpp"
#include "embed_audit/network.hpp"
#include "embed_audit/parallel.hpp"
#include "embed_audit/pia.hpp"
#include "embed_audit/version.hpp"

namespace embed_audit {

// Desk-scale knobs for the canned finding suites. Defaults are tuned so the
// directional claims resolve within the acceptance runtimes.
struct DeskScaleParams {
  // strongly overfit purchase-like target (the many-class analogue)
  int overfit_n = 2000;
  int overfit_dim = 48;
  int overfit_classes = 50;
  double overfit_flip = 0.20;
  int overfit_epochs = 100;
  // generalizing purchase-like target (the 2-class analogue)
  int general_n = 1200;
  double general_flip = 0.05;
  int general_epochs = 15;
  double general_l2 = 1e-3;
  // blob targets for the pseudo-label study
  int clusterable_n = 1800;
  double clusterable_spread = 1.8;
  int clusterable_epochs = 120;
  int unclusterable_n = 800;
  double unclusterable_spread = 25.0;
  int unclusterable_epochs = 150;
  // property-inference bundle
  int pia_n = 2800;
  double pia_spread = 0.6;
  double pia_correlation = 0.9;
  int pia_target_epochs = 60;
  // bag-of-words bundle (inversion + defense)
  int bow_vocab = 50;
  int bow_doc_len = 5;
  int bow_n = 1500;
  int bow_aux_n = 4000;
  int bow_epochs = 15;
  int bow_from_depth = 1;
  int bow_num_docs = 20;
  int mapping_epochs = 300;
  // defense
  double defense_sigma = 0.1;
  int distill_epochs = 120;
  // attack / shadow model training
  int attack_epochs = 60;
  double attack_lr = 1e-3;
};

struct ExperimentSpec {
  std::string finding = "F1";  // F1..F6 or DEF
  std::uint64_t master_seed = 42;
  int num_seeds = 5;
  int max_threads = 0;  // 0 = EMBED_AUDIT_THREADS / hardware cap
  DeskScaleParams params;
};

// --- canned benchmark builders (shared with the defense suite and tests) --

struct TargetBundle {
  LabeledDataset ds;
  MembershipSplit split;
  Mlp model;
  FitReport fit;
};

namespace bench {

inline TrainConfig attack_config(const DeskScaleParams& p, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = p.attack_epochs;
  cfg.batch_size = 32;
  cfg.learning_rate = p.attack_lr;
  cfg.seed = seed;
  return cfg;
}

inline TargetBundle make_overfit_purchase(const DeskScaleParams& p, std::uint64_t seed) {
  TargetBundle b;
  b.ds = gen_purchase_like(p.overfit_n, p.overfit_dim, p.overfit_classes, p.overfit_flip,
                           derive_seed(seed, "overfit-data"));
  b.split = split_membership(b.ds, 0.5, 0.5, derive_seed(seed, "overfit-split"));
  TrainConfig cfg;
  cfg.epochs = p.overfit_epochs;
  cfg.batch_size = 32;
  cfg.learning_rate = 2e-3;
  cfg.seed = derive_seed(seed, "overfit-target");
  auto [model, fit] =
      train_target(b.ds, b.split.member_indices, b.split.nonmember_indices,
                   {p.overfit_dim, 64, 48, 32, p.overfit_classes}, Activation::kTanh, cfg);
  b.model = std::move(model);
  b.fit = std::move(fit);
  return b;
}

inline TargetBundle make_generalizing_purchase(const DeskScaleParams& p, std::uint64_t seed) {
  TargetBundle b;
  b.ds = gen_purchase_like(p.general_n, p.overfit_dim, 2, p.general_flip,
                           derive_seed(seed, "general-data"));
  b.split = split_membership(b.ds, 0.5, 0.5, derive_seed(seed, "general-split"));
  TrainConfig cfg;
  cfg.epochs = p.general_epochs;
  cfg.batch_size = 32;
  cfg.learning_rate = 2e-3;
  cfg.l2_penalty = p.general_l2;
  cfg.seed = derive_seed(seed, "general-target");
  auto [model, fit] = train_target(b.ds, b.split.member_indices, b.split.nonmember_indices,
                                   {p.overfit_dim, 64, 48, 32, 2}, Activation::kTanh, cfg);
  b.model = std::move(model);
  b.fit = std::move(fit);
  return b;
}

inline TargetBundle make_clusterable_blobs(const DeskScaleParams& p, std::uint64_t seed) {
  TargetBundle b;
  b.ds = gen_property_blobs(p.clusterable_n, 32, 4, {}, p.clusterable_spread,
                            derive_seed(seed, "cluster-data"));
  b.split = split_membership(b.ds, 0.5, 0.5, derive_seed(seed, "cluster-split"));
  TrainConfig cfg;
  cfg.epochs = p.clusterable_epochs;
  cfg.batch_size = 32;
  cfg.learning_rate = 2e-3;
  cfg.seed = derive_seed(seed, "cluster-target");
  auto [model, fit] = train_target(b.ds, b.split.member_indices, b.split.nonmember_indices,
                                   {32, 64, 48, 32, 4}, Activation::kTanh, cfg);
  b.model = std::move(model);
  b.fit = std::move(fit);
  return b;
}

inline TargetBundle make_unclusterable_blobs(const DeskScaleParams& p, std::uint64_t seed) {
  TargetBundle b;
  b.ds = gen_property_blobs(p.unclusterable_n, 32, 4, {}, p.unclusterable_spread,
                            derive_seed(seed, "noise-data"));
  b.split = split_membership(b.ds, 0.5, 0.5, derive_seed(seed, "noise-split"));
  TrainConfig cfg;
  cfg.epochs = p.unclusterable_epochs;
  cfg.batch_size = 32;
  cfg.learning_rate = 2e-3;
  cfg.seed = derive_seed(seed, "noise-target");
  auto [model, fit] = train_target(b.ds, b.split.member_indices, b.split.nonmember_indices,
                                   {32, 64, 48, 32, 4}, Activation::kTanh, cfg);
  b.model = std::move(model);
  b.fit = std::move(fit);
  return b;
}

struct PiaBundle {
  Mlp model;
  FitReport fit;
  LabeledDataset aux;  // disjoint from the target's training data
};

inline PiaBundle make_pia_bundle(const DeskScaleParams& p, std::uint64_t seed) {
  const LabeledDataset big = gen_property_blobs(
      p.pia_n, 48, 3,
      {{"correlated", p.pia_correlation}, {"uncorrelated", 0.0}}, p.pia_spread,
      derive_seed(seed, "pia-data"));
  std::vector<int> train_idx, test_idx, aux_idx;
  const int n_train = p.pia_n * 2 / 7;
  const int n_test = p.pia_n / 7;
  for (int i = 0; i < n_train; ++i) train_idx.push_back(i);
  for (int i = n_train; i < n_train + n_test; ++i) test_idx.push_back(i);
  for (int i = n_train + n_test; i < p.pia_n; ++i) aux_idx.push_back(i);

  TrainConfig cfg;
  cfg.epochs = p.pia_target_epochs;
  cfg.batch_size = 32;
  cfg.learning_rate = 2e-3;
  cfg.seed = derive_seed(seed, "pia-target");
  PiaBundle b;
  auto [model, fit] =
      train_target(big, train_idx, test_idx, {48, 64, 32, 12, 3}, Activation::kTanh, cfg);
  b.model = std::move(model);
  b.fit = std::move(fit);
  b.aux = subset(big, aux_idx);
  return b;
}

struct BowBundle {
  LabeledDataset ds;    // target corpus
  LabeledDataset aux;   // attacker corpus, same distribution, disjoint rows
  MembershipSplit split;
  Mlp model;
  FitReport fit;
  std::vector<int> doc_indices;  // member documents under inversion
};

inline BowBundle make_bow_bundle(const DeskScaleParams& p, std::uint64_t seed) {
  const LabeledDataset big = gen_bow_text(p.bow_vocab, p.bow_doc_len, p.bow_n + p.bow_aux_n, 2,
                                          derive_seed(seed, "bow-data"));
  std::vector<int> ds_idx, aux_idx;
  for (int i = 0; i < p.bow_n; ++i) ds_idx.push_back(i);
  for (int i = p.bow_n; i < p.bow_n + p.bow_aux_n; ++i) aux_idx.push_back(i);
  BowBundle b;
  b.ds = subset(big, ds_idx);
  b.aux = subset(big, aux_idx);
  b.split = split_membership(b.ds, 0.4, 0.5, derive_seed(seed, "bow-split"));
  TrainConfig cfg;
  cfg.epochs = p.bow_epochs;
  cfg.batch_size = 32;
  cfg.learning_rate = 2e-3;
  cfg.seed = derive_seed(seed, "bow-target");
  auto [model, fit] = train_target(b.ds, b.split.member_indices, b.split.nonmember_indices,
                                   {p.bow_vocab, 64, 48, 2}, Activation::kTanh, cfg);
  b.model = std::move(model);
  b.fit = std::move(fit);
  const int docs = std::min<int>(p.bow_num_docs, static_cast<int>(b.split.member_indices.size()));
  b.doc_indices.assign(b.split.member_indices.begin(), b.split.member_indices.begin() + docs);
  return b;
}

inline TrainConfig mapping_config(const DeskScaleParams& p, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = p.mapping_epochs;
  cfg.batch_size = 64;
  cfg.learning_rate = 5e-3;
  cfg.seed = seed;
  return cfg;
}

}  // namespace bench

// --- report ----------------------------------------------------------------

struct ReportRow {
  std::string label;
  std::map<std::string, double> cells;  // keyed by column name
  std::string error;                    // non-empty when all seeds failed
};

struct ExperimentReport {
  std::string finding;
  std::uint64_t master_seed = 0;
  int num_seeds = 0;
  std::string version = kVersion;
  std::vector<std::string> columns;
  std::vector<ReportRow> rows;
  std::vector<nlohmann::json> raw_runs;  // per (row, seed) provenance records

  static std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
  }

  std::string to_markdown() const {
    std::string out = "# " + finding + " report\n\n";
    out += "master_seed=" + std::to_string(master_seed) + " seeds=" + std::to_string(num_seeds) +
           " version=" + version + "\n\n";
    out += "| config |";
    for (const auto& c : columns) out += " " + c + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& row : rows) {
      out += "| " + row.label + " |";
      for (const auto& c : columns) {
        const auto it = row.cells.find(c);
        out += it == row.cells.end() ? " |" : " " + format_number(it->second) + " |";
      }
      out += "\n";
      if (!row.error.empty()) out += "| " + row.label + " (error) | " + row.error + " |\n";
    }
    return out;
  }

  std::string to_csv() const {
    std::string out = "config";
    for (const auto& c : columns) out += "," + c;
    out += "\n";
    for (const auto& row : rows) {
      out += row.label;
      for (const auto& c : columns) {
        const auto it = row.cells.find(c);
        out += it == row.cells.end() ? "," : "," + format_number(it->second);
      }
      out += "\n";
    }
    return out;
  }

  std::string raw_jsonl() const {
    std::string out;
    for (const auto& r : raw_runs) out += r.dump() + "\n";
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json r{{"label", row.label}, {"cells", row.cells}};
      if (!row.error.empty()) r["error"] = row.error;
      rows_json.push_back(r);
    }
    return nlohmann::json{{"finding", finding},     {"master_seed", master_seed},
                          {"num_seeds", num_seeds}, {"version", version},
                          {"columns", columns},     {"rows", rows_json},
                          {"raw_runs", raw_runs}};
  }
};

namespace detail {

// One seed's contribution: metric values per row plus raw provenance
// records. A row missing from `values` means that row failed for this seed.
struct SeedOutcome {
  std::map<std::string, std::map<std::string, double>> values;
  std::map<std::string, std::string> row_errors;
  std::vector<nlohmann::json> raw;
};

inline nlohmann::json mia_raw(const std::string& finding, const std::string& row,
                              std::uint64_t seed, const MiaResult& r) {
  nlohmann::json j{{"finding", finding},
                   {"row", row},
                   {"setting", r.setting},
                   {"depth", r.depth},
                   {"seed", seed},
                   {"auc", r.auc},
                   {"attack_accuracy", r.attack_accuracy}};
  if (r.clustering_quality >= 0.0) j["clustering_quality"] = r.clustering_quality;
  return j;
}

// Median per (row, column) across the seeds that produced the row.
inline ExperimentReport aggregate(const std::string& finding, const ExperimentSpec& spec,
                                  const std::vector<std::string>& row_order,
                                  const std::vector<std::string>& columns,
                                  const std::vector<SeedOutcome>& outcomes) {
  ExperimentReport report;
  report.finding = finding;
  report.master_seed = spec.master_seed;
  report.num_seeds = spec.num_seeds;
  report.columns = columns;
  for (const auto& label : row_order) {
    ReportRow row;
    row.label = label;
    for (const auto& col : columns) {
      std::vector<double> values;
      for (const auto& outcome : outcomes) {
        const auto r = outcome.values.find(label);
        if (r == outcome.values.end()) continue;
        const auto c = r->second.find(col);
        if (c != r->second.end()) values.push_back(c->second);
      }
      if (!values.empty()) row.cells[col] = median(values);
    }
    if (row.cells.empty()) {
      for (const auto& outcome : outcomes) {
        const auto e = outcome.row_errors.find(label);
        if (e != outcome.row_errors.end()) {
          row.error = e->second;
          break;
        }
      }
      if (row.error.empty()) row.error = "no successful seed";
    }
    report.rows.push_back(std::move(row));
  }
  for (const auto& outcome : outcomes)
    for (const auto& r : outcome.raw) report.raw_runs.push_back(r);
  return report;
}

}  // namespace detail

namespace detail {

inline SeedOutcome run_f1_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedOutcome out;
  const DeskScaleParams& p = spec.params;
  auto run_side = [&](const std::string& row, TargetBundle (*make)(const DeskScaleParams&, std::uint64_t)) {
    try {
      const TargetBundle b = make(p, seed);
      const int deepest = b.model.num_layers() - 1;
      const MiaResult loss = run_mia(
          build_attack_features(b.model, b.ds, b.split, {MiaSetting::kLoss, -1}),
          bench::attack_config(p, derive_seed(seed, row + "-loss")));
      const MiaResult emb = run_mia(
          build_attack_features(b.model, b.ds, b.split, {MiaSetting::kEmbedding, deepest}),
          bench::attack_config(p, derive_seed(seed, row + "-emb")));
      out.values[row] = {{"train_acc", b.fit.train_accuracy},
                         {"test_acc", b.fit.test_accuracy},
                         {"overfit_gap", b.fit.overfit_gap},
                         {"auc_loss", loss.auc},
                         {"auc_embedding_deep", emb.auc}};
      out.raw.push_back(mia_raw(spec.finding, row, seed, loss));
      out.raw.push_back(mia_raw(spec.finding, row, seed, emb));
    } catch (const std::exception& e) {
      out.row_errors[row] = e.what();
    }
  };
  run_side("overfit", &bench::make_overfit_purchase);
  run_side("generalizing", &bench::make_generalizing_purchase);
  return out;
}

inline SeedOutcome run_f2_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedOutcome out;
  const DeskScaleParams& p = spec.params;
  try {
    const TargetBundle b = bench::make_overfit_purchase(p, seed);
    const int deepest = b.model.num_layers() - 1;
    const std::vector<std::pair<std::string, AttackFeatureSpec>> settings = {
        {"loss", {MiaSetting::kLoss, -1}},
        {"prediction", {MiaSetting::kPrediction, -1}},
        {"embedding_deep", {MiaSetting::kEmbedding, deepest}}};
    for (const auto& [row, spec_] : settings) {
      try {
        const MiaResult r = run_mia(build_attack_features(b.model, b.ds, b.split, spec_),
                                    bench::attack_config(p, derive_seed(seed, "f2-" + row)));
        out.values[row] = {{"train_acc", b.fit.train_accuracy},
                           {"test_acc", b.fit.test_accuracy},
                           {"auc", r.auc},
                           {"attack_accuracy", r.attack_accuracy}};
        out.raw.push_back(mia_raw(spec.finding, row, seed, r));
      } catch (const std::exception& e) {
        out.row_errors[row] = e.what();
      }
    }
  } catch (const std::exception& e) {
    for (const auto& row : {"loss", "prediction", "embedding_deep"}) out.row_errors[row] = e.what();
  }
  return out;
}

inline SeedOutcome run_f3_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedOutcome out;
  const DeskScaleParams& p = spec.params;
  try {
    const TargetBundle b = bench::make_overfit_purchase(p, seed);
    for (int depth = 1; depth < b.model.num_layers(); ++depth) {
      const std::string row = "embedding@" + std::to_string(depth);
      try {
        const MiaResult r = run_mia(
            build_attack_features(b.model, b.ds, b.split, {MiaSetting::kEmbedding, depth}),
            bench::attack_config(p, derive_seed(seed, "f3-" + row)));
        out.values[row] = {{"auc", r.auc}, {"attack_accuracy", r.attack_accuracy}};
        out.raw.push_back(mia_raw(spec.finding, row, seed, r));
      } catch (const std::exception& e) {
        out.row_errors[row] = e.what();
      }
    }
    const MiaResult loss = run_mia(
        build_attack_features(b.model, b.ds, b.split, {MiaSetting::kLoss, -1}),
        bench::attack_config(p, derive_seed(seed, "f3-loss")));
    out.values["loss_baseline"] = {{"auc", loss.auc}, {"attack_accuracy", loss.attack_accuracy}};
    out.raw.push_back(mia_raw(spec.finding, "loss_baseline", seed, loss));
  } catch (const std::exception& e) {
    out.row_errors["embedding@1"] = e.what();
    out.row_errors["loss_baseline"] = e.what();
  }
  return out;
}

inline SeedOutcome run_f4_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedOutcome out;
  const DeskScaleParams& p = spec.params;
  try {
    const TargetBundle b = bench::make_overfit_purchase(p, seed);
    const int deepest = b.model.num_layers() - 1;
    const MiaResult emb = run_mia(
        build_attack_features(b.model, b.ds, b.split, {MiaSetting::kEmbedding, deepest}),
        bench::attack_config(p, derive_seed(seed, "f4-emb")));
    out.values["embedding_deep"] = {{"auc", emb.auc}};
    out.raw.push_back(mia_raw(spec.finding, "embedding_deep", seed, emb));
    const MiaResult loss = run_mia(
        build_attack_features(b.model, b.ds, b.split, {MiaSetting::kLoss, -1}),
        bench::attack_config(p, derive_seed(seed, "f4-loss")));
    out.values["loss"] = {{"auc", loss.auc}};
    out.raw.push_back(mia_raw(spec.finding, "loss", seed, loss));
    const MiaResult shadow = shadow_attack_with_labels(
        b.model, b.ds, b.split, deepest, {64, 32},
        bench::attack_config(p, derive_seed(seed, "f4-shadow")));
    out.values["shadow_with_labels"] = {{"auc", shadow.auc}};
    out.raw.push_back(mia_raw(spec.finding, "shadow_with_labels", seed, shadow));
  } catch (const std::exception& e) {
    for (const auto& row : {"embedding_deep", "loss", "shadow_with_labels"})
      out.row_errors[row] = e.what();
  }
  return out;
}

inline SeedOutcome run_f5_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedOutcome out;
  const DeskScaleParams& p = spec.params;
  auto run_regime = [&](const std::string& prefix, const TargetBundle& b, int depth) {
    const int k = b.ds.num_classes;
    try {
      const MiaResult emb = run_mia(
          build_attack_features(b.model, b.ds, b.split, {MiaSetting::kEmbedding, depth}),
          bench::attack_config(p, derive_seed(seed, prefix + "-emb")));
      out.values[prefix + "/embedding"] = {{"auc", emb.auc}};
      out.raw.push_back(mia_raw(spec.finding, prefix + "/embedding", seed, emb));
      const MiaResult labels = shadow_attack_with_labels(
          b.model, b.ds, b.split, depth, {64, 32},
          bench::attack_config(p, derive_seed(seed, prefix + "-labels")));
      out.values[prefix + "/shadow_with_labels"] = {{"auc", labels.auc}};
      out.raw.push_back(mia_raw(spec.finding, prefix + "/shadow_with_labels", seed, labels));
      const MiaResult pseudo = shadow_attack_with_pseudolabels(
          b.model, b.ds, b.split, depth, k,
          bench::attack_config(p, derive_seed(seed, prefix + "-pseudo")));
      out.values[prefix + "/pseudo_labels"] = {{"auc", pseudo.auc},
                                               {"clustering_quality", pseudo.clustering_quality}};
      out.raw.push_back(mia_raw(spec.finding, prefix + "/pseudo_labels", seed, pseudo));
    } catch (const std::exception& e) {
      for (const auto& suffix : {"/embedding", "/shadow_with_labels", "/pseudo_labels"})
        out.row_errors[prefix + suffix] = e.what();
    }
  };
  try {
    const TargetBundle clusterable = bench::make_clusterable_blobs(p, seed);
    run_regime("clusterable", clusterable, clusterable.model.num_layers() - 1);
  } catch (const std::exception& e) {
    out.row_errors["clusterable/embedding"] = e.what();
  }
  try {
    const TargetBundle unclusterable = bench::make_unclusterable_blobs(p, seed);
    run_regime("unclusterable", unclusterable, 1);
  } catch (const std::exception& e) {
    out.row_errors["unclusterable/embedding"] = e.what();
  }
  return out;
}

inline SeedOutcome run_f6_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedOutcome out;
  const DeskScaleParams& p = spec.params;
  try {
    const bench::PiaBundle b = bench::make_pia_bundle(p, seed);
    const int deepest = b.model.num_layers() - 1;
    for (const std::string property : {"correlated", "uncorrelated"}) {
      for (const auto& [tag, depth] : std::vector<std::pair<std::string, int>>{
               {"shallow", 1}, {"deep", deepest}}) {
        const std::string row = property + "/" + tag;
        try {
          TrainConfig cfg = bench::attack_config(p, derive_seed(seed, "f6-" + row));
          const PiaResult r = run_pia(b.model, b.aux, property, depth, cfg, 0.5, &b.fit);
          out.values[row] = {{"attack_accuracy", r.attack_accuracy},
                             {"target_train_acc", r.target_train_acc},
                             {"target_test_acc", r.target_test_acc}};
          out.raw.push_back(nlohmann::json{{"finding", spec.finding},
                                           {"row", row},
                                           {"property", r.property},
                                           {"depth", r.depth},
                                           {"depth_tag", r.depth_tag},
                                           {"seed", r.seed},
                                           {"attack_accuracy", r.attack_accuracy},
                                           {"attack_train_accuracy", r.attack_train_accuracy},
                                           {"target_train_acc", r.target_train_acc},
                                           {"target_test_acc", r.target_test_acc}});
        } catch (const std::exception& e) {
          out.row_errors[row] = e.what();
        }
      }
    }
  } catch (const std::exception& e) {
    out.row_errors["correlated/shallow"] = e.what();
  }
  return out;
}

inline SeedOutcome run_def_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedOutcome out;
  const DeskScaleParams& p = spec.params;
  try {
    const bench::BowBundle b = bench::make_bow_bundle(p, seed);
    DistillConfig dcfg;
    dcfg.noise_scale = p.defense_sigma;
    dcfg.epochs = p.distill_epochs;
    dcfg.learning_rate = 2e-3;
    dcfg.seed = derive_seed(seed, "distill");
    const DistillResult distilled =
        noisy_self_distill(b.model, b.ds, b.split.member_indices, b.split.nonmember_indices, dcfg);

    DefenseAttackSuite suite;
    suite.sigma = p.defense_sigma;
    suite.mia_dataset = &b.ds;
    suite.mia_split = &b.split;
    suite.mia_cfg = bench::attack_config(p, derive_seed(seed, "def-mia"));
    suite.inversion_aux = &b.aux;
    suite.inversion_docs = &b.ds;
    suite.doc_indices = b.doc_indices;
    suite.from_depth = p.bow_from_depth;
    suite.mapping_cfg = bench::mapping_config(p, derive_seed(seed, "def-mapping"));
    suite.mapping_hidden = {};  // the tanh-layer inverse is near-linear
    suite.setup2_cfg.setup = InversionSetup::kSetup2;
    suite.setup2_cfg.steps = 1500;
    const DefenseReport report = evaluate_defense(b.model, distilled.student, suite);

    out.values["accuracy"] = {{"teacher", report.teacher_test_acc},
                              {"student", report.student_test_acc},
                              {"delta", report.student_test_acc - report.teacher_test_acc}};
    nlohmann::json deltas = nlohmann::json::object();
    for (const auto& d : report.deltas) {
      const std::string row = d.attack_id + "_" + d.metric;
      out.values[row] = {{"teacher", d.teacher_value},
                         {"student", d.student_value},
                         {"delta", d.delta}};
      deltas[row] = {{"teacher", d.teacher_value}, {"student", d.student_value}, {"delta", d.delta}};
    }
    out.raw.push_back(nlohmann::json{{"finding", spec.finding},
                                     {"seed", seed},
                                     {"sigma", report.sigma},
                                     {"teacher_acc", report.teacher_test_acc},
                                     {"student_acc", report.student_test_acc},
                                     {"teacher_train_acc", report.teacher_train_acc},
                                     {"student_train_acc", report.student_train_acc},
                                     {"attack_deltas", deltas}});
  } catch (const std::exception& e) {
    for (const auto& row : {"accuracy", "loss-mia_auc", "inversion-setup2_precision",
                            "inversion-setup2_recall", "inversion-setup2_f1"})
      out.row_errors[row] = e.what();
  }
  return out;
}

}  // namespace detail

// Executes the full pipeline (generate -> train target(s) -> attacks ->
// metrics) for each derived seed and aggregates medians into a table
// mirroring the corresponding table of the study. Row failures are
// recorded in place of aborting the run; replays with the same master seed
// are byte-identical, independent of thread schedule.
inline ExperimentReport run_finding(const ExperimentSpec& spec) {
  check_arg(spec.num_seeds >= 1, "run_finding: num_seeds must be >= 1");
  using Runner = detail::SeedOutcome (*)(const ExperimentSpec&, std::uint64_t);
  Runner runner = nullptr;
  std::vector<std::string> rows, columns;
  if (spec.finding == "F1") {
    runner = &detail::run_f1_seed;
    rows = {"overfit", "generalizing"};
    columns = {"train_acc", "test_acc", "overfit_gap", "auc_loss", "auc_embedding_deep"};
  } else if (spec.finding == "F2") {
    runner = &detail::run_f2_seed;
    rows = {"loss", "prediction", "embedding_deep"};
    columns = {"train_acc", "test_acc", "auc", "attack_accuracy"};
  } else if (spec.finding == "F3") {
    runner = &detail::run_f3_seed;
    rows = {"loss_baseline", "embedding@1", "embedding@2", "embedding@3"};
    columns = {"auc", "attack_accuracy"};
  } else if (spec.finding == "F4") {
    runner = &detail::run_f4_seed;
    rows = {"loss", "embedding_deep", "shadow_with_labels"};
    columns = {"auc"};
  } else if (spec.finding == "F5") {
    runner = &detail::run_f5_seed;
    rows = {"clusterable/shadow_with_labels", "clusterable/pseudo_labels", "clusterable/embedding",
            "unclusterable/pseudo_labels", "unclusterable/embedding",
            "unclusterable/shadow_with_labels"};
    columns = {"auc", "clustering_quality"};
  } else if (spec.finding == "F6") {
    runner = &detail::run_f6_seed;
    rows = {"correlated/shallow", "correlated/deep", "uncorrelated/shallow", "uncorrelated/deep"};
    columns = {"attack_accuracy", "target_train_acc", "target_test_acc"};
  } else if (spec.finding == "DEF") {
    runner = &detail::run_def_seed;
    rows = {"accuracy", "loss-mia_auc", "inversion-setup2_precision", "inversion-setup2_recall",
            "inversion-setup2_f1"};
    columns = {"teacher", "student", "delta"};
  } else {
    throw std::invalid_argument("run_finding: unknown finding '" + spec.finding +
                                "' (expected F1..F6 or DEF)");
  }

  std::vector<detail::SeedOutcome> outcomes(static_cast<std::size_t>(spec.num_seeds));
  parallel_for(
      static_cast<std::size_t>(spec.num_seeds),
      [&](std::size_t i) {
        const std::uint64_t seed =
            derive_seed(spec.master_seed, "run-" + std::to_string(i));
        outcomes[i] = runner(spec, seed);
      },
      spec.max_threads);
  return detail::aggregate(spec.finding, spec, rows, columns, outcomes);
}

}  // namespace embed_audit

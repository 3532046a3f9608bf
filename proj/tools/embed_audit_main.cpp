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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "embed_audit/embed_audit.hpp"

namespace embed_audit::cli {

using nlohmann::json;

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 42;
  bool quiet = false;
  std::vector<std::string> overrides;  // key.path=value pairs
};

void log_line(const GlobalOpts& opts, const std::string& msg) {
  if (!opts.quiet) std::cerr << "[embed-audit] " << msg << "\n";
}

json load_config(const GlobalOpts& opts) {
  if (opts.config_path.empty()) return json::object();
  std::ifstream in(opts.config_path);
  if (!in.good()) throw std::invalid_argument("config: cannot open " + opts.config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what(), 0);
  }
  check_arg(j.is_object(), "config: top-level value must be a JSON object");
  return j;
}

// key.path=value assignments; values parse as JSON when possible and fall
// back to strings.
void apply_overrides(json& config, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    check_arg(eq != std::string::npos && eq > 0, "override '" + item + "' must be key=value");
    const std::string path = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = value;
    }
    json* node = &config;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot - start);
      check_arg(!key.empty(), "override '" + item + "' has an empty key segment");
      if (dot == std::string::npos) {
        (*node)[key] = parsed;
        break;
      }
      node = &(*node)[key];
      check_arg(node->is_object() || node->is_null(), "override '" + path + "' crosses a non-object");
      start = dot + 1;
    }
  }
}

// Nested-object merge: overlay wins, object values merge recursively.
void deep_merge(json& base, const json& overlay) {
  for (const auto& [key, value] : overlay.items()) {
    if (value.is_object() && base.contains(key) && base.at(key).is_object())
      deep_merge(base[key], value);
    else
      base[key] = value;
  }
}

void check_allowed_keys(const json& j, const std::vector<std::string>& allowed,
                        const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw std::invalid_argument(context + ": unknown field '" + key + "'");
  }
}

void ensure_out_dir(const GlobalOpts& opts) {
  std::filesystem::create_directories(opts.out_dir);
}

void write_file(const GlobalOpts& opts, const std::string& name, const std::string& content) {
  const auto path = std::filesystem::path(opts.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  check_arg(out.good(), "cannot open output file " + path.string());
  out << content;
  check_arg(out.good(), "write failed for " + path.string());
  log_line(opts, "wrote " + path.string());
}

void write_effective_config(const GlobalOpts& opts, const std::string& subcommand,
                            const json& config) {
  const json effective{{"subcommand", subcommand},
                       {"seed", opts.seed},
                       {"version", kVersion},
                       {"config", config}};
  write_file(opts, "effective_config.json", effective.dump(2) + "\n");
}

// --- dataset / target construction from config ----------------------------

json dataset_defaults() {
  return json{{"generator", "purchase"}, {"n", 2000},      {"dim", 48},
              {"classes", 50},           {"flip_prob", 0.2}};
}

LabeledDataset dataset_from_config(const json& spec, std::uint64_t seed) {
  if (spec.contains("csv")) {
    check_allowed_keys(spec, {"csv"}, "dataset");
    return load_csv(spec.at("csv").get<std::string>());
  }
  const std::string generator = spec.value("generator", "purchase");
  if (generator == "purchase") {
    check_allowed_keys(spec, {"generator", "n", "dim", "classes", "flip_prob"}, "dataset");
    return gen_purchase_like(spec.value("n", 2000), spec.value("dim", 48),
                             spec.value("classes", 50), spec.value("flip_prob", 0.2), seed);
  }
  if (generator == "blobs") {
    check_allowed_keys(spec, {"generator", "n", "dim", "classes", "spread", "properties"},
                       "dataset");
    std::vector<PropertySpec> properties;
    if (spec.contains("properties")) {
      for (const auto& p : spec.at("properties")) {
        check_allowed_keys(p, {"name", "correlation"}, "dataset.properties");
        properties.push_back({p.at("name").get<std::string>(), p.value("correlation", 1.0)});
      }
    }
    return gen_property_blobs(spec.value("n", 1800), spec.value("dim", 32),
                              spec.value("classes", 4), properties, spec.value("spread", 1.8),
                              seed);
  }
  if (generator == "bow") {
    check_allowed_keys(spec, {"generator", "vocab", "doc_len", "n", "classes"}, "dataset");
    return gen_bow_text(spec.value("vocab", 50), spec.value("doc_len", 5), spec.value("n", 1500),
                        spec.value("classes", 2), seed);
  }
  throw std::invalid_argument("dataset.generator: unknown generator '" + generator +
                              "' (expected purchase, blobs or bow)");
}

TrainConfig train_config_from(const json& spec, std::uint64_t seed, int default_epochs) {
  check_allowed_keys(spec, {"epochs", "batch_size", "learning_rate", "optimizer", "l2_penalty"},
                     "train");
  TrainConfig cfg;
  cfg.epochs = spec.value("epochs", default_epochs);
  cfg.batch_size = spec.value("batch_size", 32);
  cfg.learning_rate = spec.value("learning_rate", 2e-3);
  cfg.l2_penalty = spec.value("l2_penalty", 0.0);
  const std::string optimizer = spec.value("optimizer", "adam");
  if (optimizer == "adam")
    cfg.optimizer = Optimizer::kAdam;
  else if (optimizer == "sgd")
    cfg.optimizer = Optimizer::kSgd;
  else
    throw std::invalid_argument("train.optimizer: unknown optimizer '" + optimizer + "'");
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

struct BuiltTarget {
  Mlp model;
  FitReport fit;
  bool fit_valid = false;
};

BuiltTarget target_from_config(const json& spec, const LabeledDataset& ds,
                               const MembershipSplit& split, std::uint64_t seed) {
  check_allowed_keys(spec, {"checkpoint", "arch", "train"}, "target");
  BuiltTarget out;
  if (spec.contains("checkpoint")) {
    out.model = Mlp::load(spec.at("checkpoint").get<std::string>());
    check_arg(out.model.input_width() == static_cast<int>(ds.width()),
              "target.checkpoint: input width does not match the dataset");
    return out;
  }
  const json arch = spec.value("arch", json::object());
  check_allowed_keys(arch, {"hidden", "activation"}, "target.arch");
  std::vector<int> sizes = {static_cast<int>(ds.width())};
  const std::vector<int> hidden = arch.value("hidden", std::vector<int>{64, 48, 32});
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(ds.num_classes);
  const Activation act = activation_from_string(arch.value("activation", std::string("tanh")));
  const TrainConfig cfg =
      train_config_from(spec.value("train", json::object()), derive_seed(seed, "target"), 100);
  auto [model, fit] = train_target(ds, split.member_indices, split.nonmember_indices, sizes, act, cfg);
  out.model = std::move(model);
  out.fit = std::move(fit);
  out.fit_valid = true;
  return out;
}

MembershipSplit split_from_config(const json& spec, const LabeledDataset& ds,
                                  std::uint64_t seed) {
  check_allowed_keys(spec, {"member_frac", "attack_train_frac"}, "split");
  return split_membership(ds, spec.value("member_frac", 0.5),
                          spec.value("attack_train_frac", 0.5), seed);
}

// --- subcommands -----------------------------------------------------------

void cmd_gen_data(const GlobalOpts& opts, json config) {
  json merged = dataset_defaults();
  deep_merge(merged, config);
  const LabeledDataset ds = dataset_from_config(merged, derive_seed(opts.seed, "data"));
  ensure_out_dir(opts);
  save_csv(ds, (std::filesystem::path(opts.out_dir) / "dataset.csv").string());
  log_line(opts, "wrote " + (std::filesystem::path(opts.out_dir) / "dataset.csv").string());
  write_effective_config(opts, "gen-data", merged);
}

json fit_report_json(const FitReport& fit) {
  return json{{"train_accuracy", fit.train_accuracy},
              {"test_accuracy", fit.test_accuracy},
              {"overfit_gap", fit.overfit_gap},
              {"epoch_loss", fit.epoch_loss}};
}

void cmd_train_target(const GlobalOpts& opts, json config) {
  check_allowed_keys(config, {"dataset", "split", "target"}, "config");
  const LabeledDataset ds = dataset_from_config(config.value("dataset", dataset_defaults()),
                                                derive_seed(opts.seed, "data"));
  const MembershipSplit split = split_from_config(config.value("split", json::object()), ds,
                                                  derive_seed(opts.seed, "split"));
  const BuiltTarget target =
      target_from_config(config.value("target", json::object()), ds, split, opts.seed);
  ensure_out_dir(opts);
  target.model.save((std::filesystem::path(opts.out_dir) / "model.bin").string());
  log_line(opts, "wrote " + (std::filesystem::path(opts.out_dir) / "model.bin").string());
  write_file(opts, "fit_report.json", fit_report_json(target.fit).dump(2) + "\n");
  const json split_json{{"member_indices", split.member_indices},
                        {"nonmember_indices", split.nonmember_indices},
                        {"attack_train_members", split.attack_train_members},
                        {"attack_train_nonmembers", split.attack_train_nonmembers},
                        {"attack_eval_members", split.attack_eval_members},
                        {"attack_eval_nonmembers", split.attack_eval_nonmembers}};
  write_file(opts, "split.json", split_json.dump(2) + "\n");
  write_effective_config(opts, "train-target", config);
}

json mia_result_json(const std::string& finding, const MiaResult& result) {
  json j{{"finding", finding},
         {"setting", result.setting},
         {"depth", result.depth},
         {"seed", result.seed},
         {"auc", result.auc},
         {"attack_accuracy", result.attack_accuracy}};
  if (result.clustering_quality >= 0.0) j["clustering_quality"] = result.clustering_quality;
  return j;
}

void cmd_attack_mia(const GlobalOpts& opts, json config, const std::string& setting_flag,
                    int depth_flag) {
  check_allowed_keys(config, {"dataset", "split", "target", "attack"}, "config");
  json attack = config.value("attack", json::object());
  check_allowed_keys(attack, {"setting", "depth", "strategy", "k", "epochs", "learning_rate"},
                     "attack");
  if (!setting_flag.empty()) attack["setting"] = setting_flag;
  if (depth_flag >= 0) attack["depth"] = depth_flag;

  const LabeledDataset ds = dataset_from_config(config.value("dataset", dataset_defaults()),
                                                derive_seed(opts.seed, "data"));
  const MembershipSplit split = split_from_config(config.value("split", json::object()), ds,
                                                  derive_seed(opts.seed, "split"));
  const BuiltTarget target =
      target_from_config(config.value("target", json::object()), ds, split, opts.seed);

  const std::string setting = attack.value("setting", "loss");
  const int deepest = target.model.num_layers() - 1;
  const int depth = attack.value("depth", deepest);
  TrainConfig attack_cfg;
  attack_cfg.epochs = attack.value("epochs", 60);
  attack_cfg.batch_size = 32;
  attack_cfg.learning_rate = attack.value("learning_rate", 1e-3);
  attack_cfg.seed = derive_seed(opts.seed, "attack-run");

  const std::string strategy = attack.value("strategy", "direct");
  MiaResult result;
  if (strategy == "direct") {
    AttackFeatureSpec spec;
    if (setting == "embedding")
      spec = {MiaSetting::kEmbedding, depth};
    else if (setting == "prediction")
      spec = {MiaSetting::kPrediction, -1};
    else if (setting == "loss")
      spec = {MiaSetting::kLoss, -1};
    else
      throw std::invalid_argument("attack.setting: unknown setting '" + setting +
                                  "' (expected embedding, prediction or loss)");
    result = run_mia(build_attack_features(target.model, ds, split, spec), attack_cfg);
  } else if (strategy == "shadow_labels") {
    result = shadow_attack_with_labels(target.model, ds, split, depth, {64, 32}, attack_cfg);
  } else if (strategy == "shadow_pseudo") {
    result = shadow_attack_with_pseudolabels(target.model, ds, split, depth,
                                             attack.value("k", ds.num_classes), attack_cfg);
  } else {
    throw std::invalid_argument("attack.strategy: unknown strategy '" + strategy +
                                "' (expected direct, shadow_labels or shadow_pseudo)");
  }
  result.seed = opts.seed;

  ensure_out_dir(opts);
  write_file(opts, "mia_result.json", mia_result_json("adhoc", result).dump(2) + "\n");
  if (target.fit_valid) write_file(opts, "fit_report.json", fit_report_json(target.fit).dump(2) + "\n");
  write_effective_config(opts, "attack-mia", config);
}

json pia_defaults() {
  return json{{"dataset",
               {{"generator", "blobs"},
                {"n", 2800},
                {"dim", 48},
                {"classes", 3},
                {"spread", 0.6},
                {"properties",
                 json::array({{{"name", "correlated"}, {"correlation", 0.9}},
                              {{"name", "uncorrelated"}, {"correlation", 0.0}}})}}},
              {"target", {{"arch", {{"hidden", {64, 32, 12}}, {"activation", "tanh"}}},
                          {"train", {{"epochs", 60}}}}}};
}

void cmd_attack_pia(const GlobalOpts& opts, json config, int depth_flag) {
  json merged = pia_defaults();
  deep_merge(merged, config);
  check_allowed_keys(merged, {"dataset", "target", "attack"}, "config");
  json attack = merged.value("attack", json::object());
  check_allowed_keys(attack, {"property", "depth", "epochs", "learning_rate", "eval_fraction"},
                     "attack");
  if (depth_flag >= 0) attack["depth"] = depth_flag;

  const LabeledDataset big = dataset_from_config(merged.at("dataset"),
                                                 derive_seed(opts.seed, "data"));
  check_arg(!big.property_labels.empty(), "attack-pia: dataset carries no property labels");
  // target trains on the first 2/7, tests on the next 1/7; the rest is the
  // attacker's auxiliary data
  const int n = static_cast<int>(big.size());
  std::vector<int> train_idx, test_idx, aux_idx;
  for (int i = 0; i < 2 * n / 7; ++i) train_idx.push_back(i);
  for (int i = 2 * n / 7; i < 3 * n / 7; ++i) test_idx.push_back(i);
  for (int i = 3 * n / 7; i < n; ++i) aux_idx.push_back(i);
  check_arg(!train_idx.empty() && !test_idx.empty() && !aux_idx.empty(),
            "attack-pia: dataset too small to split");

  const json target_spec = merged.value("target", json::object());
  check_allowed_keys(target_spec, {"arch", "train"}, "target");
  const json arch = target_spec.value("arch", json::object());
  std::vector<int> sizes = {static_cast<int>(big.width())};
  const std::vector<int> hidden = arch.value("hidden", std::vector<int>{64, 32, 12});
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(big.num_classes);
  const Activation act = activation_from_string(arch.value("activation", std::string("tanh")));
  const TrainConfig cfg = train_config_from(target_spec.value("train", json::object()),
                                            derive_seed(opts.seed, "target"), 60);
  const auto [model, fit] = train_target(big, train_idx, test_idx, sizes, act, cfg);
  const LabeledDataset aux = subset(big, aux_idx);

  const std::string property =
      attack.value("property", big.property_labels.begin()->first);
  const int depth = attack.value("depth", 1);
  TrainConfig attack_cfg;
  attack_cfg.epochs = attack.value("epochs", 60);
  attack_cfg.batch_size = 32;
  attack_cfg.learning_rate = attack.value("learning_rate", 1e-3);
  attack_cfg.seed = derive_seed(opts.seed, "attack-run");
  const PiaResult result = run_pia(model, aux, property, depth, attack_cfg,
                                   attack.value("eval_fraction", 0.5), &fit);

  ensure_out_dir(opts);
  const json result_json{{"property", result.property},
                         {"depth", result.depth},
                         {"depth_tag", result.depth_tag},
                         {"attack_accuracy", result.attack_accuracy},
                         {"attack_train_accuracy", result.attack_train_accuracy},
                         {"target_train_acc", result.target_train_acc},
                         {"target_test_acc", result.target_test_acc},
                         {"seed", opts.seed}};
  write_file(opts, "pia_result.json", result_json.dump(2) + "\n");
  write_effective_config(opts, "attack-pia", merged);
}

json invert_defaults() {
  return json{{"benchmark",
               {{"vocab", 50}, {"doc_len", 5}, {"n", 1500}, {"aux_n", 4000},
                {"target_epochs", 15}, {"from_depth", 1}, {"num_docs", 20},
                {"mapping_epochs", 300}}},
              {"setup", "setup2"},
              {"temperature", 0.05},
              {"lambda", 0.1},
              {"tau", 0.01},
              {"learning_rate", 1e-3},
              {"steps", 1500}};
}

void cmd_invert(const GlobalOpts& opts, json config, const std::string& setup_flag) {
  json merged = invert_defaults();
  deep_merge(merged, config);
  check_allowed_keys(merged,
                     {"benchmark", "setup", "temperature", "lambda", "tau", "learning_rate",
                      "steps"},
                     "config");
  if (!setup_flag.empty()) merged["setup"] = setup_flag;
  const json bench_spec = merged.at("benchmark");
  check_allowed_keys(bench_spec,
                     {"vocab", "doc_len", "n", "aux_n", "target_epochs", "from_depth",
                      "num_docs", "mapping_epochs"},
                     "benchmark");

  DeskScaleParams p;
  p.bow_vocab = bench_spec.value("vocab", 50);
  p.bow_doc_len = bench_spec.value("doc_len", 5);
  p.bow_n = bench_spec.value("n", 1500);
  p.bow_aux_n = bench_spec.value("aux_n", 4000);
  p.bow_epochs = bench_spec.value("target_epochs", 15);
  p.bow_from_depth = bench_spec.value("from_depth", 1);
  p.bow_num_docs = bench_spec.value("num_docs", 20);
  p.mapping_epochs = bench_spec.value("mapping_epochs", 300);
  const bench::BowBundle bundle = bench::make_bow_bundle(p, derive_seed(opts.seed, "bundle"));

  InversionConfig inv;
  inv.setup = inversion_setup_from_string(merged.at("setup").get<std::string>());
  inv.temperature = merged.value("temperature", 0.05);
  inv.l1_weight = merged.value("lambda", 0.1);
  inv.sparsity_threshold = merged.value("tau", 0.01);
  inv.learning_rate = merged.value("learning_rate", 1e-3);
  inv.steps = merged.value("steps", 1500);
  inv.seed = derive_seed(opts.seed, "invert");
  inv.known_doc_len = p.bow_doc_len;
  inv.validate();

  ensure_out_dir(opts);
  std::string jsonl;
  json summary{{"setup", to_string(inv.setup)}, {"seed", opts.seed}, {"steps", inv.steps}};

  if (inv.setup == InversionSetup::kDirect) {
    std::vector<double> residuals;
    for (int doc : bundle.doc_indices) {
      const auto row = static_cast<std::size_t>(doc);
      std::vector<double> x_star = bundle.ds.features.row(row);
      InversionConfig direct_cfg = inv;
      direct_cfg.learning_rate = std::max(inv.learning_rate, 0.1);
      const DirectInversion result =
          invert_direct(bundle.model, x_star, p.bow_from_depth, direct_cfg);
      residuals.push_back(result.residual);
      jsonl += json{{"setup", "direct"}, {"steps", result.steps_run}, {"seed", inv.seed},
                    {"doc", doc}, {"residual", result.residual}}
                   .dump() +
               "\n";
    }
    summary["median_residual"] = median(residuals);
  } else {
    const Tensor vocab = [&] {
      Tensor v({static_cast<std::size_t>(p.bow_vocab), static_cast<std::size_t>(p.bow_vocab)});
      for (std::size_t i = 0; i < v.rows(); ++i) v(i, i) = 1.0;
      return v;
    }();
    auto [mapping, mapping_mse] =
        train_mapping(bundle.model, bundle.aux, p.bow_from_depth, 0,
                      bench::mapping_config(p, derive_seed(opts.seed, "mapping")), {});
    std::vector<double> precisions, recalls;
    for (int doc : bundle.doc_indices) {
      const auto row = static_cast<std::size_t>(doc);
      InversionProblem prob;
      prob.model = &bundle.model;
      prob.vocab = vocab;
      prob.target_output = bundle.model.embed_one(bundle.ds.features.row_ptr(row), p.bow_from_depth);
      prob.from_depth = p.bow_from_depth;
      prob.to_depth = 0;
      prob.mapping = &mapping;
      const TokenRecovery rec = inv.setup == InversionSetup::kSetup1 ? invert_setup1(prob, inv)
                                                                     : invert_setup2(prob, inv);
      const std::set<int> truth(bundle.ds.token_sets[row].begin(),
                                bundle.ds.token_sets[row].end());
      const PrecisionRecall pr = score_inversion(rec.tokens, truth);
      precisions.push_back(pr.precision);
      recalls.push_back(pr.recall);
      json record{{"setup", to_string(inv.setup)}, {"steps", inv.steps}, {"seed", inv.seed},
                  {"doc", doc}, {"precision", pr.precision}, {"recall", pr.recall},
                  {"residual", rec.objective}, {"argmax_token", rec.argmax_token}};
      if (inv.setup == InversionSetup::kSetup1) record["T"] = inv.temperature;
      if (inv.setup == InversionSetup::kSetup2) {
        record["lambda"] = inv.l1_weight;
        record["tau"] = inv.sparsity_threshold;
      }
      jsonl += record.dump() + "\n";
    }
    summary["mapping_mse"] = mapping_mse;
    summary["mean_precision"] = mean(precisions);
    summary["mean_recall"] = mean(recalls);
  }
  write_file(opts, "inversion_results.jsonl", jsonl);
  write_file(opts, "inversion_summary.json", summary.dump(2) + "\n");
  write_effective_config(opts, "invert", merged);
}

void apply_desk_params(DeskScaleParams& p, const json& j);

void cmd_defend(const GlobalOpts& opts, json config, double sigma_flag) {
  json merged = json{{"sigma", 0.1},
                     {"distill", {{"epochs", 120}, {"temperature", 1.0}, {"learning_rate", 2e-3}}}};
  deep_merge(merged, config);
  check_allowed_keys(merged, {"sigma", "distill", "params"}, "config");
  if (sigma_flag >= 0.0) merged["sigma"] = sigma_flag;
  const json distill = merged.value("distill", json::object());
  check_allowed_keys(distill, {"epochs", "temperature", "learning_rate"}, "distill");

  DeskScaleParams p;
  if (merged.contains("params")) apply_desk_params(p, merged.at("params"));
  p.defense_sigma = merged.at("sigma").get<double>();
  p.distill_epochs = distill.value("epochs", 120);

  const bench::BowBundle b = bench::make_bow_bundle(p, derive_seed(opts.seed, "bundle"));
  DistillConfig dcfg;
  dcfg.noise_scale = p.defense_sigma;
  dcfg.temperature = distill.value("temperature", 1.0);
  dcfg.epochs = p.distill_epochs;
  dcfg.learning_rate = distill.value("learning_rate", 2e-3);
  dcfg.seed = derive_seed(opts.seed, "distill");
  const DistillResult student =
      noisy_self_distill(b.model, b.ds, b.split.member_indices, b.split.nonmember_indices, dcfg);

  DefenseAttackSuite suite;
  suite.sigma = p.defense_sigma;
  suite.mia_dataset = &b.ds;
  suite.mia_split = &b.split;
  suite.mia_cfg = bench::attack_config(p, derive_seed(opts.seed, "def-mia"));
  suite.inversion_aux = &b.aux;
  suite.inversion_docs = &b.ds;
  suite.doc_indices = b.doc_indices;
  suite.from_depth = p.bow_from_depth;
  suite.mapping_cfg = bench::mapping_config(p, derive_seed(opts.seed, "def-mapping"));
  suite.mapping_hidden = {};
  suite.setup2_cfg.setup = InversionSetup::kSetup2;
  suite.setup2_cfg.steps = 1500;
  const DefenseReport report = evaluate_defense(b.model, student.student, suite);

  json deltas = json::object();
  for (const auto& d : report.deltas)
    deltas[d.attack_id + "_" + d.metric] = {
        {"teacher", d.teacher_value}, {"student", d.student_value}, {"delta", d.delta}};
  const json report_json{{"sigma", report.sigma},
                         {"teacher_acc", report.teacher_test_acc},
                         {"student_acc", report.student_test_acc},
                         {"teacher_train_acc", report.teacher_train_acc},
                         {"student_train_acc", report.student_train_acc},
                         {"attack_deltas", deltas},
                         {"seed", opts.seed}};
  ensure_out_dir(opts);
  write_file(opts, "defense_report.json", report_json.dump(2) + "\n");
  write_effective_config(opts, "defend", merged);
}

void apply_desk_params(DeskScaleParams& p, const json& j) {
  const std::map<std::string, std::function<void(const json&)>> setters = {
      {"overfit_n", [&](const json& v) { p.overfit_n = v.get<int>(); }},
      {"overfit_dim", [&](const json& v) { p.overfit_dim = v.get<int>(); }},
      {"overfit_classes", [&](const json& v) { p.overfit_classes = v.get<int>(); }},
      {"overfit_flip", [&](const json& v) { p.overfit_flip = v.get<double>(); }},
      {"overfit_epochs", [&](const json& v) { p.overfit_epochs = v.get<int>(); }},
      {"general_n", [&](const json& v) { p.general_n = v.get<int>(); }},
      {"general_flip", [&](const json& v) { p.general_flip = v.get<double>(); }},
      {"general_epochs", [&](const json& v) { p.general_epochs = v.get<int>(); }},
      {"general_l2", [&](const json& v) { p.general_l2 = v.get<double>(); }},
      {"clusterable_n", [&](const json& v) { p.clusterable_n = v.get<int>(); }},
      {"clusterable_spread", [&](const json& v) { p.clusterable_spread = v.get<double>(); }},
      {"clusterable_epochs", [&](const json& v) { p.clusterable_epochs = v.get<int>(); }},
      {"unclusterable_n", [&](const json& v) { p.unclusterable_n = v.get<int>(); }},
      {"unclusterable_spread", [&](const json& v) { p.unclusterable_spread = v.get<double>(); }},
      {"unclusterable_epochs", [&](const json& v) { p.unclusterable_epochs = v.get<int>(); }},
      {"pia_n", [&](const json& v) { p.pia_n = v.get<int>(); }},
      {"pia_spread", [&](const json& v) { p.pia_spread = v.get<double>(); }},
      {"pia_correlation", [&](const json& v) { p.pia_correlation = v.get<double>(); }},
      {"pia_target_epochs", [&](const json& v) { p.pia_target_epochs = v.get<int>(); }},
      {"bow_vocab", [&](const json& v) { p.bow_vocab = v.get<int>(); }},
      {"bow_doc_len", [&](const json& v) { p.bow_doc_len = v.get<int>(); }},
      {"bow_n", [&](const json& v) { p.bow_n = v.get<int>(); }},
      {"bow_aux_n", [&](const json& v) { p.bow_aux_n = v.get<int>(); }},
      {"bow_epochs", [&](const json& v) { p.bow_epochs = v.get<int>(); }},
      {"bow_from_depth", [&](const json& v) { p.bow_from_depth = v.get<int>(); }},
      {"bow_num_docs", [&](const json& v) { p.bow_num_docs = v.get<int>(); }},
      {"mapping_epochs", [&](const json& v) { p.mapping_epochs = v.get<int>(); }},
      {"defense_sigma", [&](const json& v) { p.defense_sigma = v.get<double>(); }},
      {"distill_epochs", [&](const json& v) { p.distill_epochs = v.get<int>(); }},
      {"attack_epochs", [&](const json& v) { p.attack_epochs = v.get<int>(); }},
      {"attack_lr", [&](const json& v) { p.attack_lr = v.get<double>(); }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end())
      throw std::invalid_argument("params: unknown field '" + key + "'");
    it->second(value);
  }
}

void cmd_run_finding(const GlobalOpts& opts, json config, const std::string& finding_flag) {
  check_allowed_keys(config, {"finding", "num_seeds", "params"}, "config");
  ExperimentSpec spec;
  spec.finding = config.value("finding", "F1");
  if (!finding_flag.empty()) spec.finding = finding_flag;
  spec.master_seed = opts.seed;
  spec.num_seeds = config.value("num_seeds", 5);
  if (config.contains("params")) apply_desk_params(spec.params, config.at("params"));

  const ExperimentReport report = run_finding(spec);
  ensure_out_dir(opts);
  write_file(opts, "report.md", report.to_markdown());
  write_file(opts, "report.csv", report.to_csv());
  write_file(opts, "raw_runs.jsonl", report.raw_jsonl());
  write_file(opts, "report.json", report.to_json().dump(2) + "\n");
  json effective = config;
  effective["finding"] = spec.finding;
  effective["num_seeds"] = spec.num_seeds;
  write_effective_config(opts, "run-finding", effective);
}

void cmd_report(const GlobalOpts& opts, json config) {
  check_allowed_keys(config, {"input"}, "config");
  check_arg(config.contains("input"), "config: field 'input' (path to report.json) is required");
  const std::string input = config.at("input").get<std::string>();
  std::ifstream in(input);
  if (!in.good()) throw std::invalid_argument("input: cannot open " + input);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("input: ") + e.what(), 0);
  }
  ExperimentReport report;
  report.finding = j.at("finding").get<std::string>();
  report.master_seed = j.at("master_seed").get<std::uint64_t>();
  report.num_seeds = j.at("num_seeds").get<int>();
  report.version = j.at("version").get<std::string>();
  report.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& row : j.at("rows")) {
    ReportRow r;
    r.label = row.at("label").get<std::string>();
    for (const auto& [col, value] : row.at("cells").items()) r.cells[col] = value.get<double>();
    if (row.contains("error")) r.error = row.at("error").get<std::string>();
    report.rows.push_back(std::move(r));
  }
  if (j.contains("raw_runs"))
    for (const auto& raw : j.at("raw_runs")) report.raw_runs.push_back(raw);
  ensure_out_dir(opts);
  write_file(opts, "report.md", report.to_markdown());
  write_file(opts, "report.csv", report.to_csv());
  write_effective_config(opts, "report", config);
}

int run(int argc, char** argv) {
  CLI::App app{"embed-audit: desk-scale auditing of membership, property and inversion leakage"};
  app.require_subcommand(1);

  GlobalOpts opts;
  std::string setting_flag, setup_flag, finding_flag;
  int depth_flag = -1;
  double sigma_flag = -1.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "JSON config file");
    sub->add_option("--seed", opts.seed, "master seed (all randomness derives from it)");
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_flag("--quiet", opts.quiet, "suppress log lines");
    sub->add_option("--set", opts.overrides, "config override key.path=value (repeatable)");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset as CSV");
  add_common(gen);
  CLI::App* train = app.add_subcommand("train-target", "train a target classifier checkpoint");
  add_common(train);
  CLI::App* mia = app.add_subcommand("attack-mia", "run a membership inference attack");
  add_common(mia);
  mia->add_option("--setting", setting_flag, "attack setting: embedding, prediction or loss");
  mia->add_option("--depth", depth_flag, "embedding tap depth");
  CLI::App* pia = app.add_subcommand("attack-pia", "run a property inference attack");
  add_common(pia);
  pia->add_option("--depth", depth_flag, "embedding tap depth");
  CLI::App* inv = app.add_subcommand("invert", "run a whitebox inversion attack");
  add_common(inv);
  inv->add_option("--setup", setup_flag, "inversion setup: setup1, setup2 or direct");
  CLI::App* defend = app.add_subcommand("defend", "noisy self-distillation defense evaluation");
  add_common(defend);
  defend->add_option("--sigma", sigma_flag, "soft-label noise scale");
  CLI::App* finding = app.add_subcommand("run-finding", "run a canned finding suite (F1..F6, DEF)");
  add_common(finding);
  finding->add_option("--finding", finding_flag, "finding id: F1..F6 or DEF");
  CLI::App* report = app.add_subcommand("report", "re-render tables from a saved report.json");
  add_common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    json config = load_config(opts);
    apply_overrides(config, opts.overrides);
    if (gen->parsed())
      cmd_gen_data(opts, config);
    else if (train->parsed())
      cmd_train_target(opts, config);
    else if (mia->parsed())
      cmd_attack_mia(opts, config, setting_flag, depth_flag);
    else if (pia->parsed())
      cmd_attack_pia(opts, config, depth_flag);
    else if (inv->parsed())
      cmd_invert(opts, config, setup_flag);
    else if (defend->parsed())
      cmd_defend(opts, config, sigma_flag);
    else if (finding->parsed())
      cmd_run_finding(opts, config, finding_flag);
    else if (report->parsed())
      cmd_report(opts, config);
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace embed_audit::cli

int main(int argc, char** argv) { return embed_audit::cli::run(argc, argv); }

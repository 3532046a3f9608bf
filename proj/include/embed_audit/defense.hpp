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
#include "embed_audit/inversion.hpp"
#include "embed_audit/mia.hpp"
#include "embed_audit/network.hpp"

namespace embed_audit {

struct DistillConfig {
  double noise_scale = 0.1;  // sigma
  double temperature = 1.0;  // soft-label temperature
  int epochs = 60;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const {
    check_arg(noise_scale >= 0.0, "DistillConfig: noise_scale must be >= 0");
    check_arg(temperature > 0.0, "DistillConfig: temperature must be positive");
    check_arg(epochs >= 0, "DistillConfig: epochs must be >= 0");
  }
};

struct DistillResult {
  Mlp student;
  FitReport report;       // accuracy against the true labels
  Tensor soft_labels;     // the perturbed training targets actually used
};

// Noisy self-distillation: the student shares the teacher's architecture
// and trains against the teacher's softmax outputs perturbed by zero-mean
// Gaussian noise of scale sigma, clamped to >= 0 and renormalized so every
// target stays a probability vector.
inline DistillResult noisy_self_distill(const Mlp& teacher, const LabeledDataset& ds,
                                        const std::vector<int>& train_idx,
                                        const std::vector<int>& test_idx,
                                        const DistillConfig& cfg) {
  cfg.validate();
  check_arg(!train_idx.empty(), "noisy_self_distill: empty training split");
  check_arg(static_cast<int>(ds.width()) == teacher.input_width(),
            "noisy_self_distill: dataset width does not match the teacher");

  const auto classes = static_cast<std::size_t>(teacher.output_width());
  Tensor soft({ds.size(), classes});
  Rng noise_rng = Rng(cfg.seed).stream("soft-noise");
  for (int i : train_idx) {
    const auto row = static_cast<std::size_t>(i);
    std::vector<double> logits = teacher.embed_one(ds.features.row_ptr(row), teacher.num_layers());
    for (auto& v : logits) v /= cfg.temperature;
    softmax_inplace(logits.data(), logits.size());
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      double q = logits[c] + cfg.noise_scale * noise_rng.normal();
      q = std::max(q, 0.0);
      soft(row, c) = q;
      sum += q;
    }
    if (sum < 1e-12) {
      for (std::size_t c = 0; c < classes; ++c) soft(row, c) = 1.0 / static_cast<double>(classes);
    } else {
      for (std::size_t c = 0; c < classes; ++c) soft(row, c) /= sum;
    }
  }

  DistillResult result;
  result.student = Mlp(teacher.layer_sizes(), teacher.activation(),
                       derive_seed(cfg.seed, "student-init"));
  TrainConfig train_cfg;
  train_cfg.epochs = cfg.epochs;
  train_cfg.batch_size = cfg.batch_size;
  train_cfg.learning_rate = cfg.learning_rate;
  train_cfg.seed = derive_seed(cfg.seed, "student-train");
  result.report.epoch_loss = train_soft_classifier(result.student, ds.features, soft, train_idx,
                                                   cfg.temperature, train_cfg);
  result.report.train_accuracy = evaluate_accuracy(result.student, ds.features, ds.labels, train_idx);
  result.report.test_accuracy =
      test_idx.empty() ? 0.0 : evaluate_accuracy(result.student, ds.features, ds.labels, test_idx);
  result.report.overfit_gap = result.report.train_accuracy - result.report.test_accuracy;
  result.soft_labels = std::move(soft);
  return result;
}

// Which attacks the paired evaluation reruns and with what data. Identical
// seeds run against both models so the deltas isolate the defense.
struct DefenseAttackSuite {
  double sigma = 0.0;  // recorded in the report

  const LabeledDataset* mia_dataset = nullptr;
  const MembershipSplit* mia_split = nullptr;
  TrainConfig mia_cfg;
  bool run_loss_mia = true;

  const LabeledDataset* inversion_aux = nullptr;
  const LabeledDataset* inversion_docs = nullptr;
  std::vector<int> doc_indices;
  int from_depth = 2;
  TrainConfig mapping_cfg;
  std::vector<int> mapping_hidden;
  InversionConfig setup2_cfg;
  bool run_setup2 = true;
};

struct AttackDelta {
  std::string attack_id;
  std::string metric;
  double teacher_value = 0.0;
  double student_value = 0.0;
  double delta = 0.0;  // student - teacher
};

struct DefenseReport {
  double sigma = 0.0;
  double teacher_train_acc = 0.0;
  double teacher_test_acc = 0.0;
  double student_train_acc = 0.0;
  double student_test_acc = 0.0;
  std::vector<AttackDelta> deltas;
};

// Reruns the named attacks against teacher and student with identical
// seeds and emits paired metric deltas.
inline DefenseReport evaluate_defense(const Mlp& teacher, const Mlp& student,
                                      const DefenseAttackSuite& suite) {
  check_arg(teacher.input_width() == student.input_width() &&
                teacher.output_width() == student.output_width(),
            "evaluate_defense: teacher and student must share input/output dimensions");
  check_arg(suite.mia_dataset != nullptr && suite.mia_split != nullptr,
            "evaluate_defense: mia_dataset and mia_split are required");

  DefenseReport report;
  report.sigma = suite.sigma;
  const LabeledDataset& ds = *suite.mia_dataset;
  const MembershipSplit& split = *suite.mia_split;
  report.teacher_train_acc = evaluate_accuracy(teacher, ds.features, ds.labels, split.member_indices);
  report.teacher_test_acc =
      evaluate_accuracy(teacher, ds.features, ds.labels, split.nonmember_indices);
  report.student_train_acc = evaluate_accuracy(student, ds.features, ds.labels, split.member_indices);
  report.student_test_acc =
      evaluate_accuracy(student, ds.features, ds.labels, split.nonmember_indices);

  if (suite.run_loss_mia) {
    const AttackFeatureSpec spec{MiaSetting::kLoss, -1};
    const MiaResult t = run_mia(build_attack_features(teacher, ds, split, spec), suite.mia_cfg);
    const MiaResult s = run_mia(build_attack_features(student, ds, split, spec), suite.mia_cfg);
    report.deltas.push_back({"loss-mia", "auc", t.auc, s.auc, s.auc - t.auc});
  }

  if (suite.run_setup2) {
    check_arg(suite.inversion_aux != nullptr && suite.inversion_docs != nullptr,
              "evaluate_defense: inversion data required when run_setup2 is set");
    const Setup2BenchmarkResult t = run_setup2_over_docs(
        teacher, *suite.inversion_aux, *suite.inversion_docs, suite.doc_indices,
        suite.from_depth, suite.mapping_cfg, suite.mapping_hidden, suite.setup2_cfg);
    const Setup2BenchmarkResult s = run_setup2_over_docs(
        student, *suite.inversion_aux, *suite.inversion_docs, suite.doc_indices,
        suite.from_depth, suite.mapping_cfg, suite.mapping_hidden, suite.setup2_cfg);
    report.deltas.push_back({"inversion-setup2", "precision", t.mean_precision, s.mean_precision,
                             s.mean_precision - t.mean_precision});
    report.deltas.push_back(
        {"inversion-setup2", "recall", t.mean_recall, s.mean_recall, s.mean_recall - t.mean_recall});
    report.deltas.push_back({"inversion-setup2", "f1", t.mean_f1, s.mean_f1, s.mean_f1 - t.mean_f1});
  }
  return report;
}

}  // namespace embed_audit

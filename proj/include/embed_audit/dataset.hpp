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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "embed_audit/errors.hpp"
#include "embed_audit/rng.hpp"
#include "embed_audit/tensor.hpp"

namespace embed_audit {

// Feature rows plus class labels, optional binary property labels and, for
// bag-of-words corpora, the true token set per row. Regenerating with the
// same seed and parameters yields bit-identical features.
struct LabeledDataset {
  std::string name;
  std::uint64_t seed = 0;
  Tensor features;  // [n, d]
  std::vector<int> labels;
  int num_classes = 0;
  std::map<std::string, std::vector<int>> property_labels;  // values in {0,1}
  std::vector<std::vector<int>> token_sets;                 // sorted ids, BoW only

  std::size_t size() const { return features.shape.empty() ? 0 : features.rows(); }
  std::size_t width() const { return features.shape.empty() ? 0 : features.cols(); }
};

namespace detail {

// Balanced class labels (max count - min count <= 1), order shuffled.
inline std::vector<int> balanced_labels(int n, int classes, Rng rng) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % classes;
  rng.shuffle(labels);
  return labels;
}

}  // namespace detail

// Binary-feature analogue of a purchase-records table: one random binary
// prototype per class, samples are the class prototype with independent bit
// flips at flip_prob.
inline LabeledDataset gen_purchase_like(int n, int d, int classes, double flip_prob,
                                        std::uint64_t seed) {
  check_arg(classes >= 2, "gen_purchase_like: classes must be >= 2");
  check_arg(n >= classes, "gen_purchase_like: n must be >= classes");
  check_arg(d >= 1, "gen_purchase_like: d must be >= 1");
  check_arg(flip_prob >= 0.0 && flip_prob < 0.5,
            "gen_purchase_like: flip_prob must be in [0, 0.5)");

  Rng master(seed);
  Rng proto_rng = master.stream("prototypes");
  Tensor prototypes({static_cast<std::size_t>(classes), static_cast<std::size_t>(d)});
  for (auto& v : prototypes.data) v = proto_rng.uniform() < 0.5 ? 0.0 : 1.0;

  LabeledDataset ds;
  ds.name = "purchase_like";
  ds.seed = seed;
  ds.num_classes = classes;
  ds.labels = detail::balanced_labels(n, classes, master.stream("labels"));
  ds.features = Tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(d)});
  Rng flip_rng = master.stream("flips");
  for (int i = 0; i < n; ++i) {
    const double* proto = prototypes.row_ptr(static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)]));
    double* row = ds.features.row_ptr(static_cast<std::size_t>(i));
    for (int j = 0; j < d; ++j) {
      const bool flip = flip_rng.uniform() < flip_prob;
      row[j] = flip ? 1.0 - proto[j] : proto[j];
    }
  }
  return ds;
}

struct PropertySpec {
  std::string name;
  double correlation = 1.0;  // in [0, 1]
};

// Gaussian class blobs for the primary label. Each property is a unit shift
// along a property-specific direction orthogonalized against the class
// geometry; the property label agrees with its shift sign with probability
// (1 + correlation) / 2, giving the stated sample-level correlation.
inline LabeledDataset gen_property_blobs(int n, int d, int classes,
                                         const std::vector<PropertySpec>& properties,
                                         double spread, std::uint64_t seed) {
  check_arg(d >= 2, "gen_property_blobs: d must be >= 2");
  check_arg(classes >= 1, "gen_property_blobs: classes must be >= 1");
  check_arg(n >= classes, "gen_property_blobs: n must be >= classes");
  check_arg(spread >= 0.0, "gen_property_blobs: spread must be >= 0");
  for (const auto& p : properties)
    check_arg(p.correlation >= 0.0 && p.correlation <= 1.0,
              "gen_property_blobs: correlation must be in [0, 1]");

  Rng master(seed);
  Rng center_rng = master.stream("centers");
  Tensor centers({static_cast<std::size_t>(classes), static_cast<std::size_t>(d)});
  for (auto& v : centers.data) v = center_rng.normal();

  // Orthonormal basis of the class-difference span; property directions are
  // projected out of it so property shifts never move class geometry.
  std::vector<std::vector<double>> basis;
  for (int c = 1; c < classes; ++c) {
    std::vector<double> v(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j)
      v[static_cast<std::size_t>(j)] = centers(static_cast<std::size_t>(c), static_cast<std::size_t>(j)) - centers(0, static_cast<std::size_t>(j));
    for (const auto& b : basis) {
      double dot = 0.0;
      for (int j = 0; j < d; ++j) dot += v[static_cast<std::size_t>(j)] * b[static_cast<std::size_t>(j)];
      for (int j = 0; j < d; ++j) v[static_cast<std::size_t>(j)] -= dot * b[static_cast<std::size_t>(j)];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 1e-9) {
      for (double& x : v) x /= norm;
      basis.push_back(std::move(v));
    }
  }

  LabeledDataset ds;
  ds.name = "property_blobs";
  ds.seed = seed;
  ds.num_classes = classes;
  ds.labels = detail::balanced_labels(n, classes, master.stream("labels"));
  ds.features = Tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(d)});
  Rng noise_rng = master.stream("noise");
  for (int i = 0; i < n; ++i) {
    const double* center = centers.row_ptr(static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)]));
    double* row = ds.features.row_ptr(static_cast<std::size_t>(i));
    for (int j = 0; j < d; ++j) row[j] = center[j] + spread * noise_rng.normal();
  }

  for (const auto& prop : properties) {
    Rng dir_rng = master.stream("prop-dir-" + prop.name);
    std::vector<double> u(static_cast<std::size_t>(d));
    double norm = 0.0;
    for (int attempt = 0; attempt < 16 && norm < 1e-9; ++attempt) {
      for (double& x : u) x = dir_rng.normal();
      if (static_cast<int>(basis.size()) < d) {
        for (const auto& b : basis) {
          double dot = 0.0;
          for (int j = 0; j < d; ++j) dot += u[static_cast<std::size_t>(j)] * b[static_cast<std::size_t>(j)];
          for (int j = 0; j < d; ++j) u[static_cast<std::size_t>(j)] -= dot * b[static_cast<std::size_t>(j)];
        }
      }
      norm = 0.0;
      for (double x : u) norm += x * x;
      norm = std::sqrt(norm);
    }
    check_arg(norm >= 1e-9, "gen_property_blobs: could not draw a property direction");
    for (double& x : u) x /= norm;

    Rng label_rng = master.stream("prop-labels-" + prop.name);
    Rng align_rng = master.stream("prop-align-" + prop.name);
    std::vector<int> prop_labels(static_cast<std::size_t>(n));
    const double p_aligned = (1.0 + prop.correlation) / 2.0;
    for (int i = 0; i < n; ++i) {
      const int b = label_rng.uniform() < 0.5 ? 1 : 0;
      const bool aligned = align_rng.uniform() < p_aligned;
      const int effective = aligned ? b : 1 - b;
      const double sign = effective == 1 ? 1.0 : -1.0;
      double* row = ds.features.row_ptr(static_cast<std::size_t>(i));
      for (int j = 0; j < d; ++j) row[j] += sign * u[static_cast<std::size_t>(j)];
      prop_labels[static_cast<std::size_t>(i)] = b;
    }
    ds.property_labels[prop.name] = std::move(prop_labels);
  }
  return ds;
}

// Bag-of-words corpus: each document is doc_len distinct token ids drawn
// from a class-biased distribution; features are the multi-hot vector and
// the true token sets are retained for inversion scoring.
inline LabeledDataset gen_bow_text(int vocab_size, int doc_len, int n, int classes,
                                   std::uint64_t seed) {
  check_arg(vocab_size >= 1, "gen_bow_text: vocab_size must be >= 1");
  check_arg(doc_len >= 1 && doc_len <= vocab_size,
            "gen_bow_text: doc_len must be in [1, vocab_size]");
  check_arg(classes >= 2, "gen_bow_text: classes must be >= 2");
  check_arg(n >= classes, "gen_bow_text: n must be >= classes");

  Rng master(seed);
  Rng weight_rng = master.stream("class-weights");
  Tensor weights({static_cast<std::size_t>(classes), static_cast<std::size_t>(vocab_size)});
  for (auto& w : weights.data) w = std::exp(1.2 * weight_rng.normal());

  LabeledDataset ds;
  ds.name = "bow_text";
  ds.seed = seed;
  ds.num_classes = classes;
  ds.labels = detail::balanced_labels(n, classes, master.stream("labels"));
  ds.features = Tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(vocab_size)});
  ds.token_sets.resize(static_cast<std::size_t>(n));

  Rng token_rng = master.stream("tokens");
  std::vector<char> chosen(static_cast<std::size_t>(vocab_size));
  for (int i = 0; i < n; ++i) {
    const double* w = weights.row_ptr(static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)]));
    std::fill(chosen.begin(), chosen.end(), 0);
    auto& tokens = ds.token_sets[static_cast<std::size_t>(i)];
    tokens.reserve(static_cast<std::size_t>(doc_len));
    for (int t = 0; t < doc_len; ++t) {
      double total = 0.0;
      for (int j = 0; j < vocab_size; ++j)
        if (!chosen[static_cast<std::size_t>(j)]) total += w[j];
      double target = token_rng.uniform() * total;
      int pick = -1;
      for (int j = 0; j < vocab_size; ++j) {
        if (chosen[static_cast<std::size_t>(j)]) continue;
        target -= w[j];
        pick = j;
        if (target <= 0.0) break;
      }
      chosen[static_cast<std::size_t>(pick)] = 1;
      tokens.push_back(pick);
      ds.features(static_cast<std::size_t>(i), static_cast<std::size_t>(pick)) = 1.0;
    }
    std::sort(tokens.begin(), tokens.end());
  }
  return ds;
}

// Row-gathered copy keeping labels, property labels and token sets aligned.
inline LabeledDataset subset(const LabeledDataset& ds, const std::vector<int>& rows) {
  LabeledDataset out;
  out.name = ds.name;
  out.seed = ds.seed;
  out.num_classes = ds.num_classes;
  out.features = Tensor({rows.size(), ds.width()});
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<std::size_t>(rows[r]);
    check_arg(rows[r] >= 0 && i < ds.size(), "subset: row index out of range");
    std::copy_n(ds.features.row_ptr(i), ds.width(), out.features.row_ptr(r));
    out.labels.push_back(ds.labels[i]);
    if (!ds.token_sets.empty()) out.token_sets.push_back(ds.token_sets[i]);
  }
  for (const auto& [name, values] : ds.property_labels) {
    std::vector<int>& gathered = out.property_labels[name];
    gathered.reserve(rows.size());
    for (int r : rows) gathered.push_back(values[static_cast<std::size_t>(r)]);
  }
  return out;
}

// Disjoint member / non-member index sets plus balanced attack-train and
// attack-eval partitions (equal member and non-member counts, truncating
// the larger side).
struct MembershipSplit {
  std::vector<int> member_indices;
  std::vector<int> nonmember_indices;
  std::vector<int> attack_train_members;
  std::vector<int> attack_train_nonmembers;
  std::vector<int> attack_eval_members;
  std::vector<int> attack_eval_nonmembers;
  double attack_train_fraction = 0.5;
};

inline MembershipSplit split_membership(const LabeledDataset& ds, double member_frac,
                                        double attack_train_frac, std::uint64_t seed) {
  check_arg(member_frac > 0.0 && member_frac < 1.0,
            "split_membership: member_frac must be in (0,1)");
  check_arg(attack_train_frac > 0.0 && attack_train_frac < 1.0,
            "split_membership: attack_train_frac must be in (0,1)");
  const int n = static_cast<int>(ds.size());
  check_arg(n >= 4, "split_membership: dataset too small to split");

  std::vector<int> perm = Rng(seed).stream("split-shuffle").permutation(n);
  const int n_members = static_cast<int>(std::llround(n * member_frac));
  check_arg(n_members >= 1 && n_members <= n - 1,
            "split_membership: member_frac leaves an empty partition");

  MembershipSplit split;
  split.attack_train_fraction = attack_train_frac;
  split.member_indices.assign(perm.begin(), perm.begin() + n_members);
  split.nonmember_indices.assign(perm.begin() + n_members, perm.end());

  const int pool = static_cast<int>(
      std::min(split.member_indices.size(), split.nonmember_indices.size()));
  const int n_train = static_cast<int>(std::llround(pool * attack_train_frac));
  check_arg(n_train >= 1 && pool - n_train >= 1,
            "split_membership: attack_train_frac leaves an empty partition");

  split.attack_train_members.assign(split.member_indices.begin(),
                                    split.member_indices.begin() + n_train);
  split.attack_eval_members.assign(split.member_indices.begin() + n_train,
                                   split.member_indices.begin() + pool);
  split.attack_train_nonmembers.assign(split.nonmember_indices.begin(),
                                       split.nonmember_indices.begin() + n_train);
  split.attack_eval_nonmembers.assign(split.nonmember_indices.begin() + n_train,
                                      split.nonmember_indices.begin() + pool);
  return split;
}

// --- CSV persistence ---------------------------------------------------
//
// Layout: header `feature_0..feature_{d-1},label[,prop_<name>...]`, UTF-8,
// LF line endings. Features render with 17 significant digits so the
// round-trip is exact.

inline void save_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  check_arg(out.good(), "save_csv: cannot open " + path);
  const std::size_t d = ds.width();
  for (std::size_t j = 0; j < d; ++j) out << "feature_" << j << ",";
  out << "label";
  for (const auto& [name, values] : ds.property_labels) {
    check_arg(values.size() == ds.size(), "save_csv: property length mismatch for " + name);
    out << ",prop_" << name;
  }
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double* row = ds.features.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
      out << buf << ",";
    }
    out << ds.labels[i];
    for (const auto& [name, values] : ds.property_labels) out << "," << values[i];
    out << "\n";
  }
  check_arg(out.good(), "save_csv: write failed for " + path);
}

inline LabeledDataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw ParseError("cannot open " + path, 0);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto split_fields = [](const std::string& s) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = s.find(',', start);
      if (pos == std::string::npos) {
        fields.push_back(s.substr(start));
        break;
      }
      fields.push_back(s.substr(start, pos - start));
      start = pos + 1;
    }
    return fields;
  };

  const std::vector<std::string> header = split_fields(line);
  std::size_t d = 0;
  while (d < header.size() && header[d] == "feature_" + std::to_string(d)) ++d;
  if (d == 0 || d >= header.size() || header[d] != "label")
    throw ParseError("malformed header: expected feature_0..feature_{d-1},label", 1);
  std::vector<std::string> prop_names;
  for (std::size_t j = d + 1; j < header.size(); ++j) {
    if (header[j].rfind("prop_", 0) != 0)
      throw ParseError("malformed header: unknown column '" + header[j] + "'", 1);
    prop_names.push_back(header[j].substr(5));
  }
  const std::size_t expected = header.size();

  std::vector<double> features;
  std::vector<int> labels;
  std::map<std::string, std::vector<int>> props;
  for (const auto& name : prop_names) props[name] = {};

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;  // tolerate a trailing blank line
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != expected)
      throw ParseError("row has " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(expected),
                       line_no);
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      const auto& f = fields[j];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || ptr != f.data() + f.size())
        throw ParseError("bad feature value '" + f + "'", line_no);
      features.push_back(v);
    }
    int label = 0;
    {
      const auto& f = fields[d];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), label);
      if (ec != std::errc{} || ptr != f.data() + f.size() || label < 0)
        throw ParseError("bad label '" + f + "'", line_no);
    }
    labels.push_back(label);
    for (std::size_t j = 0; j < prop_names.size(); ++j) {
      const auto& f = fields[d + 1 + j];
      if (f != "0" && f != "1")
        throw ParseError("bad property value '" + f + "' (expected 0 or 1)", line_no);
      props[prop_names[j]].push_back(f == "1" ? 1 : 0);
    }
  }

  LabeledDataset ds;
  ds.name = std::filesystem::path(path).stem().string();
  ds.features = Tensor({labels.size(), d}, std::move(features));
  ds.labels = std::move(labels);
  ds.property_labels = std::move(props);
  for (int y : ds.labels) ds.num_classes = std::max(ds.num_classes, y + 1);
  return ds;
}

}  // namespace embed_audit

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

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "embed_audit/errors.hpp"

namespace embed_audit {

// Dense row-major f64 array. The universal value type for features,
// embeddings, logits and parameter blocks.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> s)
      : shape(std::move(s)), data(count(shape), 0.0) {}

  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    check_arg(data.size() == count(shape), "Tensor: data length must equal product of shape");
  }

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

  static Tensor matrix(std::size_t r, std::size_t c) { return Tensor({r, c}); }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return s.empty() ? 0 : n;
  }

  std::size_t size() const { return data.size(); }

  std::size_t rows() const {
    check_arg(shape.size() == 2, "Tensor: rows() requires a 2-D tensor");
    return shape[0];
  }

  std::size_t cols() const {
    check_arg(shape.size() == 2, "Tensor: cols() requires a 2-D tensor");
    return shape[1];
  }

  double& operator()(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  double* row_ptr(std::size_t i) { return data.data() + i * shape[1]; }
  const double* row_ptr(std::size_t i) const { return data.data() + i * shape[1]; }

  std::vector<double> row(std::size_t i) const {
    return std::vector<double>(row_ptr(i), row_ptr(i) + shape[1]);
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace embed_audit

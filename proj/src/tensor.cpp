// Copyright 2026 The ATEN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "aten/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace aten {

std::string shape_to_string(const Shape& dims) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ',';
    os << dims[i];
  }
  os << ')';
  return os.str();
}

std::int64_t shape_numel(const Shape& dims) {
  std::int64_t n = 1;
  for (int d : dims) n *= d;
  return n;
}

namespace {

void validate_dims(const Shape& dims) {
  if (dims.empty() || dims.size() > 4) {
    throw ContractViolation("tensor rank must be 1..4, got " +
                            std::to_string(dims.size()));
  }
  for (int d : dims) {
    if (d <= 0) {
      throw ContractViolation("tensor extents must be positive: " +
                              shape_to_string(dims));
    }
  }
}

}  // namespace

Tensor::Tensor(Shape dims, double fill) : dims_(std::move(dims)) {
  validate_dims(dims_);
  data_.assign(static_cast<std::size_t>(shape_numel(dims_)), fill);
}

Tensor::Tensor(Shape dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  validate_dims(dims_);
  if (static_cast<std::int64_t>(data_.size()) != shape_numel(dims_)) {
    throw ContractViolation("tensor payload length " +
                            std::to_string(data_.size()) +
                            " does not match dims " + shape_to_string(dims_));
  }
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ContractViolation("item() on non-scalar tensor " +
                            shape_to_string(dims_));
  }
  return data_[0];
}

Tensor Tensor::reshaped(Shape dims) const {
  return Tensor(std::move(dims), data_);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  if (dims_ != other.dims_) return false;
  return data_.empty() ||
         std::memcmp(data_.data(), other.data_.data(),
                     data_.size() * sizeof(double)) == 0;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ContractViolation(std::string(what) + ": shape mismatch " +
                            shape_to_string(a.dims()) + " vs " +
                            shape_to_string(b.dims()));
  }
}

void require_rank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) {
    throw ContractViolation(std::string(what) + ": expected rank " +
                            std::to_string(rank) + ", got " +
                            shape_to_string(t.dims()));
  }
}

void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) {
    throw ContractViolation(std::string(what) + ": non-finite input");
  }
}

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace aten

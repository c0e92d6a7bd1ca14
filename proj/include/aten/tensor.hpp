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

#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aten {

// Raised when a caller breaks an operation's preconditions (shape
// mismatch, invalid configuration, non-finite input).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Raised for malformed or missing on-disk data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<int>;

std::string shape_to_string(const Shape& dims);
std::int64_t shape_numel(const Shape& dims);

// Dense row-major tensor of doubles, rank 1..4. Feature maps use the
// (channels, height, width) layout.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape dims, double fill = 0.0);
  Tensor(Shape dims, std::vector<double> data);

  static Tensor zeros(Shape dims) { return Tensor(std::move(dims), 0.0); }
  static Tensor ones(Shape dims) { return Tensor(std::move(dims), 1.0); }
  static Tensor full(Shape dims, double v) { return Tensor(std::move(dims), v); }
  static Tensor scalar(double v) { return Tensor(Shape{1}, v); }

  const Shape& dims() const { return dims_; }
  int rank() const { return static_cast<int>(dims_.size()); }
  int dim(int i) const { return dims_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Convenience accessors for the (C,H,W) layout.
  int channels() const { return dims_.at(0); }
  int height() const { return dims_.at(1); }
  int width() const { return dims_.at(2); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * dims_[1] + y) * dims_[2] + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * dims_[1] + y) * dims_[2] + x];
  }

  // Scalar value of a one-element tensor.
  double item() const;

  Tensor reshaped(Shape dims) const;
  bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }
  bool all_finite() const;

  // Bitwise equality of dims and payload.
  bool bitwise_equal(const Tensor& other) const;

 private:
  Shape dims_;
  std::vector<double> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);
void require_rank(const Tensor& t, int rank, const char* what);
void require_finite(const Tensor& t, const char* what);

double max_abs(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace aten

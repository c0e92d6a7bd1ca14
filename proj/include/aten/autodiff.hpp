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

// Reverse-mode differentiation over a linear tape.
//
// A Tape records every primitive application in execution order together
// with its inputs, its output value, and the rules needed to recompute the
// output (replay) and to push an output gradient back to the inputs. Since
// nodes can only reference earlier nodes, walking the record backwards is a
// valid reverse topological order.

#pragma once

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "aten/ops.hpp"
#include "aten/tensor.hpp"

namespace aten {

// Named parameter tensors. Frozen entries are differentiated but never
// updated by sgd_step.
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    bool trainable = true;
  };

  void add(const std::string& name, Tensor value, bool trainable = true);
  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  Tensor& mutable_value(const std::string& name);
  bool trainable(const std::string& name) const;
  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::size_t parameter_count() const;

 private:
  std::map<std::string, Entry> entries_;
};

// Gradient per parameter name, with dims identical to the parameter.
using GradientSet = std::map<std::string, Tensor>;

class Tape;

// Handle to one node of a tape.
class Var {
 public:
  Var() = default;
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  const Tensor& value() const;
  const Shape& dims() const { return value().dims(); }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

using Inputs = std::vector<const Tensor*>;
using ForwardFn = std::function<Tensor(const Inputs&)>;
// Returns one gradient per input; an empty tensor means "no contribution".
using BackwardFn = std::function<std::vector<Tensor>(
    const Inputs& inputs, const Tensor& output, const Tensor& grad_output)>;

class Tape {
 public:
  // With record_gradients = false the tape only keeps values, which is what
  // inference wants.
  explicit Tape(bool record_gradients = true)
      : record_gradients_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf that receives a gradient (used for sensitivity checks).
  Var input(Tensor value);
  // Leaf bound to a named parameter; repeated calls return the same node.
  Var param(const ParamStore& store, const std::string& name);

  Var apply(const char* op, std::vector<Var> inputs, ForwardFn forward,
            BackwardFn backward);

  const Tensor& value(const Var& v) const;
  bool requires_grad(const Var& v) const;
  bool recording() const { return record_gradients_; }
  std::size_t size() const { return nodes_.size(); }
  const char* op_name(int id) const { return nodes_[id].op; }

  // Gradients of a scalar loss with respect to every node. For each
  // parameter of `store` the result holds d loss / d param; parameters
  // the loss does not depend on get zero tensors.
  GradientSet backward(const Var& loss, const ParamStore& store);
  void backward(const Var& loss);
  // Gradient of the last backward pass for a leaf; zero if unreached.
  Tensor grad(const Var& v) const;

  // Recomputes every non-leaf node from the recorded forward rules and
  // returns the recomputed values in tape order.
  std::vector<Tensor> replay() const;

 private:
  struct Node {
    const char* op = "";
    Tensor value;
    std::vector<int> inputs;
    ForwardFn forward;
    BackwardFn backward;
    bool requires_grad = false;
  };
  Var push(Node node);
  void check_owned(const Var& v) const;

  bool record_gradients_;
  std::deque<Node> nodes_;  // stable addresses: values are handed out by reference
  std::vector<Tensor> grads_;
  std::unordered_map<std::string, int> param_nodes_;
};

// He-style initializer: i.i.d. normal samples with the given deviation.
Tensor random_normal(Shape dims, double stddev, std::mt19937_64& rng);

// p <- p - lr * g for every trainable parameter.
void sgd_step(ParamStore& params, const GradientSet& grads, double lr);

// Checkpoint: manifest.json (names, dims, trainable flags) plus one ATEN-T1
// file per parameter.
void save_checkpoint(const std::filesystem::path& dir, const ParamStore& params);
ParamStore load_checkpoint(const std::filesystem::path& dir);

// Differentiable primitives. All inputs must live on the same tape.
namespace ad {

Var conv2d(const Var& x, const Var& weight, const Var& bias,
           const ConvGeometry& g);
Var bilinear_sample(const Var& input, const Var& coords);
Var resize_bilinear(const Var& x, int out_h, int out_w);
Var upsample(const Var& x, int factor);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var one_minus(const Var& a);
Var add_n(const std::vector<Var>& terms);
// x (C,H,W) + bias (C) broadcast over pixels.
Var add_channel_bias(const Var& x, const Var& bias);

Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var relu(const Var& x);

Var reshape(const Var& x, Shape dims);
Var concat_channels(const std::vector<Var>& parts);
Var slice_channels(const Var& x, int begin, int count);
Var global_avg_pool(const Var& x);

// x / sqrt(mean(x^2) + eps) over the whole tensor.
Var rms_normalize(const Var& x, double eps = 1e-6);
Var sum(const Var& x);
Var mean(const Var& x);
// sum_i x_i * w_i for a constant weight tensor.
Var weighted_sum(const Var& x, const Tensor& weights);

// Mean over pixels of softmax cross-entropy; logits (K,H,W), labels H*W
// values in [0,K).
Var softmax_cross_entropy(const Var& logits, const std::vector<int>& labels);
// Mean over elements of binary cross-entropy with logits.
Var bce_with_logits(const Var& logits, const Tensor& targets);
// Sum over elements of smooth-L1 (beta = 1).
Var smooth_l1(const Var& pred, const Tensor& target);

}  // namespace ad
}  // namespace aten

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

#include "aten/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "aten/io.hpp"
#include "json.hpp"

namespace aten {

// ---------------------------------------------------------------------------
// ParamStore

void ParamStore::add(const std::string& name, Tensor value, bool trainable) {
  if (entries_.count(name)) {
    throw ContractViolation("duplicate parameter " + name);
  }
  entries_.emplace(name, Entry{std::move(value), trainable});
}

bool ParamStore::contains(const std::string& name) const {
  return entries_.count(name) != 0;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractViolation("unknown parameter " + name);
  return it->second.value;
}

Tensor& ParamStore::mutable_value(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractViolation("unknown parameter " + name);
  return it->second.value;
}

bool ParamStore::trainable(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractViolation("unknown parameter " + name);
  return it->second.trainable;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

// ---------------------------------------------------------------------------
// Tape

const Tensor& Var::value() const {
  if (!tape_) throw ContractViolation("use of an unbound Var");
  return tape_->value(*this);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::check_owned(const Var& v) const {
  if (v.tape() != this || v.id() < 0 ||
      v.id() >= static_cast<int>(nodes_.size())) {
    throw ContractViolation("Var does not belong to this tape");
  }
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::input(Tensor value) {
  Node n;
  n.op = "input";
  n.value = std::move(value);
  n.requires_grad = record_gradients_;
  return push(std::move(n));
}

Var Tape::param(const ParamStore& store, const std::string& name) {
  auto it = param_nodes_.find(name);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.op = "param";
  n.value = store.get(name);
  n.requires_grad = record_gradients_;
  Var v = push(std::move(n));
  param_nodes_.emplace(name, v.id());
  return v;
}

Var Tape::apply(const char* op, std::vector<Var> inputs, ForwardFn forward,
                BackwardFn backward) {
  Node n;
  n.op = op;
  Inputs in;
  in.reserve(inputs.size());
  for (const Var& v : inputs) {
    check_owned(v);
    in.push_back(&nodes_[v.id()].value);
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  n.value = forward(in);
  if (record_gradients_) {
    n.inputs.reserve(inputs.size());
    for (const Var& v : inputs) n.inputs.push_back(v.id());
    n.forward = std::move(forward);
    n.backward = std::move(backward);
  }
  return push(std::move(n));
}

const Tensor& Tape::value(const Var& v) const {
  check_owned(v);
  return nodes_[v.id()].value;
}

bool Tape::requires_grad(const Var& v) const {
  check_owned(v);
  return nodes_[v.id()].requires_grad;
}

void Tape::backward(const Var& loss) {
  check_owned(loss);
  if (!record_gradients_) {
    throw ContractViolation("backward on a tape that does not record gradients");
  }
  if (nodes_[loss.id()].value.size() != 1) {
    throw ContractViolation("backward: loss must be scalar, got " +
                            shape_to_string(nodes_[loss.id()].value.dims()));
  }
  grads_.assign(nodes_.size(), Tensor());
  grads_[loss.id()] = Tensor::ones(nodes_[loss.id()].value.dims());
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (grads_[id].empty() || !n.backward || !n.requires_grad) continue;
    Inputs in;
    in.reserve(n.inputs.size());
    for (int src : n.inputs) in.push_back(&nodes_[src].value);
    std::vector<Tensor> g = n.backward(in, n.value, grads_[id]);
    for (std::size_t k = 0; k < n.inputs.size() && k < g.size(); ++k) {
      const int src = n.inputs[k];
      if (g[k].empty() || !nodes_[src].requires_grad) continue;
      if (grads_[src].empty()) {
        grads_[src] = std::move(g[k]);
      } else {
        Tensor& acc = grads_[src];
        require_same_shape(acc, g[k], "gradient accumulation");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[k][i];
      }
    }
    if (!n.inputs.empty()) grads_[id] = Tensor();  // interior grads are transient
  }
}

GradientSet Tape::backward(const Var& loss, const ParamStore& store) {
  backward(loss);
  GradientSet out;
  for (const auto& [name, entry] : store.entries()) {
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end() && !grads_[it->second].empty()) {
      out.emplace(name, grads_[it->second]);
    } else {
      out.emplace(name, Tensor(entry.value.dims()));
    }
  }
  return out;
}

Tensor Tape::grad(const Var& v) const {
  check_owned(v);
  if (static_cast<std::size_t>(v.id()) < grads_.size() &&
      !grads_[v.id()].empty()) {
    return grads_[v.id()];
  }
  return Tensor(nodes_[v.id()].value.dims());
}

std::vector<Tensor> Tape::replay() const {
  std::vector<Tensor> values;
  values.reserve(nodes_.size());
  for (const Node& n : nodes_) {
    if (!n.forward) {
      values.push_back(n.value);
      continue;
    }
    Inputs in;
    for (int src : n.inputs) in.push_back(&values[src]);
    values.push_back(n.forward(in));
  }
  return values;
}

// ---------------------------------------------------------------------------
// Optimizer and checkpoints

Tensor random_normal(Shape dims, double stddev, std::mt19937_64& rng) {
  Tensor t(std::move(dims));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

void sgd_step(ParamStore& params, const GradientSet& grads, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ContractViolation("sgd_step: learning rate must be finite and >= 0");
  }
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) {
      throw ContractViolation("sgd_step: gradient for unknown parameter " + name);
    }
    Tensor& p = params.mutable_value(name);
    require_same_shape(p, g, "sgd_step");
  }
  for (const auto& [name, g] : grads) {
    if (!params.trainable(name)) continue;
    Tensor& p = params.mutable_value(name);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
  }
}

void save_checkpoint(const std::filesystem::path& dir, const ParamStore& params) {
  std::filesystem::create_directories(dir / "params");
  nlohmann::ordered_json manifest;
  manifest["format"] = "aten-checkpoint-1";
  auto& list = manifest["parameters"];
  list = nlohmann::ordered_json::array();
  for (const auto& [name, entry] : params.entries()) {
    const std::string file = "params/" + name + ".t1";
    write_t1(dir / file, entry.value);
    list.push_back({{"name", name},
                    {"dims", entry.value.dims()},
                    {"file", file},
                    {"trainable", entry.trainable}});
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

ParamStore load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint manifest: " + std::string(e.what()));
  }
  ParamStore store;
  for (const auto& p : manifest.at("parameters")) {
    Tensor t = read_t1(dir / p.at("file").get<std::string>());
    if (t.dims() != p.at("dims").get<Shape>()) {
      throw DataError("checkpoint: dims mismatch for " +
                      p.at("name").get<std::string>());
    }
    store.add(p.at("name").get<std::string>(), std::move(t),
              p.at("trainable").get<bool>());
  }
  return store;
}

// ---------------------------------------------------------------------------
// Differentiable primitives

namespace ad {

namespace {

Tape& tape_of(const Var& v) {
  if (!v.valid()) throw ContractViolation("unbound Var");
  return *v.tape();
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias,
           const ConvGeometry& g) {
  const bool has_bias = bias.valid();
  std::vector<Var> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return tape_of(x).apply(
      "conv2d", std::move(inputs),
      [g, has_bias](const Inputs& in) {
        return aten::conv2d(*in[0], *in[1], has_bias ? in[2] : nullptr, g);
      },
      [g, has_bias](const Inputs& in, const Tensor&, const Tensor& go) {
        ConvGrads cg = conv2d_backward(*in[0], *in[1], has_bias, g, go);
        std::vector<Tensor> out{std::move(cg.input), std::move(cg.weight)};
        if (has_bias) out.push_back(std::move(cg.bias));
        return out;
      });
}

Var bilinear_sample(const Var& input, const Var& coords) {
  return tape_of(input).apply(
      "bilinear_sample", {input, coords},
      [](const Inputs& in) { return aten::bilinear_sample(*in[0], *in[1]); },
      [](const Inputs& in, const Tensor&, const Tensor& go) {
        SampleGrads sg = bilinear_sample_backward(*in[0], *in[1], go);
        return std::vector<Tensor>{std::move(sg.input), std::move(sg.coords)};
      });
}

Var resize_bilinear(const Var& x, int out_h, int out_w) {
  return tape_of(x).apply(
      "resize_bilinear", {x},
      [out_h, out_w](const Inputs& in) {
        return aten::resize_bilinear(*in[0], out_h, out_w);
      },
      [](const Inputs& in, const Tensor&, const Tensor& go) {
        return std::vector<Tensor>{
            resize_bilinear_backward(go, in[0]->dim(1), in[0]->dim(2))};
      });
}

Var upsample(const Var& x, int factor) {
  if (factor < 1) throw ContractViolation("upsample: factor must be >= 1");
  return resize_bilinear(x, x.dims().at(1) * factor, x.dims().at(2) * factor);
}

Var add(const Var& a, const Var& b) {
  return tape_of(a).apply(
      "add", {a, b}, [](const Inputs& in) { return aten::add(*in[0], *in[1]); },
      [](const Inputs&, const Tensor&, const Tensor& go) {
        return std::vector<Tensor>{go, go};
      });
}

Var sub(const Var& a, const Var& b) {
  return tape_of(a).apply(
      "sub", {a, b}, [](const Inputs& in) { return aten::sub(*in[0], *in[1]); },
      [](const Inputs&, const Tensor&, const Tensor& go) {
        return std::vector<Tensor>{go, aten::scale(go, -1.0)};
      });
}

Var mul(const Var& a, const Var& b) {
  return tape_of(a).apply(
      "mul", {a, b}, [](const Inputs& in) { return aten::mul(*in[0], *in[1]); },
      [](const Inputs& in, const Tensor&, const Tensor& go) {
        return std::vector<Tensor>{aten::mul(go, *in[1]), aten::mul(go, *in[0])};
      });
}

Var scale(const Var& a, double s) {
  return tape_of(a).apply(
      "scale", {a}, [s](const Inputs& in) { return aten::scale(*in[0], s); },
      [s](const Inputs&, const Tensor&, const Tensor& go) {
        return std::vector<Tensor>{aten::scale(go, s)};
      });
}

Var one_minus(const Var& a) {
  return tape_of(a).apply(
      "one_minus", {a},
      [](const Inputs& in) {
        Tensor out(in[0]->dims());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 - (*in[0])[i];
        return out;
      },
      [](const Inputs&, const Tensor&, const Tensor& go) {
        return std::vector<Tensor>{aten::scale(go, -1.0)};
      });
}

Var add_n(const std::vector<Var>& terms) {
  if (terms.empty()) throw ContractViolation("add_n: no terms");
  Var acc = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

Var add_channel_bias(const Var& x, const Var& bias) {
  return tape_of(x).apply(
      "add_channel_bias", {x, bias},
      [](const Inputs& in) {
        const Tensor& t = *in[0];
        const Tensor& b = *in[1];
        require_rank(t, 3, "add_channel_bias");
        if (b.size() != static_cast<std::size_t>(t.dim(0))) {
          throw ContractViolation("add_channel_bias: bias length mismatch");
        }
        Tensor out = t;
        const std::size_t plane = static_cast<std::size_t>(t.dim(1)) * t.dim(2);
        for (int c = 0; c < t.dim(0); ++c) {
          for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] += b[c];
        }
        return out;
      },
      [](const Inputs& in, const Tensor&, const Tensor& go) {
        const Tensor& t = *in[0];
        Tensor gb(in[1]->dims());
        const std::size_t plane = static_cast<std::size_t>(t.dim(1)) * t.dim(2);
        for (int c = 0; c < t.dim(0); ++c) {
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += go[c * plane + i];
          gb[c] = acc;
        }
        return std::vector<Tensor>{go, std::move(gb)};
      });
}

Var sigmoid(const Var& x) {
  return tape_of(x).apply(
      "sigmoid", {x}, [](const Inputs& in) { return aten::sigmoid(*in[0]); },
      [](const Inputs&, const Tensor& y, const Tensor& go) {
        Tensor g(y.dims());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = go[i] * y[i] * (1.0 - y[i]);
        return std::vector<Tensor>{std::move(g)};
      });
}

Var tanh(const Var& x) {
  return tape_of(x).apply(
      "tanh", {x}, [](const Inputs& in) { return aten::tanh(*in[0]); },
      [](const Inputs&, const Tensor& y, const Tensor& go) {
        Tensor g(y.dims());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = go[i] * (1.0 - y[i] * y[i]);
        return std::vector<Tensor>{std::move(g)};
      });
}

Var relu(const Var& x) {
  return tape_of(x).apply(
      "relu", {x}, [](const Inputs& in) { return aten::relu(*in[0]); },
      [](const Inputs& in, const Tensor&, const Tensor& go) {
        Tensor g(go.dims());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = (*in[0])[i] > 0.0 ? go[i] : 0.0;
        return std::vector<Tensor>{std::move(g)};
      });
}

Var reshape(const Var& x, Shape dims) {
  if (shape_numel(dims) != static_cast<std::int64_t>(x.value().size())) {
    throw ContractViolation("reshape: element count mismatch");
  }
  return tape_of(x).apply(
      "reshape", {x},
      [dims](const Inputs& in) { return in[0]->reshaped(dims); },
      [](const Inputs& in, const Tensor&, const Tensor& go) {
        return std::vector<Tensor>{go.reshaped(in[0]->dims())};
      });
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractViolation("concat_channels: no inputs");
  return tape_of(parts[0]).apply(
      "concat_channels", parts,
      [](const Inputs& in) {
        int channels = 0;
        for (const Tensor* t : in) {
          require_rank(*t, 3, "concat_channels");
          if (t->dim(1) != in[0]->dim(1) || t->dim(2) != in[0]->dim(2)) {
            throw ContractViolation("concat_channels: spatial mismatch");
          }
          channels += t->dim(0);
        }
        Tensor out({channels, in[0]->dim(1), in[0]->dim(2)});
        std::size_t off = 0;
        for (const Tensor* t : in) {
          std::copy(t->values().begin(), t->values().end(), out.data() + off);
          off += t->size();
        }
        return out;
      },
      [](const Inputs& in, const Tensor&, const Tensor& go) {
        std::vector<Tensor> g;
        std::size_t off = 0;
        for (const Tensor* t : in) {
          Tensor part(t->dims());
          std::copy(go.data() + off, go.data() + off + t->size(), part.data());
          off += t->size();
          g.push_back(std::move(part));
        }
        return g;
      });
}

Var slice_channels(const Var& x, int begin, int count) {
  const Shape& d = x.dims();
  if (d.size() != 3 || begin < 0 || count < 1 || begin + count > d[0]) {
    throw ContractViolation("slice_channels: range out of bounds");
  }
  return tape_of(x).apply(
      "slice_channels", {x},
      [begin, count](const Inputs& in) {
        const Tensor& t = *in[0];
        const std::size_t plane = static_cast<std::size_t>(t.dim(1)) * t.dim(2);
        Tensor out({count, t.dim(1), t.dim(2)});
        std::copy(t.data() + begin * plane, t.data() + (begin + count) * plane,
                  out.data());
        return out;
      },
      [begin](const Inputs& in, const Tensor&, const Tensor& go) {
        const Tensor& t = *in[0];
        const std::size_t plane = static_cast<std::size_t>(t.dim(1)) * t.dim(2);
        Tensor g(t.dims());
        std::copy(go.values().begin(), go.values().end(), g.data() + begin * plane);
        return std::vector<Tensor>{std::move(g)};
      });
}

Var global_avg_pool(const Var& x) {
  return tape_of(x).apply(
      "global_avg_pool", {x},
      [](const Inputs& in) {
        const Tensor& t = *in[0];
        require_rank(t, 3, "global_avg_pool");
        const std::size_t plane = static_cast<std::size_t>(t.dim(1)) * t.dim(2);
        Tensor out({t.dim(0), 1, 1});
        for (int c = 0; c < t.dim(0); ++c) {
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += t[c * plane + i];
          out[c] = acc / static_cast<double>(plane);
        }
        return out;
      },
      [](const Inputs& in, const Tensor&, const Tensor& go) {
        const Tensor& t = *in[0];
        const std::size_t plane = static_cast<std::size_t>(t.dim(1)) * t.dim(2);
        Tensor g(t.dims());
        for (int c = 0; c < t.dim(0); ++c) {
          const double v = go[c] / static_cast<double>(plane);
          std::fill(g.data() + c * plane, g.data() + (c + 1) * plane, v);
        }
        return std::vector<Tensor>{std::move(g)};
      });
}

Var rms_normalize(const Var& x, double eps) {
  return tape_of(x).apply(
      "rms_normalize", {x},
      [eps](const Inputs& in) {
        const Tensor& t = *in[0];
        double sq = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) sq += t[i] * t[i];
        const double s = 1.0 / std::sqrt(sq / static_cast<double>(t.size()) + eps);
        Tensor out(t.dims());
        for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] * s;
        return out;
      },
      [eps](const Inputs& in, const Tensor&, const Tensor& go) {
        const Tensor& t = *in[0];
        const double n = static_cast<double>(t.size());
        double sq = 0.0, gx = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
          sq += t[i] * t[i];
          gx += go[i] * t[i];
        }
        const double s = 1.0 / std::sqrt(sq / n + eps);
        // d(x_i s)/dx_j = s delta_ij - s^3 x_i x_j / n
        const double k = s * s * s * gx / n;
        Tensor g(t.dims());
        for (std::size_t i = 0; i < t.size(); ++i) g[i] = s * go[i] - k * t[i];
        return std::vector<Tensor>{std::move(g)};
      });
}

Var sum(const Var& x) {
  return tape_of(x).apply(
      "sum", {x},
      [](const Inputs& in) {
        double acc = 0.0;
        for (double v : in[0]->values()) acc += v;
        return Tensor::scalar(acc);
      },
      [](const Inputs& in, const Tensor&, const Tensor& go) {
        return std::vector<Tensor>{Tensor::full(in[0]->dims(), go[0])};
      });
}

Var mean(const Var& x) {
  const double n = static_cast<double>(x.value().size());
  return scale(sum(x), 1.0 / n);
}

Var weighted_sum(const Var& x, const Tensor& weights) {
  require_same_shape(x.value(), weights, "weighted_sum");
  return tape_of(x).apply(
      "weighted_sum", {x},
      [weights](const Inputs& in) {
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) acc += (*in[0])[i] * weights[i];
        return Tensor::scalar(acc);
      },
      [weights](const Inputs&, const Tensor&, const Tensor& go) {
        return std::vector<Tensor>{aten::scale(weights, go[0])};
      });
}

Var softmax_cross_entropy(const Var& logits, const std::vector<int>& labels) {
  const Shape& d = logits.dims();
  if (d.size() != 3) throw ContractViolation("softmax_cross_entropy: rank 3 logits");
  const int k = d[0];
  const std::size_t n = static_cast<std::size_t>(d[1]) * d[2];
  if (labels.size() != n) {
    throw ContractViolation("softmax_cross_entropy: label count mismatch");
  }
  for (int l : labels) {
    if (l < 0 || l >= k) throw ContractViolation("softmax_cross_entropy: label out of range");
  }
  return tape_of(logits).apply(
      "softmax_cross_entropy", {logits},
      [labels, k, n](const Inputs& in) {
        const Tensor& z = *in[0];
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          double m = z[i];
          for (int c = 1; c < k; ++c) m = std::max(m, z[c * n + i]);
          double s = 0.0;
          for (int c = 0; c < k; ++c) s += std::exp(z[c * n + i] - m);
          total += m + std::log(s) - z[labels[i] * n + i];
        }
        return Tensor::scalar(total / static_cast<double>(n));
      },
      [labels, k, n](const Inputs& in, const Tensor&, const Tensor& go) {
        const Tensor& z = *in[0];
        Tensor g(z.dims());
        const double w = go[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          double m = z[i];
          for (int c = 1; c < k; ++c) m = std::max(m, z[c * n + i]);
          double s = 0.0;
          for (int c = 0; c < k; ++c) s += std::exp(z[c * n + i] - m);
          for (int c = 0; c < k; ++c) {
            g[c * n + i] = w * std::exp(z[c * n + i] - m) / s;
          }
          g[labels[i] * n + i] -= w;
        }
        return std::vector<Tensor>{std::move(g)};
      });
}

Var bce_with_logits(const Var& logits, const Tensor& targets) {
  require_same_shape(logits.value(), targets, "bce_with_logits");
  return tape_of(logits).apply(
      "bce_with_logits", {logits},
      [targets](const Inputs& in) {
        const Tensor& x = *in[0];
        double total = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          total += std::max(x[i], 0.0) - x[i] * targets[i] +
                   std::log1p(std::exp(-std::abs(x[i])));
        }
        return Tensor::scalar(total / static_cast<double>(x.size()));
      },
      [targets](const Inputs& in, const Tensor&, const Tensor& go) {
        const Tensor& x = *in[0];
        Tensor g(x.dims());
        const double w = go[0] / static_cast<double>(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
          g[i] = w * (sigmoid_scalar(x[i]) - targets[i]);
        }
        return std::vector<Tensor>{std::move(g)};
      });
}

Var smooth_l1(const Var& pred, const Tensor& target) {
  require_same_shape(pred.value(), target, "smooth_l1");
  return tape_of(pred).apply(
      "smooth_l1", {pred},
      [target](const Inputs& in) {
        double total = 0.0;
        for (std::size_t i = 0; i < target.size(); ++i) {
          const double d = (*in[0])[i] - target[i];
          total += std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5;
        }
        return Tensor::scalar(total);
      },
      [target](const Inputs& in, const Tensor&, const Tensor& go) {
        Tensor g(target.dims());
        for (std::size_t i = 0; i < target.size(); ++i) {
          const double d = (*in[0])[i] - target[i];
          g[i] = go[0] * (std::abs(d) < 1.0 ? d : (d > 0 ? 1.0 : -1.0));
        }
        return std::vector<Tensor>{std::move(g)};
      });
}

}  // namespace ad
}  // namespace aten

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

#include "aten/backbone.hpp"

#include <cmath>
#include <string>

#include "aten/cost.hpp"

namespace aten {

namespace {

struct ConvSpec {
  std::string name;
  int out, in, stride;
};

std::vector<ConvSpec> layer_specs(const BackboneConfig& c) {
  const int ch = c.channels;
  std::vector<ConvSpec> specs = {
      {"backbone.stage1.down", ch, 3, 2},
      {"backbone.stage1.conv", ch, ch, 1},
      {"backbone.stage2.down", ch, ch, 2},
      {"backbone.stage2.conv", ch, ch, 1},
  };
  for (int b = 0; b < c.depth; ++b) {
    const std::string base = "backbone.block" + std::to_string(b);
    specs.push_back({base + ".expand", 2 * ch, ch, 1});
    specs.push_back({base + ".project", ch, 2 * ch, 1});
  }
  return specs;
}

}  // namespace

void BackboneConfig::validate() const {
  if (channels < 8) throw ContractViolation("backbone: channels must be >= 8");
  if (depth < 0) throw ContractViolation("backbone: depth must be >= 0");
}

void init_backbone(ParamStore& params, const BackboneConfig& config,
                   std::mt19937_64& rng) {
  config.validate();
  for (const ConvSpec& s : layer_specs(config)) {
    double stddev = std::sqrt(2.0 / (9.0 * s.in));
    // Residual branches start small so the stack is near-identity.
    if (s.name.ends_with(".project")) stddev *= 0.25;
    params.add(s.name + ".w", random_normal({s.out, s.in, 3, 3}, stddev, rng));
    params.add(s.name + ".b", Tensor({s.out}));
  }
}

Var extract_features(const ParamStore& params, const BackboneConfig& config,
                     const Var& frame) {
  config.validate();
  const Tensor& f = frame.value();
  require_rank(f, 3, "extract_features");
  if (f.dim(0) != 3) throw ContractViolation("extract_features: frame must have 3 channels");
  if (f.dim(1) % BackboneConfig::kStride || f.dim(2) % BackboneConfig::kStride) {
    throw ContractViolation("extract_features: frame extents " +
                            shape_to_string(f.dims()) + " must be multiples of 4");
  }
  CostScope cost(CostClass::kFeature);
  Tape& tape = *frame.tape();
  auto conv = [&](const Var& x, const std::string& name, int stride) {
    ConvGeometry g;
    g.stride = stride;
    return ad::conv2d(x, tape.param(params, name + ".w"),
                      tape.param(params, name + ".b"), g);
  };
  Var x = ad::relu(conv(frame, "backbone.stage1.down", 2));
  x = ad::relu(conv(x, "backbone.stage1.conv", 1));
  x = ad::relu(conv(x, "backbone.stage2.down", 2));
  x = ad::relu(conv(x, "backbone.stage2.conv", 1));
  for (int b = 0; b < config.depth; ++b) {
    const std::string base = "backbone.block" + std::to_string(b);
    Var inner = ad::relu(conv(x, base + ".expand", 1));
    x = ad::relu(ad::add(x, conv(inner, base + ".project", 1)));
  }
  return ad::rms_normalize(x);
}

std::size_t backbone_parameter_count(const BackboneConfig& config) {
  std::size_t n = 0;
  for (const ConvSpec& s : layer_specs(config)) {
    n += static_cast<std::size_t>(s.out) * s.in * 9 + s.out;
  }
  return n;
}

}  // namespace aten

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

#include <random>

#include "aten/autodiff.hpp"

namespace aten {

// Toy fully convolutional feature extractor with output stride 4.
//
// Layout: two stride-2 stages (3x3 stride-2 conv + 3x3 conv, ReLU after
// each), then `depth` residual blocks x <- relu(x + conv(relu(conv(x)))),
// whose inner width is 2C. The output is divided by its root-mean-square
// so downstream gates see unit-scale activations.
struct BackboneConfig {
  static constexpr int kStride = 4;
  int channels = 32;
  int depth = 4;

  void validate() const;
};

void init_backbone(ParamStore& params, const BackboneConfig& config,
                   std::mt19937_64& rng);

// frame (3,H,W) with H, W multiples of 4 -> feature (C, H/4, W/4).
Var extract_features(const ParamStore& params, const BackboneConfig& config,
                     const Var& frame);

// Number of scalar parameters the backbone owns; O(C^2 * depth).
std::size_t backbone_parameter_count(const BackboneConfig& config);

}  // namespace aten

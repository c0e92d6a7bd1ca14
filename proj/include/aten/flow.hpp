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

// Flow-guided feature propagation.
//
// A flow field (2,H,W) at feature resolution maps every target location to
// the position in the reference frame it should be read from (backward
// warping): channel 0 is the horizontal displacement, channel 1 the
// vertical one. A scale field (C,H,W) multiplies the warped features.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "aten/autodiff.hpp"

namespace aten {

enum class FlowSource { kGroundTruth, kLearned, kZero };

FlowSource parse_flow_source(const std::string& name);
std::string flow_source_name(FlowSource s);

struct FlowNetConfig {
  int feature_channels = 32;  // channels of the scale field
  int hidden_channels = 16;
  int stride = 4;
};

// Registers the learned flow stack under "flow.". The scale head has zero
// weights and a frozen unit bias, so the scale field starts at exactly 1.
void init_flow_net(ParamStore& params, const FlowNetConfig& config,
                   std::mt19937_64& rng);

struct FlowEstimate {
  Var flow;   // (2, H/stride, W/stride), feature pixels
  Var scale;  // (C, H/stride, W/stride)
};

// Inputs to one flow estimate. `ground_truth` is a frame-resolution (2,H,W)
// displacement field and is only read by FlowSource::kGroundTruth.
struct FlowRequest {
  Var target;
  Var reference;
  const Tensor* ground_truth = nullptr;
};

FlowEstimate estimate_flow(Tape& tape, const ParamStore& params,
                           const FlowNetConfig& config, FlowSource source,
                           const FlowRequest& request);

// Frame-resolution displacements to feature resolution: block mean over
// stride x stride cells, then divided by the stride.
Tensor downsample_flow(const Tensor& frame_flow, int stride);

// Backward warp of `feature` along `flow`, multiplied by `scale`.
Var propagate(const Var& feature, const Var& flow, const Var& scale);

// Tensor-level convenience wrapper.
Tensor propagate(const Tensor& feature, const Tensor& flow, const Tensor& scale);

}  // namespace aten

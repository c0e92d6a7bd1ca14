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

#include "aten/flow.hpp"

#include <cmath>

#include "aten/cost.hpp"

namespace aten {

FlowSource parse_flow_source(const std::string& name) {
  if (name == "ground_truth" || name == "gt") return FlowSource::kGroundTruth;
  if (name == "learned") return FlowSource::kLearned;
  if (name == "zero") return FlowSource::kZero;
  throw ContractViolation("unknown flow source '" + name +
                          "' (expected ground_truth, learned or zero)");
}

std::string flow_source_name(FlowSource s) {
  switch (s) {
    case FlowSource::kGroundTruth: return "ground_truth";
    case FlowSource::kLearned: return "learned";
    case FlowSource::kZero: return "zero";
  }
  return "zero";
}

namespace {

void add_conv(ParamStore& params, const std::string& name, int out, int in,
              int k, std::mt19937_64& rng) {
  const double stddev = std::sqrt(2.0 / (in * k * k));
  params.add(name + ".w", random_normal({out, in, k, k}, stddev, rng));
  params.add(name + ".b", Tensor({out}));
}

}  // namespace

void init_flow_net(ParamStore& params, const FlowNetConfig& config,
                   std::mt19937_64& rng) {
  const int h = config.hidden_channels;
  add_conv(params, "flow.conv1", h, 6, 3, rng);
  add_conv(params, "flow.conv2", h, h, 3, rng);
  add_conv(params, "flow.conv3", h, h, 3, rng);
  // Output: 2 flow channels followed by h scale-head channels. Flow rows
  // start at zero so the untrained estimator predicts null motion.
  Tensor w4 = random_normal({2 + h, h, 3, 3}, std::sqrt(2.0 / (9.0 * h)), rng);
  for (std::size_t i = 0; i < 2u * h * 9; ++i) w4[i] = 0.0;
  params.add("flow.conv4.w", std::move(w4));
  params.add("flow.conv4.b", Tensor({2 + h}));
  params.add("flow.scale.w", Tensor({config.feature_channels, h, 1, 1}));
  params.add("flow.scale.b", Tensor::ones({config.feature_channels}),
             /*trainable=*/false);
}

Tensor downsample_flow(const Tensor& frame_flow, int stride) {
  require_rank(frame_flow, 3, "downsample_flow");
  if (frame_flow.dim(0) != 2) {
    throw ContractViolation("downsample_flow: expected (2,H,W), got " +
                            shape_to_string(frame_flow.dims()));
  }
  return scale(avg_pool(frame_flow, stride), 1.0 / stride);
}

FlowEstimate estimate_flow(Tape& tape, const ParamStore& params,
                           const FlowNetConfig& config, FlowSource source,
                           const FlowRequest& request) {
  const Tensor& target = request.target.value();
  const Tensor& reference = request.reference.value();
  require_same_shape(target, reference, "estimate_flow frames");
  require_rank(target, 3, "estimate_flow frames");
  const int stride = config.stride;
  if (target.dim(1) % stride || target.dim(2) % stride) {
    throw ContractViolation("estimate_flow: frame extents must be multiples of " +
                            std::to_string(stride));
  }
  const int fh = target.dim(1) / stride;
  const int fw = target.dim(2) / stride;
  const int channels = config.feature_channels;
  CostScope cost(CostClass::kFlow);
  switch (source) {
    case FlowSource::kZero:
      return {tape.constant(Tensor({2, fh, fw})),
              tape.constant(Tensor::ones({channels, fh, fw}))};
    case FlowSource::kGroundTruth: {
      if (!request.ground_truth) {
        throw ContractViolation("estimate_flow: ground-truth flow not provided");
      }
      if (request.ground_truth->dims() != Shape{2, target.dim(1), target.dim(2)}) {
        throw ContractViolation("estimate_flow: ground-truth flow dims " +
                                shape_to_string(request.ground_truth->dims()));
      }
      return {tape.constant(downsample_flow(*request.ground_truth, stride)),
              tape.constant(Tensor::ones({channels, fh, fw}))};
    }
    case FlowSource::kLearned: {
      if (!params.contains("flow.conv1.w")) {
        throw ContractViolation("estimate_flow: learned source not initialized");
      }
      auto conv = [&](const Var& x, const std::string& name, int s) {
        ConvGeometry g;
        g.stride = s;
        return ad::conv2d(x, tape.param(params, name + ".w"),
                          tape.param(params, name + ".b"), g);
      };
      Var x = ad::concat_channels({request.target, request.reference});
      x = ad::relu(conv(x, "flow.conv1", 2));
      x = ad::relu(conv(x, "flow.conv2", 2));
      x = ad::relu(conv(x, "flow.conv3", 1));
      Var out = conv(x, "flow.conv4", 1);
      const int h = config.hidden_channels;
      Var flow = ad::slice_channels(out, 0, 2);
      Var head_in = ad::slice_channels(out, 2, h);
      Var scale_field = ad::conv2d(head_in, tape.param(params, "flow.scale.w"),
                                   tape.param(params, "flow.scale.b"),
                                   ConvGeometry{});
      return {flow, scale_field};
    }
  }
  throw ContractViolation("estimate_flow: unknown source");
}

Var propagate(const Var& feature, const Var& flow, const Var& scale_field) {
  const Tensor& f = feature.value();
  require_rank(f, 3, "propagate feature");
  if (flow.dims() != Shape{2, f.dim(1), f.dim(2)}) {
    throw ContractViolation("propagate: flow dims " + shape_to_string(flow.dims()) +
                            " do not match feature " + shape_to_string(f.dims()));
  }
  require_same_shape(f, scale_field.value(), "propagate scale");
  CostScope cost(CostClass::kWarp);
  Tape& tape = *feature.tape();
  Var coords = ad::add(tape.constant(identity_grid(f.dim(1), f.dim(2))), flow);
  return ad::mul(ad::bilinear_sample(feature, coords), scale_field);
}

Tensor propagate(const Tensor& feature, const Tensor& flow, const Tensor& scale_field) {
  Tape tape(false);
  return propagate(tape.constant(feature), tape.constant(flow),
                   tape.constant(scale_field))
      .value();
}

}  // namespace aten

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

// Adaptive temporal encoding: neighbouring key-frame features are warped
// onto the current key frame and folded through a convolutional GRU.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "aten/autodiff.hpp"

namespace aten {

// Parameter names of one convGRU cell under `prefix`: six 3x3 kernels
// (w_xz, w_hz, w_xr, w_hr, w_xh, w_hh) of shape (C,C,3,3) and three
// per-channel biases (b_z, b_r, b_h).
struct GruParams {
  std::string prefix = "gru";

  std::string name(const char* field) const { return prefix + "." + field; }
  int channels(const ParamStore& params) const;
  void validate(const ParamStore& params) const;
};

void init_gru(ParamStore& params, const GruParams& gru, int channels,
              std::mt19937_64& rng);

// One update:
//   z  = sigmoid(x*w_xz + h*w_hz + b_z)
//   r  = sigmoid(x*w_xr + h*w_hr + b_r)
//   h' = tanh(x*w_xh + (r.h)*w_hh + b_h)
//   h_new = (1-z).h + z.h'
Var gru_step(const ParamStore& params, const GruParams& gru, const Var& x,
             const Var& h_prev);

// A neighbouring key frame: its raw feature and the flow/scale that map the
// current key frame onto it.
struct KeyContext {
  Var feature;
  Var flow;
  Var scale;
};

enum class TemporalFusion {
  kConvGru,  // fold through the GRU, keep the last state
  kAverage,  // ablation: arithmetic mean of the inputs
};

struct EncoderOptions {
  bool align = true;  // false: feed neighbours unwarped (ablation)
  TemporalFusion fusion = TemporalFusion::kConvGru;
};

// Encodes the current key feature. `context` is in feed order (the
// farthest neighbour first); the current feature is always fed last and
// the GRU starts from a zero state.
Var encode_key(const ParamStore& params, const GruParams& gru,
               const Var& current, const std::vector<KeyContext>& context,
               const EncoderOptions& options = {});

}  // namespace aten

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

#include "aten/temporal.hpp"

#include <cmath>

#include "aten/cost.hpp"
#include "aten/flow.hpp"

namespace aten {

namespace {
constexpr const char* kKernels[] = {"w_xz", "w_hz", "w_xr",
                                    "w_hr", "w_xh", "w_hh"};
constexpr const char* kBiases[] = {"b_z", "b_r", "b_h"};
}  // namespace

int GruParams::channels(const ParamStore& params) const {
  return params.get(name("w_xz")).dim(0);
}

void GruParams::validate(const ParamStore& params) const {
  for (const char* k : kKernels) {
    if (!params.contains(name(k))) {
      throw ContractViolation("convGRU parameter missing: " + name(k));
    }
  }
  for (const char* b : kBiases) {
    if (!params.contains(name(b))) {
      throw ContractViolation("convGRU parameter missing: " + name(b));
    }
  }
  const int c = channels(params);
  for (const char* k : kKernels) {
    if (params.get(name(k)).dims() != Shape{c, c, 3, 3}) {
      throw ContractViolation("convGRU kernel " + name(k) + " must be (C,C,3,3)");
    }
  }
}

void init_gru(ParamStore& params, const GruParams& gru, int channels,
              std::mt19937_64& rng) {
  const double stddev = 0.25 * std::sqrt(1.0 / (9.0 * channels));
  for (const char* k : kKernels) {
    params.add(gru.name(k), random_normal({channels, channels, 3, 3}, stddev, rng));
  }
  // Small random kernels plus an identity centre tap on the candidate input
  // path: an untrained cell blends its inputs with near-constant gates.
  Tensor& w_xh = params.mutable_value(gru.name("w_xh"));
  for (int c = 0; c < channels; ++c) {
    w_xh[((static_cast<std::size_t>(c) * channels + c) * 3 + 1) * 3 + 1] += 1.0;
  }
  params.add(gru.name("b_z"), Tensor({channels}));
  params.add(gru.name("b_r"), Tensor({channels}));
  params.add(gru.name("b_h"), Tensor({channels}));
}

Var gru_step(const ParamStore& params, const GruParams& gru, const Var& x,
             const Var& h_prev) {
  require_same_shape(x.value(), h_prev.value(), "gru_step");
  require_rank(x.value(), 3, "gru_step");
  Tape& tape = *x.tape();
  auto conv = [&](const Var& in, const char* k) {
    return ad::conv2d(in, tape.param(params, gru.name(k)), Var(), ConvGeometry{});
  };
  auto bias = [&](const char* b) { return tape.param(params, gru.name(b)); };

  Var z = ad::sigmoid(ad::add_channel_bias(
      ad::add(conv(x, "w_xz"), conv(h_prev, "w_hz")), bias("b_z")));
  Var r = ad::sigmoid(ad::add_channel_bias(
      ad::add(conv(x, "w_xr"), conv(h_prev, "w_hr")), bias("b_r")));
  Var candidate = ad::tanh(ad::add_channel_bias(
      ad::add(conv(x, "w_xh"), conv(ad::mul(r, h_prev), "w_hh")), bias("b_h")));
  return ad::add(ad::mul(ad::one_minus(z), h_prev), ad::mul(z, candidate));
}

Var encode_key(const ParamStore& params, const GruParams& gru,
               const Var& current, const std::vector<KeyContext>& context,
               const EncoderOptions& options) {
  const Tensor& cur = current.value();
  require_rank(cur, 3, "encode_key");
  std::vector<Var> sequence;
  sequence.reserve(context.size() + 1);
  for (const KeyContext& k : context) {
    require_same_shape(k.feature.value(), cur, "encode_key context feature");
    sequence.push_back(options.align ? propagate(k.feature, k.flow, k.scale)
                                     : k.feature);
  }
  sequence.push_back(current);

  CostScope cost(CostClass::kGru);
  if (options.fusion == TemporalFusion::kAverage) {
    return ad::scale(ad::add_n(sequence), 1.0 / static_cast<double>(sequence.size()));
  }
  gru.validate(params);
  if (gru.channels(params) != cur.dim(0)) {
    throw ContractViolation("encode_key: feature has " + std::to_string(cur.dim(0)) +
                            " channels, convGRU expects " +
                            std::to_string(gru.channels(params)));
  }
  Var h = current.tape()->constant(Tensor(cur.dims()));
  for (const Var& x : sequence) h = gru_step(params, gru, x, h);
  return h;
}

}  // namespace aten

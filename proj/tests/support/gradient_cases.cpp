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

#include "gradient_cases.hpp"

#include <cmath>
#include <random>

#include "aten/flow.hpp"
#include "aten/parsing_head.hpp"
#include "aten/temporal.hpp"

namespace aten::testing {

namespace {

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Random (C,H,W) with C <= 4 and H, W <= 8.
Shape random_shape(std::mt19937_64& rng, int min_hw = 3) {
  return {uniform_int(rng, 1, 4), uniform_int(rng, min_hw, 8), uniform_int(rng, min_hw, 8)};
}

// Values kept at least `gap` away from every point in `kinks`.
Tensor away_from(Tensor t, const std::vector<double>& kinks, double gap) {
  for (std::size_t i = 0; i < t.size(); ++i)
    for (double k : kinks)
      if (std::abs(t[i] - k) < gap) t[i] = k + (t[i] < k ? -gap : gap);
  return t;
}

// Reduces any output to a scalar through fixed random weights.
Var reduce(const Var& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  return ad::weighted_sum(out, random_tensor(out.dims(), rng));
}

using UnaryOp = Var (*)(const Var&);

GradientCase unary(const std::string& name, UnaryOp op, std::vector<double> kinks = {}) {
  return {name, [=](std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            const Tensor x = away_from(random_tensor(random_shape(rng), rng, -2, 2), kinks, 1e-3);
            return check_gradients(
                [&](Tape&, const std::vector<Var>& v) { return reduce(op(v[0]), seed); }, {x});
          }};
}

using BinaryOp = Var (*)(const Var&, const Var&);

GradientCase binary(const std::string& name, BinaryOp op) {
  return {name, [=](std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            const Shape s = random_shape(rng);
            return check_gradients(
                [&](Tape&, const std::vector<Var>& v) { return reduce(op(v[0], v[1]), seed); },
                {random_tensor(s, rng), random_tensor(s, rng)});
          }};
}

// Non-integer absolute positions, some outside the frame to exercise the clamp.
Tensor sample_positions(std::mt19937_64& rng, int h, int w, int oh, int ow) {
  Tensor c({2, oh, ow});
  std::uniform_real_distribution<double> ux(-0.8, w - 0.2), uy(-0.8, h - 0.2);
  for (int i = 0; i < oh * ow; ++i) {
    c[i] = ux(rng);
    c[oh * ow + i] = uy(rng);
  }
  std::vector<double> lattice;
  for (int k = -1; k <= std::max(h, w); ++k) lattice.push_back(k);
  return away_from(c, lattice, 1e-3);
}

HeadConfig tiny_head_config(int channels) {
  HeadConfig c;
  c.channels = channels;
  c.num_parts = 2;
  c.atrous_rates = {1, 2, 3};
  c.roi_size = 3;
  c.mask_size = 6;
  return c;
}

}  // namespace

std::vector<GradientCase> gradient_cases() {
  std::vector<GradientCase> cases;

  cases.push_back({"conv2d", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape s = random_shape(rng, 5);
                     const int k = uniform_int(rng, 0, 1) ? 3 : 1;
                     ConvGeometry g;
                     g.stride = uniform_int(rng, 1, 2);
                     g.dilation = uniform_int(rng, 1, 2);
                     const int co = uniform_int(rng, 1, 4);
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return reduce(ad::conv2d(v[0], v[1], v[2], g), seed);
                         },
                         {random_tensor(s, rng), random_tensor({co, s[0], k, k}, rng),
                          random_tensor({co}, rng)});
                   }});

  cases.push_back({"bilinear_sample", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape s = random_shape(rng);
                     const int oh = uniform_int(rng, 2, 8), ow = uniform_int(rng, 2, 8);
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return reduce(ad::bilinear_sample(v[0], v[1]), seed);
                         },
                         {random_tensor(s, rng), sample_positions(rng, s[1], s[2], oh, ow)});
                   }});

  cases.push_back({"resize_bilinear", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape s = random_shape(rng, 2);
                     const int oh = uniform_int(rng, 1, 8), ow = uniform_int(rng, 1, 8);
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return reduce(ad::resize_bilinear(v[0], oh, ow), seed);
                         },
                         {random_tensor(s, rng)});
                   }});

  cases.push_back({"upsample", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape s{uniform_int(rng, 1, 4), uniform_int(rng, 1, 4),
                                   uniform_int(rng, 1, 4)};
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return reduce(ad::upsample(v[0], 2), seed);
                         },
                         {random_tensor(s, rng)});
                   }});

  cases.push_back(binary("add", ad::add));
  cases.push_back(binary("sub", ad::sub));
  cases.push_back(binary("mul", ad::mul));
  cases.push_back({"scale", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return reduce(ad::scale(v[0], -1.7), seed);
                         },
                         {random_tensor(random_shape(rng), rng)});
                   }});
  cases.push_back(unary("one_minus", ad::one_minus));
  cases.push_back({"add_n", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape s = random_shape(rng);
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return reduce(ad::add_n({v[0], v[1], v[2], v[0]}), seed);
                         },
                         {random_tensor(s, rng), random_tensor(s, rng), random_tensor(s, rng)});
                   }});
  cases.push_back({"add_channel_bias", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape s = random_shape(rng);
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return reduce(ad::add_channel_bias(v[0], v[1]), seed);
                         },
                         {random_tensor(s, rng), random_tensor({s[0]}, rng)});
                   }});
  cases.push_back(unary("sigmoid", ad::sigmoid));
  cases.push_back(unary("tanh", ad::tanh));
  cases.push_back(unary("relu", ad::relu, {0.0}));
  cases.push_back({"reshape", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape s = random_shape(rng);
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return reduce(ad::reshape(v[0], {s[0] * s[1], s[2]}), seed);
                         },
                         {random_tensor(s, rng)});
                   }});
  cases.push_back({"concat_and_slice_channels", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape a = random_shape(rng);
                     const Shape b{uniform_int(rng, 1, 4), a[1], a[2]};
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           const Var cat = ad::concat_channels({v[0], v[1]});
                           const int total = a[0] + b[0];
                           return ad::add(reduce(cat, seed),
                                          reduce(ad::slice_channels(cat, 1, total - 1), seed + 1));
                         },
                         {random_tensor(a, rng), random_tensor(b, rng)});
                   }});
  cases.push_back(unary("global_avg_pool", ad::global_avg_pool));
  cases.push_back({"rms_normalize", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return reduce(ad::rms_normalize(v[0]), seed);
                         },
                         {random_tensor(random_shape(rng), rng)});
                   }});
  cases.push_back(unary("sum", ad::sum));
  cases.push_back(unary("mean", ad::mean));
  cases.push_back({"softmax_cross_entropy", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     Shape s = random_shape(rng);
                     s[0] = std::max(2, s[0]);
                     std::vector<int> labels(static_cast<std::size_t>(s[1]) * s[2]);
                     for (int& l : labels) l = uniform_int(rng, 0, s[0] - 1);
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return ad::softmax_cross_entropy(v[0], labels);
                         },
                         {random_tensor(s, rng, -3, 3)});
                   }});
  cases.push_back({"bce_with_logits", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape s = random_shape(rng);
                     const Tensor targets = random_tensor(s, rng, 0, 1);
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return ad::bce_with_logits(v[0], targets);
                         },
                         {random_tensor(s, rng, -4, 4)});
                   }});
  cases.push_back({"smooth_l1", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape s = random_shape(rng);
                     const Tensor target = random_tensor(s, rng, -2, 2);
                     Tensor diff = away_from(random_tensor(s, rng, -3, 3), {-1.0, 0.0, 1.0}, 1e-3);
                     Tensor pred(s);
                     for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = target[i] + diff[i];
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return ad::smooth_l1(v[0], target);
                         },
                         {pred});
                   }});
  cases.push_back({"roi_align", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape s = random_shape(rng, 4);
                     std::uniform_real_distribution<double> u(0.0, 1.0);
                     const double fw = 4.0 * s[2], fh = 4.0 * s[1];
                     const double x0 = u(rng) * fw * 0.5 + 0.37, y0 = u(rng) * fh * 0.5 + 0.37;
                     const Box box{x0, y0, x0 + 2.1 + u(rng) * (fw - x0 - 2.5),
                                   y0 + 2.1 + u(rng) * (fh - y0 - 2.5)};
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return reduce(roi_align(v[0], box, 3, 4, 4), seed);
                         },
                         {random_tensor(s, rng)});
                   }});
  cases.push_back({"propagate", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape s = random_shape(rng);
                     Tensor flow = random_tensor({2, s[1], s[2]}, rng, -1.5, 1.5);
                     // Keep sample positions off the integer lattice.
                     flow = away_from(flow, {-1.0, 0.0, 1.0}, 1e-3);
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v) {
                           return reduce(propagate(v[0], v[1], v[2]), seed);
                         },
                         {random_tensor(s, rng), flow, random_tensor(s, rng, 0.5, 1.5)});
                   }});
  cases.push_back({"gru_step", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const Shape s = random_shape(rng);
                     ParamStore params;
                     const GruParams gru;
                     init_gru(params, gru, s[0], rng);
                     for (const char* b : {"b_z", "b_r", "b_h"}) {
                       params.mutable_value(gru.name(b)) = random_tensor({s[0]}, rng);
                     }
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v, const ParamStore& p) {
                           return reduce(gru_step(p, gru, v[0], v[1]), seed);
                         },
                         {random_tensor(s, rng), random_tensor(s, rng)}, params, 0, seed);
                   }});
  cases.push_back({"encode_key_with_head_loss", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     const int c = uniform_int(rng, 2, 4);
                     const int fh = uniform_int(rng, 6, 8), fw = uniform_int(rng, 6, 8);
                     const Shape s{c, fh, fw};
                     const HeadConfig config = tiny_head_config(c);
                     ParamStore params;
                     const GruParams gru;
                     init_gru(params, gru, c, rng);
                     init_head(params, config, rng);
                     for (const auto& [name, e] : params.entries()) {
                       // Nudge zero biases so every path carries gradient.
                       if (e.value.rank() == 1) {
                         params.mutable_value(name) = random_tensor(e.value.dims(), rng, -0.2, 0.2);
                       }
                     }
                     const int h = 4 * fh, w = 4 * fw;
                     HeadTargets targets;
                     targets.parts = LabelMap(h, w);
                     GtInstance person;
                     person.box = {4, 3, 4 + w * 0.5, 3 + h * 0.6};
                     person.mask = LabelMap(h, w);
                     for (int y = 3; y < 3 + h * 0.6; ++y)
                       for (int x = 4; x < 4 + w * 0.5; ++x) {
                         person.mask.at(y, x) = 1;
                         targets.parts.at(y, x) = y < h / 3 ? 1 : 2;
                       }
                     targets.instances.push_back(person);
                     const std::vector<TrainingRoi> rois{
                         {{4.6, 2.7, 3.2 + w * 0.5, 3.9 + h * 0.6}, 0},
                         {{w * 0.6, h * 0.55, w - 1.3, h - 0.7}, -1}};
                     Tensor flow_a = away_from(random_tensor({2, fh, fw}, rng, -1.2, 1.2),
                                               {-1.0, 0.0, 1.0}, 1e-3);
                     Tensor flow_b = away_from(random_tensor({2, fh, fw}, rng, -1.2, 1.2),
                                               {-1.0, 0.0, 1.0}, 1e-3);
                     return check_gradients(
                         [&](Tape&, const std::vector<Var>& v, const ParamStore& p) {
                           const std::vector<KeyContext> context{{v[1], v[2], v[3]},
                                                                 {v[4], v[5], v[6]}};
                           const Var encoded = encode_key(p, gru, v[0], context);
                           const HeadPrediction pred =
                               predict_for_training(p, config, encoded, rois);
                           return multitask_loss(pred, targets, rois, config).total;
                         },
                         {random_tensor(s, rng), random_tensor(s, rng), flow_a,
                          random_tensor(s, rng, 0.8, 1.2), random_tensor(s, rng), flow_b,
                          random_tensor(s, rng, 0.8, 1.2)},
                         params, 6, seed);
                   }});
  return cases;
}

}  // namespace aten::testing

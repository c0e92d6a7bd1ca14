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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aten/ops.hpp"
#include "aten/parsing_head.hpp"
#include "support/oracles.hpp"

namespace aten {
namespace {

using testing::random_tensor;

HeadConfig small_head(int channels = 4, int parts = 3) {
  HeadConfig c;
  c.channels = channels;
  c.num_parts = parts;
  c.atrous_rates = {1, 2, 3};
  return c;
}

ParamStore head_params(const HeadConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamStore p;
  init_head(p, c, rng);
  return p;
}

TEST(Boxes, IouAndClipping) {
  EXPECT_DOUBLE_EQ(box_iou({0, 0, 2, 2}, {1, 0, 3, 2}), 2.0 / 6.0);
  EXPECT_EQ(box_iou({0, 0, 1, 1}, {2, 2, 3, 3}), 0.0);
  const Box c = clip_box({-3, 2, 40, 9}, 32, 8);
  EXPECT_EQ(c.x0, 0);
  EXPECT_EQ(c.x1, 32);
  EXPECT_EQ(c.y1, 8);
}

TEST(Boxes, DeltaRoundTrip) {
  const Box p{3, 4, 19, 12}, t{5, 2, 25, 20};
  const std::vector<double> d = encode_box_deltas(p, t);
  EXPECT_DOUBLE_EQ(d[0], (15.0 - 11.0) / 16.0);
  EXPECT_DOUBLE_EQ(d[3], std::log(18.0 / 8.0));
  const Box back = decode_box_deltas(p, d.data());
  EXPECT_NEAR(back.x0, t.x0, 1e-12);
  EXPECT_NEAR(back.y1, t.y1, 1e-12);
}

TEST(Anchors, FifteenPerLocation) {
  const AnchorConfig a;
  EXPECT_EQ(a.per_location(), 15);
  EXPECT_EQ(generate_anchors(a, 4, 5, 4).size(), 4u * 5u * 15u);
}

TEST(Anchors, SingleScaleUnitRatioGivesSquares) {
  AnchorConfig a;
  a.scales = {12};
  a.ratios = {1.0};
  const std::vector<Box> boxes = generate_anchors(a, 2, 3, 4);
  ASSERT_EQ(boxes.size(), 6u);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) {
      const Box& b = boxes[y * 3 + x];
      EXPECT_DOUBLE_EQ(b.width(), 12);
      EXPECT_DOUBLE_EQ(b.height(), 12);
      EXPECT_DOUBLE_EQ(0.5 * (b.x0 + b.x1), (x + 0.5) * 4);
      EXPECT_DOUBLE_EQ(0.5 * (b.y0 + b.y1), (y + 0.5) * 4);
    }
}

TEST(Anchors, RatiosPreserveScaleArea) {
  const AnchorConfig a;
  const std::vector<Box> boxes = generate_anchors(a, 1, 1, 4);
  for (std::size_t s = 0; s < a.scales.size(); ++s)
    for (std::size_t r = 0; r < a.ratios.size(); ++r) {
      const Box& b = boxes[s * a.ratios.size() + r];
      EXPECT_NEAR(b.width() * b.height(), a.scales[s] * a.scales[s], 1e-9);
      EXPECT_NEAR(b.height() / b.width(), a.ratios[r], 1e-12);
    }
}

TEST(Anchors, RejectsEmptyConfig) {
  AnchorConfig a;
  a.scales.clear();
  EXPECT_THROW(a.validate(), ContractViolation);
  AnchorConfig b;
  b.ratios.clear();
  EXPECT_THROW(generate_anchors(b, 2, 2, 4), ContractViolation);
}

TEST(GlobalParsing, BiasOnlyNetworkGivesUniformLogits) {
  HeadConfig c = small_head(4, 3);
  ParamStore p = head_params(c, 0);
  const Tensor b({4}, {0.1, -0.4, 0.9, 0.3});
  for (std::size_t i = 0; i < c.atrous_rates.size(); ++i) {
    const std::string name = "head.parse" + std::to_string(i);
    p.mutable_value(name + ".w") = Tensor(p.get(name + ".w").dims());
    p.mutable_value(name + ".b") = i == 0 ? b : Tensor({4});
  }
  Tape tape(false);
  const PartSegmentation seg =
      global_parsing(p, c, tape.constant(Tensor::full({4, 6, 5}, 0.7)));
  ASSERT_EQ(seg.logits.dims(), (Shape{4, 24, 20}));
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 24 * 20; ++i) EXPECT_DOUBLE_EQ(seg.logits[k * 480 + i], b[k]);
  for (std::uint8_t l : seg.labels.pixels) EXPECT_EQ(l, 2);
}

TEST(GlobalParsing, DefaultRatesGiveThreeBranches) {
  HeadConfig c;
  c.channels = 2;
  c.num_parts = 2;
  EXPECT_EQ(c.atrous_rates, (std::vector<int>{6, 12, 18}));
  const ParamStore p = head_params(c, 1);
  std::mt19937_64 rng(1);
  Tape tape(false);
  EXPECT_EQ(global_parsing_branches(p, c, tape.constant(random_tensor({2, 40, 40}, rng))).size(),
            3u);
}

TEST(GlobalParsing, FusedLogitsAreTheSumOfBranches) {
  const HeadConfig c = small_head(3, 2);
  const ParamStore p = head_params(c, 2);
  std::mt19937_64 rng(2);
  Tape tape(false);
  const Var f = tape.constant(random_tensor({3, 7, 8}, rng));
  const std::vector<Var> branches = global_parsing_branches(p, c, f);
  Tensor sum = Tensor(branches[0].dims());
  for (const Var& b : branches) sum = add(sum, b.value());
  const Tensor fused = global_parsing_logits(p, c, f).value();
  EXPECT_LT(max_abs_diff(fused, testing::naive_resize(sum, 28, 32)), 1e-12);
}

TEST(GlobalParsing, RatesShrinkOnSmallFeatures) {
  bool clamped = false;
  EXPECT_EQ(effective_atrous_rates({6, 12, 18}, 40, 40, &clamped), (std::vector<int>{6, 12, 18}));
  EXPECT_FALSE(clamped);
  const std::vector<int> small = effective_atrous_rates({6, 12, 18}, 16, 16, &clamped);
  EXPECT_TRUE(clamped);
  for (int r : small) EXPECT_LE(r, 7);
  EXPECT_LE(small[0], small[1]);
}

TEST(Argmax, TiesGoToLowerClass) {
  const Tensor logits({3, 1, 2}, {1, 0, 1, 2, 0, 2});
  const LabelMap l = argmax_labels(logits);
  EXPECT_EQ(l.pixels[0], 0);
  EXPECT_EQ(l.pixels[1], 1);
}

TEST(RoiAlign, ConstantFeature) {
  Tape tape(false);
  const Var f = tape.constant(Tensor::full({2, 6, 6}, 1.5));
  const Tensor out = roi_align(f, {3.3, 2.1, 17.9, 20.2}, 7, 7, 4).value();
  ASSERT_EQ(out.dims(), (Shape{2, 7, 7}));
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_DOUBLE_EQ(out[i], 1.5);
}

TEST(RoiAlign, WholeExtentAtFeatureSizeReadsBinCentres) {
  std::mt19937_64 rng(3);
  const Tensor feature = random_tensor({2, 5, 6}, rng);
  Tape tape(false);
  const Tensor out = roi_align(tape.constant(feature), {0, 0, 24, 20}, 5, 6, 4).value();
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 6; ++j) {
        const double x = (0 + (j + 0.5) * 4.0) / 4.0 - 0.5;
        const double y = (0 + (i + 0.5) * 4.0) / 4.0 - 0.5;
        EXPECT_NEAR(out.at(c, i, j), testing::naive_bilinear(feature, c, x, y), 1e-15);
        EXPECT_EQ(out.at(c, i, j), feature.at(c, i, j));
      }
}

TEST(RoiAlign, TranslatedBoxOnRampShiftsLinearly) {
  Tensor ramp({1, 8, 8});
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) ramp.at(0, y, x) = 0.5 * x - 0.25 * y;
  Tape tape(false);
  const Var f = tape.constant(ramp);
  const Tensor a = roi_align(f, {4, 4, 16, 16}, 3, 3, 4).value();
  const Tensor b = roi_align(f, {6, 8, 18, 20}, 3, 3, 4).value();
  // dx = 2 px = 0.5 feature px, dy = 4 px = 1 feature px.
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i] - a[i], 0.5 * 0.5 - 0.25, 1e-12);
}

TEST(RoiAlign, RejectsBoxOutsideFrame) {
  Tape tape(false);
  const Var f = tape.constant(Tensor({1, 4, 4}));
  EXPECT_THROW(roi_align(f, {20, 2, 30, 8}, 2, 2, 4), ContractViolation);
}

TEST(InstanceBranch, NoProposalsNoInstances) {
  const HeadConfig c = small_head();
  const ParamStore p = head_params(c, 4);
  Tape tape(false);
  EXPECT_TRUE(instance_branch(p, c, tape.constant(Tensor({4, 8, 8})), {}, 32, 32).empty());
}

TEST(InstanceBranch, DuplicateProposalsCollapseToOne) {
  HeadConfig c = small_head();
  c.score_threshold = 0.0;
  const ParamStore p = head_params(c, 5);
  std::mt19937_64 rng(5);
  Tape tape(false);
  const Var f = tape.constant(random_tensor({4, 8, 8}, rng));
  const Box box{4, 6, 20, 28};
  EXPECT_EQ(instance_branch(p, c, f, {box, box}, 32, 32).size(), 1u);
}

TEST(SuppressOverlaps, KeepsHighestOfEachCluster) {
  InstanceSet in(3);
  in[0].box = {0, 0, 10, 10};
  in[0].score = 0.6;
  in[1].box = {1, 1, 11, 11};
  in[1].score = 0.9;
  in[2].box = {20, 20, 30, 30};
  in[2].score = 0.7;
  const InstanceSet out = suppress_overlaps(in, 0.5);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].score, 0.9);
  EXPECT_EQ(out[1].score, 0.7);
}

LabelMap rect_mask(int h, int w, int x0, int y0, int x1, int y1) {
  LabelMap m(h, w);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.at(y, x) = 1;
  return m;
}

TEST(Fuse, LeftHalfInstanceTakesHeadLabels) {
  const HeadConfig c = small_head();
  Instance inst;
  inst.box = {0, 0, 4, 8};
  inst.score = 0.8;
  inst.mask = rect_mask(8, 8, 0, 0, 4, 8);
  const LabelMap parts(8, 8, 1);
  const InstanceParsing out = fuse({inst}, parts, c);
  ASSERT_EQ(out.size(), 1u);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) EXPECT_EQ(out[0].parts.at(y, x), x < 4 ? 1 : 0);
}

TEST(Fuse, DisjointStayDisjointAndContestedGoesToHigherScore) {
  const HeadConfig c = small_head();
  Instance a, b;
  a.score = 0.8;
  a.box = {0, 0, 6, 8};
  a.mask = rect_mask(8, 8, 0, 0, 6, 8);
  b.score = 0.9;
  b.box = {3, 0, 8, 8};
  b.mask = rect_mask(8, 8, 3, 0, 8, 8);
  const LabelMap parts(8, 8, 2);
  const InstanceParsing out = fuse({b, a}, parts, c);
  ASSERT_EQ(out.size(), 2u);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const bool high = out[0].score == 0.9;
      const ParsedInstance& winner = high ? out[0] : out[1];
      const ParsedInstance& loser = high ? out[1] : out[0];
      EXPECT_FALSE(winner.mask.at(y, x) && loser.mask.at(y, x));
      if (x >= 3) {
        EXPECT_EQ(winner.mask.at(y, x), 1);
      }
      EXPECT_EQ(loser.mask.at(y, x), x < 3 ? 1 : 0);
    }
}

TEST(Fuse, RejectsDimMismatch) {
  Instance a;
  a.score = 0.5;
  a.box = {0, 0, 2, 2};
  a.mask = rect_mask(4, 4, 0, 0, 2, 2);
  EXPECT_THROW(fuse({a}, LabelMap(5, 4), small_head()), ContractViolation);
}

TEST(TrainingRois, PositivesOverlapNegativesAvoid) {
  std::vector<GtInstance> gt(2);
  gt[0].box = {4, 4, 20, 40};
  gt[0].mask = rect_mask(48, 48, 4, 4, 20, 40);
  gt[1].box = {26, 8, 44, 44};
  gt[1].mask = rect_mask(48, 48, 26, 8, 44, 44);
  std::mt19937_64 rng(6), again(6);
  const std::vector<TrainingRoi> rois = sample_training_rois(gt, 48, 48, rng, 3, 4);
  const std::vector<TrainingRoi> repeat = sample_training_rois(gt, 48, 48, again, 3, 4);
  int positives = 0;
  for (std::size_t i = 0; i < rois.size(); ++i) {
    const TrainingRoi& r = rois[i];
    EXPECT_EQ(r.box.x0, repeat[i].box.x0);
    if (r.gt >= 0) {
      ++positives;
      EXPECT_GE(box_iou(r.box, gt[r.gt].box), 0.5);
    } else {
      for (const GtInstance& g : gt) EXPECT_LT(box_iou(r.box, g.box), 0.3);
    }
  }
  EXPECT_EQ(positives, 6);
}

TEST(MaskTarget, NearestPixelAtBinCentres) {
  const LabelMap m = rect_mask(16, 16, 4, 4, 12, 12);
  const Tensor inside = mask_target(m, {4, 4, 12, 12}, 4);
  for (std::size_t i = 0; i < inside.size(); ++i) EXPECT_EQ(inside[i], 1.0);
  const Tensor half = mask_target(m, {0, 4, 8, 12}, 2);
  EXPECT_EQ(half[0], 0.0);
  EXPECT_EQ(half[1], 1.0);
}

// Loss terms computed with explicit loops over prediction values.
struct OracleLoss {
  double parsing = 0, cls = 0, box = 0, mask = 0;
};

double log_softmax_at(const std::vector<double>& z, int k) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double s = 0;
  for (double v : z) s += std::exp(v - m);
  return z[k] - m - std::log(s);
}

OracleLoss oracle_loss(const HeadPrediction& pred, const HeadTargets& targets,
                       const std::vector<TrainingRoi>& rois, int mask_size) {
  OracleLoss o;
  const Tensor& logits = pred.parse_logits.value();
  const int k = logits.dim(0), h = logits.dim(1), w = logits.dim(2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::vector<double> z(k);
      for (int c = 0; c < k; ++c) z[c] = logits.at(c, y, x);
      o.parsing -= log_softmax_at(z, targets.parts.at(y, x));
    }
  o.parsing /= h * w;
  int positives = 0;
  for (std::size_t i = 0; i < rois.size(); ++i) {
    const Tensor& cl = pred.rois[i].cls_logits.value();
    o.cls -= log_softmax_at({cl[0], cl[1]}, rois[i].gt >= 0 ? 1 : 0);
    if (rois[i].gt < 0) continue;
    ++positives;
    const Box& p = rois[i].box;
    const Box& g = targets.instances[rois[i].gt].box;
    const double target[4] = {
        ((g.x0 + g.x1) / 2 - (p.x0 + p.x1) / 2) / (p.x1 - p.x0),
        ((g.y0 + g.y1) / 2 - (p.y0 + p.y1) / 2) / (p.y1 - p.y0),
        std::log((g.x1 - g.x0) / (p.x1 - p.x0)), std::log((g.y1 - g.y0) / (p.y1 - p.y0))};
    const Tensor& d = pred.rois[i].box_deltas.value();
    for (int j = 0; j < 4; ++j) {
      const double e = std::abs(d[j] - target[j]);
      o.box += e < 1 ? 0.5 * e * e : e - 0.5;
    }
    const Tensor& ml = pred.rois[i].mask_logits.value();
    const LabelMap& gm = targets.instances[rois[i].gt].mask;
    double bce = 0;
    for (int a = 0; a < mask_size; ++a)
      for (int b = 0; b < mask_size; ++b) {
        const double cx = p.x0 + (b + 0.5) * (p.x1 - p.x0) / mask_size;
        const double cy = p.y0 + (a + 0.5) * (p.y1 - p.y0) / mask_size;
        const int px = std::clamp(static_cast<int>(cx), 0, gm.width - 1);
        const int py = std::clamp(static_cast<int>(cy), 0, gm.height - 1);
        const double t = gm.at(py, px) ? 1.0 : 0.0;
        const double z = ml[a * mask_size + b];
        const double prob = 1.0 / (1.0 + std::exp(-z));
        bce -= t * std::log(prob) + (1 - t) * std::log(1 - prob);
      }
    o.mask += bce / (mask_size * mask_size);
  }
  o.cls /= rois.size();
  if (positives) {
    o.box /= positives;
    o.mask /= positives;
  }
  return o;
}

TEST(MultitaskLoss, MatchesScalarLoopReference) {
  for (std::uint64_t seed : {0, 1, 2}) {
    std::mt19937_64 rng(seed);
    HeadConfig c = small_head(4, 3);
    c.mask_size = 6;
    const ParamStore p = head_params(c, seed);
    HeadTargets targets;
    targets.parts = LabelMap(24, 28);
    for (auto& v : targets.parts.pixels) v = std::uniform_int_distribution<int>(0, 3)(rng);
    GtInstance a;
    a.box = {2, 3, 14, 20};
    a.mask = rect_mask(24, 28, 2, 3, 14, 20);
    GtInstance b;
    b.box = {15, 1, 27, 23};
    b.mask = rect_mask(24, 28, 15, 1, 27, 23);
    targets.instances = {a, b};
    const std::vector<TrainingRoi> rois{
        {{2.5, 2.2, 13.1, 21.7}, 0}, {{14.2, 2.6, 26.1, 22.3}, 1}, {{1, 19, 9, 23.5}, -1}};
    Tape tape;
    const Var f = tape.constant(random_tensor({4, 6, 7}, rng));
    const HeadPrediction pred = predict_for_training(p, c, f, rois);
    const LossBreakdown got = multitask_loss(pred, targets, rois, c).values();
    const OracleLoss want = oracle_loss(pred, targets, rois, c.mask_size);
    EXPECT_NEAR(got.parsing, want.parsing, 1e-10);
    EXPECT_NEAR(got.cls, want.cls, 1e-10);
    EXPECT_NEAR(got.box, want.box, 1e-10);
    EXPECT_NEAR(got.mask, want.mask, 1e-10);
    EXPECT_NEAR(got.total, want.parsing + want.cls + want.box + want.mask, 1e-10);
  }
}

TEST(MultitaskLoss, UniformLogitsGiveLogClassCount) {
  const HeadConfig c = small_head(4, 4);
  HeadTargets targets;
  targets.parts = LabelMap(8, 8, 3);
  Tape tape;
  HeadPrediction pred;
  pred.parse_logits = tape.constant(Tensor::full({5, 8, 8}, 0.3));
  const LossBreakdown l = multitask_loss(pred, targets, {}, c).values();
  EXPECT_NEAR(l.parsing, std::log(5.0), 1e-12);
  EXPECT_EQ(l.cls, 0.0);
  EXPECT_EQ(l.box, 0.0);
  EXPECT_EQ(l.mask, 0.0);
}

TEST(MultitaskLoss, ConfidentCorrectLogitsApproachZero) {
  const HeadConfig c = small_head(4, 2);
  HeadTargets targets;
  targets.parts = LabelMap(4, 4);
  for (std::size_t i = 0; i < 16; ++i) targets.parts.pixels[i] = i % 3;
  Tensor logits({3, 4, 4});
  for (int i = 0; i < 16; ++i) logits[(i % 3) * 16 + i] = 50.0;
  Tape tape;
  HeadPrediction pred;
  pred.parse_logits = tape.constant(logits);
  EXPECT_LT(multitask_loss(pred, targets, {}, c).values().parsing, 1e-20);
}

}  // namespace
}  // namespace aten

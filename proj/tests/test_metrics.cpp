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

#include "aten/metrics.hpp"
#include "json.hpp"
#include "support/oracles.hpp"

namespace aten {
namespace {

LabelMap rect(int h, int w, int x0, int y0, int x1, int y1, std::uint8_t v = 1) {
  LabelMap m(h, w);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.at(y, x) = v;
  return m;
}

EvalInstance inst(double score, const LabelMap& parts) {
  EvalInstance e;
  e.score = score;
  e.parts = parts;
  e.mask = LabelMap(parts.height, parts.width);
  for (std::size_t i = 0; i < parts.size(); ++i) e.mask.pixels[i] = parts.pixels[i] != 0;
  return e;
}

TEST(MeanIou, PerfectPrediction) {
  const LabelMap m = rect(8, 8, 1, 1, 5, 6, 2);
  EXPECT_DOUBLE_EQ(mean_iou({m}, {m}, 3).mean, 1.0);
}

TEST(MeanIou, DisjointMasksScoreZeroForTheirClass) {
  const IouResult r = mean_iou({rect(4, 8, 0, 0, 4, 4)}, {rect(4, 8, 4, 0, 8, 4)}, 2);
  EXPECT_EQ(r.per_class[1], 0.0);
  EXPECT_EQ(r.per_class[0], 0.0);
}

TEST(MeanIou, HalfOverlapIsOneThird) {
  const IouResult r = mean_iou({rect(4, 8, 0, 0, 4, 4)}, {rect(4, 8, 2, 0, 6, 4)}, 2);
  EXPECT_DOUBLE_EQ(r.per_class[1], 1.0 / 3.0);
}

TEST(MeanIou, AbsentClassesAreExcluded) {
  const LabelMap m = rect(4, 4, 0, 0, 2, 2, 1);
  const IouResult r = mean_iou({m}, {m}, 5);
  EXPECT_TRUE(std::isnan(r.per_class[3]));
  EXPECT_DOUBLE_EQ(r.mean, 1.0);
}

TEST(MeanIou, RejectsDimMismatch) {
  EXPECT_THROW(mean_iou({LabelMap(4, 4)}, {LabelMap(4, 5)}, 2), ContractViolation);
  EXPECT_THROW(mean_iou({LabelMap(4, 4)}, {LabelMap(4, 4), LabelMap(4, 4)}, 2), ContractViolation);
}

TEST(ApR, ExactMatchScoresOneEverywhere) {
  const LabelMap m = rect(8, 8, 2, 2, 6, 7);
  const ApResult r = ap_r({{{inst(0.9, m)}, {inst(1, m)}}});
  ASSERT_EQ(r.ap.size(), 10u);
  for (double v : r.ap) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(ApR, ThresholdSemantics) {
  // Ground truth 20 pixels; prediction covers 11 of them: IoU 0.55.
  const LabelMap gt = rect(4, 5, 0, 0, 5, 4);
  const LabelMap pred = rect(4, 5, 0, 0, 5, 2) ;
  LabelMap p = pred;
  p.at(2, 0) = 1;
  EXPECT_DOUBLE_EQ(mask_iou(p, gt), 0.55);
  const ApResult r = ap_r({{{inst(0.7, p)}, {inst(1, gt)}}});
  EXPECT_DOUBLE_EQ(r.ap[0], 1.0);  // 0.50
  EXPECT_DOUBLE_EQ(r.ap[2], 0.0);  // 0.60
}

TEST(ApR, RecallCapsWithOneOfTwoFound) {
  const LabelMap a = rect(8, 8, 0, 0, 3, 3), b = rect(8, 8, 4, 4, 8, 8);
  const ApResult r = ap_r({{{inst(0.9, a)}, {inst(1, a), inst(1, b)}}});
  EXPECT_DOUBLE_EQ(r.ap[0], 0.5);
}

TEST(ApR, EmptyEverywhereIsFlagged) {
  const ApResult r = ap_r({{{}, {}}});
  EXPECT_TRUE(r.undefined);
  EXPECT_DOUBLE_EQ(r.mean, 1.0);
  const ApResult none = ap_r({{{}, {inst(1, rect(4, 4, 0, 0, 2, 2))}}});
  EXPECT_FALSE(none.undefined);
  EXPECT_EQ(none.mean, 0.0);
}

TEST(ApRVol, PerfectAndEmpty) {
  LabelMap parts = rect(8, 8, 1, 1, 7, 7, 1);
  for (int x = 1; x < 7; ++x) parts.at(1, x) = 2;
  EXPECT_DOUBLE_EQ(ap_r_vol({{{inst(0.8, parts)}, {inst(1, parts)}}}, 2).mean, 1.0);
  EXPECT_DOUBLE_EQ(ap_r_vol({{{}, {inst(1, parts)}}}, 2).mean, 0.0);
}

TEST(ApRVol, TwoInstanceHandCase) {
  // A: part 1 on 4 pixels; P1 (0.9) covers half of A with part 1: part IoU 0.5.
  // B: part 2 on 4 pixels; P2 (0.8) is exact.
  const LabelMap a = rect(4, 8, 0, 0, 2, 2, 1), b = rect(4, 8, 4, 0, 6, 2, 2);
  const LabelMap p1 = rect(4, 8, 0, 0, 2, 1, 1);
  const ApResult r = ap_r_vol({{{inst(0.9, p1), inst(0.8, b)}, {inst(1, a), inst(1, b)}}}, 2);
  // Thresholds 0.1..0.5: both match, AP 1. Thresholds 0.6..0.9: P1 misses,
  // P2 hits at rank 2: precision 1/2 over recall 1/2, AP 0.25.
  for (int i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(r.ap[i], i < 5 ? 1.0 : 0.25) << i;
  EXPECT_NEAR(r.mean, (5 * 1.0 + 4 * 0.25) / 9.0, 1e-15);
}

TEST(Metrics, RandomScenesMatchBruteForce) {
  std::mt19937_64 rng(0);
  for (int scene = 0; scene < 20; ++scene) {
    const testing::RandomScene s = testing::random_scene(rng);
    const MetricsReport r = evaluate(s.pred_parts, s.gt_parts, s.frames, s.num_parts);
    EXPECT_NEAR(r.iou.mean, testing::brute_mean_iou(s.pred_parts, s.gt_parts, s.num_parts + 1),
                1e-10);
    double ap = 0, vol = 0;
    for (double t : ap_r_thresholds()) ap += testing::brute_average_precision(s.frames, t, false, 0);
    for (double t : ap_r_vol_thresholds())
      vol += testing::brute_average_precision(s.frames, t, true, s.num_parts);
    EXPECT_NEAR(r.ap_r.mean, ap / 10, 1e-10) << "scene " << scene;
    EXPECT_NEAR(r.ap_r_vol.mean, vol / 9, 1e-10) << "scene " << scene;
  }
}

TEST(Metrics, ReportJsonCarriesEveryField) {
  const LabelMap m = rect(4, 4, 0, 0, 2, 2, 1);
  const MetricsReport r = evaluate({m}, {m}, {{{inst(0.9, m)}, {inst(1, m)}}}, 2);
  const nlohmann::json j = nlohmann::json::parse(r.to_json());
  EXPECT_DOUBLE_EQ(j.at("mean_iou").get<double>(), 1.0);
  EXPECT_TRUE(j.at("iou_per_class")[2].is_null());
  EXPECT_DOUBLE_EQ(j.at("ap_r_thresholds").at("0.50").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j.at("ap_r_vol").get<double>(), 1.0);
  EXPECT_FALSE(j.at("ap_undefined").get<bool>());
  EXPECT_DOUBLE_EQ(r.ap_r_at(0.75), 1.0);
}

}  // namespace
}  // namespace aten

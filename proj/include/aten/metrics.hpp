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

// Evaluation protocols: class mean IoU for global parsing, mask AP^r for
// human instance segmentation and part-aware AP^r_vol for instance-level
// parsing.

#pragma once

#include <string>
#include <vector>

#include "aten/io.hpp"

namespace aten {

struct IouResult {
  std::vector<double> per_class;  // NaN for classes absent from pred and gt
  double mean = 0;
};

// Labels 0..num_classes-1 (background included). Counts accumulate over
// all frames before dividing.
IouResult mean_iou(const std::vector<LabelMap>& pred,
                   const std::vector<LabelMap>& gt, int num_classes);

struct EvalInstance {
  double score = 0;  // ignored for ground truth
  LabelMap mask;     // {0,1}
  LabelMap parts;    // part labels on the mask, 0 elsewhere
};

struct EvalFrame {
  std::vector<EvalInstance> pred;
  std::vector<EvalInstance> gt;
};

double mask_iou(const LabelMap& a, const LabelMap& b);
// Mean over part classes 1..num_parts present in either map of the per-class
// IoU; 0 when no part class is present.
double part_iou(const LabelMap& pred_parts, const LabelMap& gt_parts, int num_parts);

enum class InstanceOverlap { kMask, kParts };

struct ApResult {
  std::vector<double> thresholds;
  std::vector<double> ap;  // one per threshold
  double mean = 0;
  bool undefined = false;  // no ground truth and no predictions anywhere
};

// Score-descending greedy matching across all frames (ties keep frame, then
// list order); each ground truth is matched at most once, to the unmatched
// instance of highest overlap. The PR curve is integrated with all-point
// interpolation.
ApResult average_precision(const std::vector<EvalFrame>& frames,
                           const std::vector<double>& thresholds,
                           InstanceOverlap overlap, int num_parts = 0);

std::vector<double> ap_r_thresholds();      // 0.50, 0.55, ..., 0.95
std::vector<double> ap_r_vol_thresholds();  // 0.1, 0.2, ..., 0.9

ApResult ap_r(const std::vector<EvalFrame>& frames);
ApResult ap_r_vol(const std::vector<EvalFrame>& frames, int num_parts);

struct MetricsReport {
  IouResult iou;
  ApResult ap_r;
  ApResult ap_r_vol;

  double ap_r_at(double threshold) const;
  std::string to_json() const;
};

MetricsReport evaluate(const std::vector<LabelMap>& pred_parts,
                       const std::vector<LabelMap>& gt_parts,
                       const std::vector<EvalFrame>& frames, int num_parts);

}  // namespace aten

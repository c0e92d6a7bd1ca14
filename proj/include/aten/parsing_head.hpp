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

// Two-branch parsing head on stride-4 features.
//
// The global branch sums three parallel dilated 3x3 convolutions into
// per-pixel part logits and upsamples them to frame resolution. The
// instance branch crops ROI features with ROI-align and predicts a
// person/background score, box refinement deltas and a 14x14 mask. Fusing
// both restricts the part labels to each instance mask.

#pragma once

#include <optional>
#include <random>
#include <vector>

#include "aten/autodiff.hpp"
#include "aten/io.hpp"

namespace aten {

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
  bool operator==(const Box&) const = default;
};

double box_iou(const Box& a, const Box& b);
Box clip_box(const Box& b, double width, double height);

struct AnchorConfig {
  std::vector<double> scales{8, 16, 24, 32, 48};
  std::vector<double> ratios{0.5, 1.0, 2.0};  // height / width

  int per_location() const {
    return static_cast<int>(scales.size() * ratios.size());
  }
  void validate() const;
};

// scales x ratios boxes per feature location, centred on the location's
// frame-space centre; location-major, then scale, then ratio.
std::vector<Box> generate_anchors(const AnchorConfig& config, int feature_h,
                                  int feature_w, int stride);

struct HeadConfig {
  int channels = 32;
  int num_parts = 5;  // part classes; label 0 is background
  std::vector<int> atrous_rates{6, 12, 18};
  int stride = 4;
  int roi_size = 7;
  int mask_size = 14;
  double score_threshold = 0.5;
  double nms_iou = 0.5;
  int max_proposals = 16;
  double proposal_min_score = 0.15;
  bool fill_background_with_majority = false;
  AnchorConfig anchors;

  int num_classes() const { return num_parts + 1; }
  void validate() const;
};

void init_head(ParamStore& params, const HeadConfig& config, std::mt19937_64& rng);

// Dilation rates actually used on a feature of the given extent: when the
// largest rate reaches past (min(H,W)-1)/2 all rates shrink proportionally.
std::vector<int> effective_atrous_rates(const std::vector<int>& rates,
                                        int feature_h, int feature_w,
                                        bool* clamped = nullptr);

struct PartSegmentation {
  Tensor logits;    // (K+1, H, W) at frame resolution
  LabelMap labels;  // argmax, ties to the lower class
};

// Per-branch logits at feature resolution, before summation.
std::vector<Var> global_parsing_branches(const ParamStore& params,
                                         const HeadConfig& config,
                                         const Var& feature);
// Summed branch logits upsampled to frame resolution.
Var global_parsing_logits(const ParamStore& params, const HeadConfig& config,
                          const Var& feature);
PartSegmentation global_parsing(const ParamStore& params, const HeadConfig& config,
                                const Var& feature);
LabelMap argmax_labels(const Tensor& logits);

// Samples one point per bin centre of `box` (frame pixels, clipped to the
// frame first) from the stride-`stride` feature. Throws for boxes with no
// area after clipping.
Var roi_align(const Var& feature, const Box& box, int out_h, int out_w, int stride);

struct RoiPrediction {
  Var cls_logits;   // (2,1,1): background, person
  Var box_deltas;   // (4,1,1): dx, dy, dw, dh
  Var mask_logits;  // (1, mask_size, mask_size)
};

RoiPrediction roi_head(const ParamStore& params, const HeadConfig& config,
                       const Var& feature, const Box& box);

// (dx, dy, dw, dh) relative to `proposal`.
std::vector<double> encode_box_deltas(const Box& proposal, const Box& target);
Box decode_box_deltas(const Box& proposal, const double deltas[4]);

struct Instance {
  Box box;
  double score = 0;
  LabelMap mask;  // {0,1}, frame resolution
};
using InstanceSet = std::vector<Instance>;  // sorted by descending score

// Greedy suppression on box IoU in descending score order (stable).
InstanceSet suppress_overlaps(InstanceSet instances, double iou_threshold);

InstanceSet instance_branch(const ParamStore& params, const HeadConfig& config,
                            const Var& feature, const std::vector<Box>& proposals,
                            int frame_h, int frame_w);

// Anchor scoring over a foreground probability map (1,H,W): each anchor is
// scored by (foreground fill of the box) x (share of the surrounding
// foreground it captures), then greedily suppressed.
std::vector<Box> anchor_proposals(const HeadConfig& config,
                                  const Tensor& foreground, int feature_h,
                                  int feature_w);
Tensor foreground_probability(const Tensor& part_logits);

struct ParsedInstance {
  Box box;
  double score = 0;
  LabelMap mask;   // pixels owned after overlap resolution
  LabelMap parts;  // part labels on owned pixels, 0 elsewhere
};
using InstanceParsing = std::vector<ParsedInstance>;

// Contested pixels go to the highest-scoring instance.
InstanceParsing fuse(const InstanceSet& instances, const LabelMap& parts,
                     const HeadConfig& config);

struct HeadOutput {
  PartSegmentation parts;
  InstanceSet instances;
  InstanceParsing parsing;
};

// Full inference pass. Uses anchor-scored proposals unless `proposals` is
// given.
HeadOutput run_head(const ParamStore& params, const HeadConfig& config,
                    const Var& feature,
                    const std::optional<std::vector<Box>>& proposals = std::nullopt);

// ---------------------------------------------------------------------------
// Training

struct GtInstance {
  Box box;
  LabelMap mask;
};

struct HeadTargets {
  LabelMap parts;
  std::vector<GtInstance> instances;
};

struct TrainingRoi {
  Box box;
  int gt = -1;  // index into HeadTargets::instances, -1 for background
};

// Jittered ground-truth boxes (positives, IoU >= 0.5 with their source) and
// random background boxes (IoU < 0.3 with every instance).
std::vector<TrainingRoi> sample_training_rois(const std::vector<GtInstance>& gt,
                                              int frame_h, int frame_w,
                                              std::mt19937_64& rng,
                                              int jitters_per_instance = 2,
                                              int negatives = 2);

// Binary mask target for a ROI: the instance mask read at the bin centres.
Tensor mask_target(const LabelMap& mask, const Box& box, int size);

struct HeadPrediction {
  Var parse_logits;
  std::vector<RoiPrediction> rois;
};

HeadPrediction predict_for_training(const ParamStore& params,
                                    const HeadConfig& config, const Var& feature,
                                    const std::vector<TrainingRoi>& rois);

struct LossBreakdown {
  double parsing = 0, cls = 0, box = 0, mask = 0, total = 0;
};

struct HeadLoss {
  Var parsing, cls, box, mask, total;
  LossBreakdown values() const;
};

// total = parsing + cls + box + mask, unweighted. parsing: pixel-mean
// softmax cross-entropy; cls: ROI-mean softmax cross-entropy; box: mean
// over positive ROIs of the smooth-L1 delta error; mask: mean over positive
// ROIs of the pixel-mean binary cross-entropy.
HeadLoss multitask_loss(const HeadPrediction& prediction,
                        const HeadTargets& targets,
                        const std::vector<TrainingRoi>& rois,
                        const HeadConfig& config);

}  // namespace aten

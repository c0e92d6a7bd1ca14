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

// Key-frame video pipeline: segment planning, two-phase inference, the
// training sampler and the runtime cost model.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "aten/backbone.hpp"
#include "aten/cost.hpp"
#include "aten/flow.hpp"
#include "aten/parsing_head.hpp"
#include "aten/synthdata.hpp"
#include "aten/temporal.hpp"

namespace aten {

// ---------------------------------------------------------------------------
// Model

struct ModelConfig {
  BackboneConfig backbone;
  HeadConfig head;
  FlowNetConfig flow;

  // Keeps head and flow widths in step with the backbone.
  static ModelConfig with_channels(int channels, int num_parts);
  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

struct Model {
  ModelConfig config;
  ParamStore params;
  GruParams gru;
};

Model init_model(const ModelConfig& config, std::uint64_t seed);
// Checkpoint directory: model.json plus the parameter checkpoint.
void save_model(const std::filesystem::path& dir, const Model& model);
Model load_model(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Planning

struct PipelineConfig {
  int segment_length = 3;  // l
  int encoding_range = 2;  // p
  FlowSource flow_source = FlowSource::kLearned;
  EncoderOptions encoder;
  bool streaming = false;  // bounded key-feature cache instead of two phases

  void validate() const;
};

struct Segment {
  int begin = 0;  // first frame
  int end = 0;    // one past the last frame
  int key = 0;
};
using SegmentPlan = std::vector<Segment>;

// ceil(n / l) consecutive segments; key = begin + floor(len / 2) where len
// is the segment's own length (l except possibly for the tail).
SegmentPlan plan_segments(int num_frames, int segment_length);

// Segment indices whose keys feed the encoder for segment `s`, in feed
// order. The p preceding keys, oldest first; when fewer than p precede,
// the following keys farthest first (as many as exist, up to p).
std::vector<int> context_segments(const SegmentPlan& plan, int s, int p);

// ---------------------------------------------------------------------------
// Inference

struct Video {
  std::vector<Tensor> frames;
  // Frame-resolution flow on `target`'s grid into `reference`; needed only
  // for the ground-truth flow source.
  std::function<Tensor(int target, int reference)> flow;
};

Video video_from(const Dataset& data);

struct SequenceResult {
  SegmentPlan plan;
  std::vector<HeadOutput> frames;
  double wall_ms = 0;
};

// Algorithm 1. Counts MACs into the active CostCounter when one is set.
SequenceResult infer_sequence(const Model& model, const Video& video,
                              const PipelineConfig& config);

// Reference path: every frame through the backbone, a single encoder step
// with no context, then the head.
SequenceResult infer_per_frame(const Model& model, const Video& video,
                               const EncoderOptions& encoder = {});

// ---------------------------------------------------------------------------
// Cost model

// Per-call complexities O(.) of each function class.
struct Complexity {
  double feat = 0, flow = 0, warp = 0, gru = 0, parse = 0;
};

Complexity per_call_complexity(const CostCounter& counter);
double ratio_exact(const Complexity& c, int l, int p);
double ratio_approx(const Complexity& c, int l, int p);

struct CostReport {
  std::array<std::uint64_t, kNumCostClasses> macs{};
  std::array<std::uint64_t, kNumCostClasses> calls{};
  Complexity complexity;
  double r_exact = 0;
  double r_approx = 0;
  double r_measured = 0;  // total MACs / (frames * (O(feat) + O(parse)))
  double pipeline_ms = 0;
  double baseline_ms = 0;  // < 0 when not measured

  std::string to_json() const;
};

CostReport make_cost_report(const CostCounter& counter, const PipelineConfig& config,
                            int num_frames, double pipeline_ms, double baseline_ms = -1);

// ---------------------------------------------------------------------------
// Training

struct TrainingSample {
  int video = 0;  // index into the training set
  int key = 0;
  std::vector<int> context;  // key frame indices in feed order
  int target = 0;
};

// Uniform key among the plan's keys, context by context_segments, target
// uniform over the key's segment.
TrainingSample sample_training_batch(int num_frames, const PipelineConfig& config,
                                     std::mt19937_64& rng);
TrainingSample training_sample_for(int num_frames, const PipelineConfig& config,
                                   int key, int target);

struct TrainOptions {
  int steps = 200;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool fixed_batch = false;  // reuse the first sampled batch every step
  int rois_per_instance = 2;
  int negative_rois = 2;
  // Rescales the whole gradient when its L2 norm exceeds this; 0 disables.
  double clip_norm = 0.0;
  // Cosine decay of the step size from lr to 0 over `steps`.
  bool cosine_decay = false;
};

// Forward + backward of the multitask loss on one sample; returns the loss
// values and fills `grads`.
LossBreakdown training_loss(const Model& model, const Dataset& data,
                            const TrainingSample& sample, const PipelineConfig& config,
                            const TrainOptions& options, std::mt19937_64& rng,
                            GradientSet* grads);

// Scales `grads` in place so their global L2 norm is at most `max_norm`;
// returns the norm before scaling.
double clip_gradients(GradientSet* grads, double max_norm);

using StepCallback =
    std::function<void(int, const TrainingSample&, const LossBreakdown&)>;

// Plain SGD over samples drawn from a uniformly chosen video of `data`.
// `on_step(step, sample, loss)` runs after every update.
std::vector<LossBreakdown> train(Model& model, const std::vector<const Dataset*>& data,
                                 const PipelineConfig& config,
                                 const TrainOptions& options,
                                 const StepCallback& on_step = nullptr);
std::vector<LossBreakdown> train(
    Model& model, const Dataset& data, const PipelineConfig& config,
    const TrainOptions& options,
    const StepCallback& on_step = nullptr);

}  // namespace aten

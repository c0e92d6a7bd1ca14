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

#include "aten/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>

#include "aten/parallel.hpp"
#include "json.hpp"

namespace aten {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Model

ModelConfig ModelConfig::with_channels(int channels, int num_parts) {
  ModelConfig c;
  c.backbone.channels = channels;
  c.head.channels = channels;
  c.head.num_parts = num_parts;
  c.flow.feature_channels = channels;
  return c;
}

void ModelConfig::validate() const {
  backbone.validate();
  head.validate();
  if (head.channels != backbone.channels || flow.feature_channels != backbone.channels) {
    throw ContractViolation("model: head and flow widths must equal the backbone width " +
                            std::to_string(backbone.channels));
  }
  if (head.stride != BackboneConfig::kStride || flow.stride != BackboneConfig::kStride) {
    throw ContractViolation("model: head and flow stride must be 4");
  }
  if (flow.hidden_channels < 1) throw ContractViolation("model: flow hidden width < 1");
}

std::string ModelConfig::to_json() const {
  ordered_json j;
  j["format"] = "aten-model-1";
  j["backbone"] = {{"channels", backbone.channels}, {"depth", backbone.depth}};
  ordered_json h;
  h["channels"] = head.channels;
  h["num_parts"] = head.num_parts;
  h["atrous_rates"] = head.atrous_rates;
  h["roi_size"] = head.roi_size;
  h["mask_size"] = head.mask_size;
  h["score_threshold"] = head.score_threshold;
  h["nms_iou"] = head.nms_iou;
  h["max_proposals"] = head.max_proposals;
  h["proposal_min_score"] = head.proposal_min_score;
  h["fill_background_with_majority"] = head.fill_background_with_majority;
  h["anchor_scales"] = head.anchors.scales;
  h["anchor_ratios"] = head.anchors.ratios;
  j["head"] = h;
  j["flow"] = {{"feature_channels", flow.feature_channels},
               {"hidden_channels", flow.hidden_channels}};
  return j.dump(2) + "\n";
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    c.backbone.channels = j.at("backbone").at("channels").get<int>();
    c.backbone.depth = j.at("backbone").at("depth").get<int>();
    const auto& h = j.at("head");
    c.head.channels = h.at("channels").get<int>();
    c.head.num_parts = h.at("num_parts").get<int>();
    c.head.atrous_rates = h.at("atrous_rates").get<std::vector<int>>();
    c.head.roi_size = h.at("roi_size").get<int>();
    c.head.mask_size = h.at("mask_size").get<int>();
    c.head.score_threshold = h.at("score_threshold").get<double>();
    c.head.nms_iou = h.at("nms_iou").get<double>();
    c.head.max_proposals = h.at("max_proposals").get<int>();
    c.head.proposal_min_score = h.at("proposal_min_score").get<double>();
    c.head.fill_background_with_majority = h.at("fill_background_with_majority").get<bool>();
    c.head.anchors.scales = h.at("anchor_scales").get<std::vector<double>>();
    c.head.anchors.ratios = h.at("anchor_ratios").get<std::vector<double>>();
    c.flow.feature_channels = j.at("flow").at("feature_channels").get<int>();
    c.flow.hidden_channels = j.at("flow").at("hidden_channels").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model config unreadable: " + std::string(e.what()));
  }
  c.validate();
  return c;
}

Model init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m;
  m.config = config;
  std::mt19937_64 rng(seed);
  init_backbone(m.params, config.backbone, rng);
  init_gru(m.params, m.gru, config.backbone.channels, rng);
  init_flow_net(m.params, config.flow, rng);
  init_head(m.params, config.head, rng);
  return m;
}

void save_model(const std::filesystem::path& dir, const Model& model) {
  save_checkpoint(dir, model.params);
  write_text_file(dir / "model.json", model.config.to_json());
}

Model load_model(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "model.json")) {
    throw DataError("checkpoint has no model.json: " + dir.string());
  }
  Model m;
  m.config = ModelConfig::from_json(read_text_file(dir / "model.json"));
  m.params = load_checkpoint(dir);
  // Shapes must agree with a freshly built model of the same config.
  const Model reference = init_model(m.config, 0);
  for (const auto& [name, entry] : reference.params.entries()) {
    if (!m.params.contains(name)) {
      throw DataError("checkpoint is missing parameter " + name);
    }
    if (m.params.get(name).dims() != entry.value.dims()) {
      throw DataError("checkpoint parameter " + name + " has dims " +
                      shape_to_string(m.params.get(name).dims()) + ", expected " +
                      shape_to_string(entry.value.dims()));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Planning

void PipelineConfig::validate() const {
  if (segment_length < 1) throw ContractViolation("segment length must be >= 1");
  if (encoding_range < 0) throw ContractViolation("encoding range must be >= 0");
}

SegmentPlan plan_segments(int num_frames, int segment_length) {
  if (num_frames < 1) throw ContractViolation("plan_segments: video has no frames");
  if (segment_length < 1) throw ContractViolation("plan_segments: segment length < 1");
  SegmentPlan plan;
  for (int begin = 0; begin < num_frames; begin += segment_length) {
    const int end = std::min(num_frames, begin + segment_length);
    plan.push_back({begin, end, begin + (end - begin) / 2});
  }
  return plan;
}

std::vector<int> context_segments(const SegmentPlan& plan, int s, int p) {
  const int n = static_cast<int>(plan.size());
  if (s < 0 || s >= n) throw ContractViolation("context_segments: segment out of range");
  std::vector<int> out;
  if (p == 0) return out;
  if (s >= p) {
    for (int j = s - p; j < s; ++j) out.push_back(j);
    return out;
  }
  const int latter = std::min(p, n - 1 - s);
  for (int j = s + latter; j > s; --j) out.push_back(j);
  return out;
}

// ---------------------------------------------------------------------------
// Inference

Video video_from(const Dataset& data) {
  Video v;
  for (int t = 0; t < data.num_frames(); ++t) v.frames.push_back(data.frame(t));
  v.flow = [&data](int target, int reference) { return data.flow(target, reference); };
  return v;
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

void check_video(const Video& video) {
  if (video.frames.empty()) throw DataError("video has no frames");
  const Shape& dims = video.frames[0].dims();
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    const Shape& d = video.frames[t].dims();
    if (d.size() != 3 || d[0] != 3 || d != dims || d[1] % BackboneConfig::kStride ||
        d[2] % BackboneConfig::kStride) {
      throw DataError("frame " + std::to_string(t) + " has dims " + shape_to_string(d) +
                      "; expected 3xHxW matching frame 0 with H, W multiples of 4");
    }
  }
}

FlowEstimate estimate(Tape& tape, const Model& model, const Video& video,
                      FlowSource source, int target, int reference) {
  std::optional<Tensor> gt;
  if (source == FlowSource::kGroundTruth) {
    if (!video.flow) throw ContractViolation("ground-truth flow source needs stored flow");
    CounterScope uncounted(nullptr);  // reading stored flow is not model compute
    gt = video.flow(target, reference);
  }
  FlowRequest req{tape.constant(video.frames[target]),
                  tape.constant(video.frames[reference]), gt ? &*gt : nullptr};
  return estimate_flow(tape, model.params, model.config.flow, source, req);
}

Tensor key_feature(const Model& model, const Tensor& frame) {
  Tape tape(false);
  return extract_features(model.params, model.config.backbone, tape.constant(frame)).value();
}

}  // namespace

SequenceResult infer_sequence(const Model& model, const Video& video,
                              const PipelineConfig& config) {
  config.validate();
  check_video(video);
  const auto start = std::chrono::steady_clock::now();
  const int n = static_cast<int>(video.frames.size());
  SequenceResult result;
  result.plan = plan_segments(n, config.segment_length);
  result.frames.resize(n);
  const SegmentPlan& plan = result.plan;
  const int segments = static_cast<int>(plan.size());
  const int p = config.encoding_range;

  auto process = [&](int s, const std::function<const Tensor&(int)>& feature_of) {
    Tape tape(false);
    const int k = plan[s].key;
    std::vector<KeyContext> context;
    for (int cs : context_segments(plan, s, p)) {
      const FlowEstimate est =
          estimate(tape, model, video, config.flow_source, k, plan[cs].key);
      context.push_back({tape.constant(feature_of(cs)), est.flow, est.scale});
    }
    const Var encoded = encode_key(model.params, model.gru, tape.constant(feature_of(s)),
                                   context, config.encoder);
    result.frames[k] = run_head(model.params, model.config.head, encoded);
    for (int t = plan[s].begin; t < plan[s].end; ++t) {
      if (t == k) continue;
      const FlowEstimate est = estimate(tape, model, video, config.flow_source, t, k);
      result.frames[t] =
          run_head(model.params, model.config.head, propagate(encoded, est.flow, est.scale));
    }
  };

  if (!config.streaming) {
    // Phase 1: every key feature; phase 2: per-segment encoding and heads.
    std::vector<Tensor> features(segments);
    parallel_for(segments, [&](std::size_t s) {
      features[s] = key_feature(model, video.frames[plan[s].key]);
    });
    parallel_for(segments, [&](std::size_t s) {
      process(static_cast<int>(s), [&](int j) -> const Tensor& { return features[j]; });
    });
  } else {
    // Keeps only the key features the current and later segments still need.
    std::map<int, Tensor> cache;
    for (int s = 0; s < segments; ++s) {
      auto feature_of = [&](int j) -> const Tensor& {
        auto it = cache.find(j);
        if (it == cache.end()) {
          it = cache.emplace(j, key_feature(model, video.frames[plan[j].key])).first;
        }
        return it->second;
      };
      process(s, feature_of);
      const int keep_from = s + 1 - p;
      while (!cache.empty() && cache.begin()->first < keep_from) cache.erase(cache.begin());
    }
  }
  result.wall_ms = elapsed_ms(start);
  return result;
}

SequenceResult infer_per_frame(const Model& model, const Video& video,
                               const EncoderOptions& encoder) {
  check_video(video);
  const auto start = std::chrono::steady_clock::now();
  const int n = static_cast<int>(video.frames.size());
  SequenceResult result;
  result.plan = plan_segments(n, 1);
  result.frames.resize(n);
  parallel_for(n, [&](std::size_t t) {
    const Tensor feature = key_feature(model, video.frames[t]);
    Tape tape(false);
    const Var encoded =
        encode_key(model.params, model.gru, tape.constant(feature), {}, encoder);
    result.frames[t] = run_head(model.params, model.config.head, encoded);
  });
  result.wall_ms = elapsed_ms(start);
  return result;
}

// ---------------------------------------------------------------------------
// Cost model

Complexity per_call_complexity(const CostCounter& counter) {
  auto per_call = [&](CostClass c) {
    const std::uint64_t calls = counter.calls(c);
    return calls ? static_cast<double>(counter.macs(c)) / static_cast<double>(calls) : 0.0;
  };
  return {per_call(CostClass::kFeature), per_call(CostClass::kFlow),
          per_call(CostClass::kWarp), per_call(CostClass::kGru),
          per_call(CostClass::kParse)};
}

double ratio_exact(const Complexity& c, int l, int p) {
  if (l < 1 || p < 0) throw ContractViolation("ratio_exact: need l >= 1 and p >= 0");
  const double denom = l * (c.feat + c.parse);
  if (!(denom > 0)) throw ContractViolation("ratio_exact: zero baseline cost");
  return (c.gru + (l + p) * (c.warp + c.flow) + l * c.parse + c.feat) / denom;
}

double ratio_approx(const Complexity& c, int l, int p) {
  if (l < 1 || p < 0) throw ContractViolation("ratio_approx: need l >= 1 and p >= 0");
  if (!(c.feat > 0)) throw ContractViolation("ratio_approx: zero feature cost");
  return (l + p) * c.flow / (l * c.feat) + 1.0 / l;
}

CostReport make_cost_report(const CostCounter& counter, const PipelineConfig& config,
                            int num_frames, double pipeline_ms, double baseline_ms) {
  CostReport r;
  for (int i = 0; i < kNumCostClasses; ++i) {
    r.macs[i] = counter.macs(static_cast<CostClass>(i));
    r.calls[i] = counter.calls(static_cast<CostClass>(i));
  }
  r.complexity = per_call_complexity(counter);
  r.r_exact = ratio_exact(r.complexity, config.segment_length, config.encoding_range);
  r.r_approx = ratio_approx(r.complexity, config.segment_length, config.encoding_range);
  r.r_measured = static_cast<double>(counter.total_macs()) /
                 (num_frames * (r.complexity.feat + r.complexity.parse));
  r.pipeline_ms = pipeline_ms;
  r.baseline_ms = baseline_ms;
  return r;
}

std::string CostReport::to_json() const {
  ordered_json j;
  ordered_json counts, calls_json, per_call;
  for (int i = 0; i < kNumCostClasses; ++i) {
    const std::string name(cost_class_name(static_cast<CostClass>(i)));
    counts[name] = macs[i];
    calls_json[name] = calls[i];
  }
  per_call["feat"] = complexity.feat;
  per_call["flow"] = complexity.flow;
  per_call["warp"] = complexity.warp;
  per_call["gru"] = complexity.gru;
  per_call["parse"] = complexity.parse;
  j["counts"] = counts;
  j["calls"] = calls_json;
  j["per_call"] = per_call;
  j["r_exact"] = r_exact;
  j["r_approx"] = r_approx;
  j["r_measured"] = r_measured;
  ordered_json wall;
  wall["pipeline"] = pipeline_ms;
  if (baseline_ms >= 0) wall["baseline"] = baseline_ms;
  j["wall_ms"] = wall;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Training

TrainingSample training_sample_for(int num_frames, const PipelineConfig& config, int key,
                                   int target) {
  config.validate();
  const SegmentPlan plan = plan_segments(num_frames, config.segment_length);
  for (int s = 0; s < static_cast<int>(plan.size()); ++s) {
    if (plan[s].key != key) continue;
    if (target < plan[s].begin || target >= plan[s].end) {
      throw ContractViolation("training sample: target " + std::to_string(target) +
                              " outside the key's segment");
    }
    TrainingSample sample;
    sample.key = key;
    sample.target = target;
    for (int cs : context_segments(plan, s, config.encoding_range)) {
      sample.context.push_back(plan[cs].key);
    }
    return sample;
  }
  throw ContractViolation("training sample: frame " + std::to_string(key) +
                          " is not a key frame");
}

TrainingSample sample_training_batch(int num_frames, const PipelineConfig& config,
                                     std::mt19937_64& rng) {
  const SegmentPlan plan = plan_segments(num_frames, config.segment_length);
  const Segment& seg = plan[std::uniform_int_distribution<std::size_t>(
      0, plan.size() - 1)(rng)];
  const int target = std::uniform_int_distribution<int>(seg.begin, seg.end - 1)(rng);
  return training_sample_for(num_frames, config, seg.key, target);
}

LossBreakdown training_loss(const Model& model, const Dataset& data,
                            const TrainingSample& sample, const PipelineConfig& config,
                            const TrainOptions& options, std::mt19937_64& rng,
                            GradientSet* grads) {
  const Video video = video_from(data);
  Tape tape(true);
  auto features = [&](int t) {
    return extract_features(model.params, model.config.backbone,
                            tape.constant(video.frames[t]));
  };
  std::vector<KeyContext> context;
  for (int kk : sample.context) {
    const FlowEstimate est = estimate(tape, model, video, config.flow_source, sample.key, kk);
    context.push_back({features(kk), est.flow, est.scale});
  }
  const Var encoded =
      encode_key(model.params, model.gru, features(sample.key), context, config.encoder);
  Var target_feature = encoded;
  if (sample.target != sample.key) {
    const FlowEstimate est =
        estimate(tape, model, video, config.flow_source, sample.target, sample.key);
    target_feature = propagate(encoded, est.flow, est.scale);
  }
  HeadTargets targets{data.part_labels(sample.target), data.instances(sample.target)};
  const std::vector<TrainingRoi> rois =
      sample_training_rois(targets.instances, data.height(), data.width(), rng,
                           options.rois_per_instance, options.negative_rois);
  const HeadPrediction pred =
      predict_for_training(model.params, model.config.head, target_feature, rois);
  const HeadLoss loss = multitask_loss(pred, targets, rois, model.config.head);
  if (grads) *grads = tape.backward(loss.total, model.params);
  return loss.values();
}

double clip_gradients(GradientSet* grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, g] : *grads) {
    for (std::size_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [name, g] : *grads) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s;
    }
  }
  return norm;
}

std::vector<LossBreakdown> train(Model& model, const std::vector<const Dataset*>& data,
                                 const PipelineConfig& config,
                                 const TrainOptions& options,
                                 const StepCallback& on_step) {
  config.validate();
  if (data.empty()) throw ContractViolation("train: no training videos");
  if (options.steps < 0) throw ContractViolation("train: steps must be >= 0");
  if (!(options.lr >= 0)) throw ContractViolation("train: learning rate must be >= 0");
  std::mt19937_64 rng(options.seed);
  std::optional<TrainingSample> fixed;
  std::vector<LossBreakdown> history;
  for (int step = 0; step < options.steps; ++step) {
    TrainingSample sample;
    if (fixed) {
      sample = *fixed;
    } else {
      const int video = static_cast<int>(
          std::uniform_int_distribution<std::size_t>(0, data.size() - 1)(rng));
      sample = sample_training_batch(data[video]->num_frames(), config, rng);
      sample.video = video;
      if (options.fixed_batch) fixed = sample;
    }
    std::mt19937_64 roi_rng(options.fixed_batch ? options.seed
                                                : options.seed * 7919ULL + step + 1);
    GradientSet grads;
    const LossBreakdown loss = training_loss(model, *data[sample.video], sample, config,
                                             options, roi_rng, &grads);
    if (options.clip_norm > 0) clip_gradients(&grads, options.clip_norm);
    double lr = options.lr;
    if (options.cosine_decay) {
      lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * step / options.steps));
    }
    sgd_step(model.params, grads, lr);
    history.push_back(loss);
    if (on_step) on_step(step, sample, loss);
  }
  return history;
}

std::vector<LossBreakdown> train(Model& model, const Dataset& data,
                                 const PipelineConfig& config,
                                 const TrainOptions& options,
                                 const StepCallback& on_step) {
  return train(model, std::vector<const Dataset*>{&data}, config, options, on_step);
}

}  // namespace aten

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

#include "aten/parsing_head.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numeric>

#include "aten/cost.hpp"

namespace aten {

double box_iou(const Box& a, const Box& b) {
  const double ix = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double iy = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

Box clip_box(const Box& b, double width, double height) {
  return {std::clamp(b.x0, 0.0, width), std::clamp(b.y0, 0.0, height),
          std::clamp(b.x1, 0.0, width), std::clamp(b.y1, 0.0, height)};
}

void AnchorConfig::validate() const {
  if (scales.empty() || ratios.empty()) {
    throw ContractViolation("anchors: scales and ratios must be non-empty");
  }
  for (double s : scales) {
    if (!(s > 0)) throw ContractViolation("anchors: scales must be positive");
  }
  for (double r : ratios) {
    if (!(r > 0)) throw ContractViolation("anchors: ratios must be positive");
  }
}

std::vector<Box> generate_anchors(const AnchorConfig& config, int feature_h,
                                  int feature_w, int stride) {
  config.validate();
  if (feature_h < 1 || feature_w < 1 || stride < 1) {
    throw ContractViolation("generate_anchors: dims must be positive");
  }
  std::vector<Box> anchors;
  anchors.reserve(static_cast<std::size_t>(feature_h) * feature_w *
                  config.per_location());
  for (int y = 0; y < feature_h; ++y) {
    for (int x = 0; x < feature_w; ++x) {
      const double cx = (x + 0.5) * stride;
      const double cy = (y + 0.5) * stride;
      for (double s : config.scales) {
        for (double r : config.ratios) {
          const double w = s / std::sqrt(r);
          const double h = s * std::sqrt(r);
          anchors.push_back({cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2});
        }
      }
    }
  }
  return anchors;
}

void HeadConfig::validate() const {
  if (channels < 1 || num_parts < 1) {
    throw ContractViolation("head: channels and num_parts must be positive");
  }
  if (atrous_rates.empty()) throw ContractViolation("head: no atrous rates");
  for (int r : atrous_rates) {
    if (r < 1) throw ContractViolation("head: atrous rates must be >= 1");
  }
  if (roi_size < 1 || mask_size < 1 || stride < 1) {
    throw ContractViolation("head: roi/mask sizes and stride must be positive");
  }
  anchors.validate();
}

namespace {

void add_conv(ParamStore& params, const std::string& name, int out, int in,
              int k, double stddev, std::mt19937_64& rng) {
  params.add(name + ".w", random_normal({out, in, k, k}, stddev, rng));
  params.add(name + ".b", Tensor({out}));
}

Var conv(const ParamStore& params, const Var& x, const std::string& name,
         const ConvGeometry& g = {}) {
  Tape& tape = *x.tape();
  return ad::conv2d(x, tape.param(params, name + ".w"),
                    tape.param(params, name + ".b"), g);
}

}  // namespace

void init_head(ParamStore& params, const HeadConfig& config, std::mt19937_64& rng) {
  config.validate();
  const int c = config.channels;
  const int k = config.num_classes();
  for (std::size_t i = 0; i < config.atrous_rates.size(); ++i) {
    add_conv(params, "head.parse" + std::to_string(i), k, c, 3,
             std::sqrt(1.0 / (9.0 * c)), rng);
  }
  add_conv(params, "head.roi.conv1", c, c, 3, std::sqrt(2.0 / (9.0 * c)), rng);
  add_conv(params, "head.roi.conv2", c, c, 3, std::sqrt(2.0 / (9.0 * c)), rng);
  add_conv(params, "head.cls", 2, c, 1, std::sqrt(1.0 / c), rng);
  add_conv(params, "head.box", 4, c, 1, 0.01, rng);
  add_conv(params, "head.mask.conv", c, c, 3, std::sqrt(2.0 / (9.0 * c)), rng);
  add_conv(params, "head.mask.out", 1, c, 1, std::sqrt(1.0 / c), rng);
}

std::vector<int> effective_atrous_rates(const std::vector<int>& rates,
                                        int feature_h, int feature_w,
                                        bool* clamped) {
  const int limit = std::max(1, (std::min(feature_h, feature_w) - 1) / 2);
  const int largest = *std::max_element(rates.begin(), rates.end());
  if (clamped) *clamped = largest > limit;
  if (largest <= limit) return rates;
  std::vector<int> out;
  out.reserve(rates.size());
  for (int r : rates) {
    const long scaled = std::lround(static_cast<double>(r) * limit / largest);
    out.push_back(static_cast<int>(std::max(1L, scaled)));
  }
  return out;
}

std::vector<Var> global_parsing_branches(const ParamStore& params,
                                         const HeadConfig& config,
                                         const Var& feature) {
  const Tensor& f = feature.value();
  require_rank(f, 3, "global_parsing");
  if (f.dim(0) != config.channels) {
    throw ContractViolation("global_parsing: feature has " +
                            std::to_string(f.dim(0)) + " channels, head expects " +
                            std::to_string(config.channels));
  }
  bool clamped = false;
  const std::vector<int> rates =
      effective_atrous_rates(config.atrous_rates, f.dim(1), f.dim(2), &clamped);
  if (clamped) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
      std::cerr << "warning: atrous rates clamped for " << f.dim(1) << "x"
                << f.dim(2) << " features:";
      for (int r : rates) std::cerr << ' ' << r;
      std::cerr << '\n';
    }
  }
  std::vector<Var> branches;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    ConvGeometry g;
    g.dilation = rates[i];
    branches.push_back(conv(params, feature, "head.parse" + std::to_string(i), g));
  }
  return branches;
}

Var global_parsing_logits(const ParamStore& params, const HeadConfig& config,
                          const Var& feature) {
  return ad::upsample(ad::add_n(global_parsing_branches(params, config, feature)),
                      config.stride);
}

LabelMap argmax_labels(const Tensor& logits) {
  require_rank(logits, 3, "argmax_labels");
  const int k = logits.dim(0), h = logits.dim(1), w = logits.dim(2);
  const std::size_t n = static_cast<std::size_t>(h) * w;
  LabelMap labels(h, w);
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < k; ++c) {
      if (logits[c * n + i] > logits[best * n + i]) best = c;
    }
    labels.pixels[i] = static_cast<std::uint8_t>(best);
  }
  return labels;
}

PartSegmentation global_parsing(const ParamStore& params, const HeadConfig& config,
                                const Var& feature) {
  PartSegmentation out;
  out.logits = global_parsing_logits(params, config, feature).value();
  out.labels = argmax_labels(out.logits);
  return out;
}

Var roi_align(const Var& feature, const Box& box, int out_h, int out_w, int stride) {
  const Tensor& f = feature.value();
  require_rank(f, 3, "roi_align");
  if (out_h < 1 || out_w < 1) throw ContractViolation("roi_align: empty output");
  const Box b = clip_box(box, static_cast<double>(f.dim(2)) * stride,
                         static_cast<double>(f.dim(1)) * stride);
  if (b.area() <= 0) throw ContractViolation("roi_align: box has no area");
  Tensor coords({2, out_h, out_w});
  const std::size_t n = static_cast<std::size_t>(out_h) * out_w;
  const double bw = b.width() / out_w;
  const double bh = b.height() / out_h;
  for (int i = 0; i < out_h; ++i) {
    for (int j = 0; j < out_w; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * out_w + j;
      coords[idx] = (b.x0 + (j + 0.5) * bw) / stride - 0.5;
      coords[n + idx] = (b.y0 + (i + 0.5) * bh) / stride - 0.5;
    }
  }
  return ad::bilinear_sample(feature, feature.tape()->constant(std::move(coords)));
}

namespace {

Var roi_trunk(const ParamStore& params, const HeadConfig& config,
              const Var& feature, const Box& box) {
  Var x = roi_align(feature, box, config.roi_size, config.roi_size, config.stride);
  x = ad::relu(conv(params, x, "head.roi.conv1"));
  return ad::relu(conv(params, x, "head.roi.conv2"));
}

Var mask_from_trunk(const ParamStore& params, const HeadConfig& config,
                    const Var& trunk) {
  Var m = ad::relu(conv(params, trunk, "head.mask.conv"));
  m = ad::resize_bilinear(m, config.mask_size, config.mask_size);
  return conv(params, m, "head.mask.out");
}

}  // namespace

RoiPrediction roi_head(const ParamStore& params, const HeadConfig& config,
                       const Var& feature, const Box& box) {
  Var trunk = roi_trunk(params, config, feature, box);
  Var pooled = ad::global_avg_pool(trunk);
  return {conv(params, pooled, "head.cls"), conv(params, pooled, "head.box"),
          mask_from_trunk(params, config, trunk)};
}

namespace {
constexpr double kMaxLogScale = 4.135166556742356;  // log(1000 / 16)
}

std::vector<double> encode_box_deltas(const Box& p, const Box& t) {
  const double pw = p.width(), ph = p.height();
  const double pcx = p.x0 + 0.5 * pw, pcy = p.y0 + 0.5 * ph;
  const double tw = t.width(), th = t.height();
  const double tcx = t.x0 + 0.5 * tw, tcy = t.y0 + 0.5 * th;
  return {(tcx - pcx) / pw, (tcy - pcy) / ph, std::log(tw / pw), std::log(th / ph)};
}

Box decode_box_deltas(const Box& p, const double d[4]) {
  const double pw = p.width(), ph = p.height();
  const double cx = p.x0 + 0.5 * pw + d[0] * pw;
  const double cy = p.y0 + 0.5 * ph + d[1] * ph;
  const double w = pw * std::exp(std::clamp(d[2], -kMaxLogScale, kMaxLogScale));
  const double h = ph * std::exp(std::clamp(d[3], -kMaxLogScale, kMaxLogScale));
  return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

InstanceSet suppress_overlaps(InstanceSet instances, double iou_threshold) {
  std::stable_sort(instances.begin(), instances.end(),
                   [](const Instance& a, const Instance& b) { return a.score > b.score; });
  InstanceSet kept;
  for (Instance& cand : instances) {
    bool overlaps = false;
    for (const Instance& k : kept) {
      if (box_iou(k.box, cand.box) > iou_threshold ||
          (k.box == cand.box && cand.box.area() > 0)) {
        overlaps = true;
        break;
      }
    }
    if (!overlaps) kept.push_back(std::move(cand));
  }
  return kept;
}

namespace {

LabelMap paste_mask(const Tensor& probs, const Box& box, int frame_h, int frame_w) {
  const int size_h = probs.dim(1), size_w = probs.dim(2);
  LabelMap mask(frame_h, frame_w);
  const int y_lo = std::max(0, static_cast<int>(std::floor(box.y0)));
  const int y_hi = std::min(frame_h, static_cast<int>(std::ceil(box.y1)));
  const int x_lo = std::max(0, static_cast<int>(std::floor(box.x0)));
  const int x_hi = std::min(frame_w, static_cast<int>(std::ceil(box.x1)));
  if (y_lo >= y_hi || x_lo >= x_hi) return mask;
  Tensor coords({2, y_hi - y_lo, x_hi - x_lo});
  const std::size_t n = static_cast<std::size_t>(y_hi - y_lo) * (x_hi - x_lo);
  for (int y = y_lo; y < y_hi; ++y) {
    for (int x = x_lo; x < x_hi; ++x) {
      const std::size_t i = static_cast<std::size_t>(y - y_lo) * (x_hi - x_lo) + (x - x_lo);
      coords[i] = (x + 0.5 - box.x0) / box.width() * size_w - 0.5;
      coords[n + i] = (y + 0.5 - box.y0) / box.height() * size_h - 0.5;
    }
  }
  const Tensor sampled = bilinear_sample(probs, coords);
  for (int y = y_lo; y < y_hi; ++y) {
    for (int x = x_lo; x < x_hi; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      if (cx < box.x0 || cx > box.x1 || cy < box.y0 || cy > box.y1) continue;
      const std::size_t i = static_cast<std::size_t>(y - y_lo) * (x_hi - x_lo) + (x - x_lo);
      mask.at(y, x) = sampled[i] >= 0.5 ? 1 : 0;
    }
  }
  return mask;
}

}  // namespace

InstanceSet instance_branch(const ParamStore& params, const HeadConfig& config,
                            const Var& feature, const std::vector<Box>& proposals,
                            int frame_h, int frame_w) {
  InstanceSet candidates;
  for (const Box& raw : proposals) {
    const Box proposal = clip_box(raw, frame_w, frame_h);
    if (proposal.area() <= 0) continue;  // rejected instance
    Var trunk = roi_trunk(params, config, feature, proposal);
    Var pooled = ad::global_avg_pool(trunk);
    const Tensor cls = conv(params, pooled, "head.cls").value();
    const double score = sigmoid_scalar(cls[1] - cls[0]);
    if (score < config.score_threshold) continue;
    const Tensor deltas = conv(params, pooled, "head.box").value();
    const double d[4] = {deltas[0], deltas[1], deltas[2], deltas[3]};
    const Box refined = clip_box(decode_box_deltas(proposal, d), frame_w, frame_h);
    if (refined.area() <= 0) continue;
    Var refined_trunk = roi_trunk(params, config, feature, refined);
    const Tensor probs =
        sigmoid(mask_from_trunk(params, config, refined_trunk).value());
    candidates.push_back({refined, score, paste_mask(probs, refined, frame_h, frame_w)});
  }
  return suppress_overlaps(std::move(candidates), config.nms_iou);
}

Tensor foreground_probability(const Tensor& logits) {
  require_rank(logits, 3, "foreground_probability");
  const int k = logits.dim(0);
  const std::size_t n = static_cast<std::size_t>(logits.dim(1)) * logits.dim(2);
  Tensor fg({1, logits.dim(1), logits.dim(2)});
  for (std::size_t i = 0; i < n; ++i) {
    double m = logits[i];
    for (int c = 1; c < k; ++c) m = std::max(m, logits[c * n + i]);
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += std::exp(logits[c * n + i] - m);
    fg[i] = 1.0 - std::exp(logits[i] - m) / s;
  }
  return fg;
}

namespace {

class IntegralImage {
 public:
  explicit IntegralImage(const Tensor& map)
      : h_(map.dim(1)), w_(map.dim(2)),
        sums_(static_cast<std::size_t>(h_ + 1) * (w_ + 1), 0.0) {
    for (int y = 0; y < h_; ++y) {
      double row = 0.0;
      for (int x = 0; x < w_; ++x) {
        row += map[static_cast<std::size_t>(y) * w_ + x];
        at(y + 1, x + 1) = at(y, x + 1) + row;
      }
    }
  }
  // Sum over pixels [x0,x1) x [y0,y1) after clamping to the image.
  double sum(int x0, int y0, int x1, int y1) const {
    x0 = std::clamp(x0, 0, w_);
    x1 = std::clamp(x1, 0, w_);
    y0 = std::clamp(y0, 0, h_);
    y1 = std::clamp(y1, 0, h_);
    if (x0 >= x1 || y0 >= y1) return 0.0;
    return get(y1, x1) - get(y0, x1) - get(y1, x0) + get(y0, x0);
  }

 private:
  double& at(int y, int x) { return sums_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
  double get(int y, int x) const { return sums_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
  int h_, w_;
  std::vector<double> sums_;
};

}  // namespace

std::vector<Box> anchor_proposals(const HeadConfig& config, const Tensor& foreground,
                                  int feature_h, int feature_w) {
  require_rank(foreground, 3, "anchor_proposals");
  const int fh = foreground.dim(1), fw = foreground.dim(2);
  const IntegralImage integral(foreground);
  const std::vector<Box> anchors =
      generate_anchors(config.anchors, feature_h, feature_w, config.stride);
  struct Scored {
    Box box;
    double score;
  };
  std::vector<Scored> scored;
  for (const Box& a : anchors) {
    const Box b = clip_box(a, fw, fh);
    const int x0 = static_cast<int>(std::lround(b.x0));
    const int x1 = static_cast<int>(std::lround(b.x1));
    const int y0 = static_cast<int>(std::lround(b.y0));
    const int y1 = static_cast<int>(std::lround(b.y1));
    const double area = static_cast<double>(x1 - x0) * (y1 - y0);
    if (x1 <= x0 || y1 <= y0) continue;
    const double inside = integral.sum(x0, y0, x1, y1);
    if (inside <= 0) continue;
    const double cx = 0.5 * (a.x0 + a.x1), cy = 0.5 * (a.y0 + a.y1);
    const double hw = 0.75 * a.width(), hh = 0.75 * a.height();
    const double context =
        integral.sum(static_cast<int>(std::lround(cx - hw)),
                     static_cast<int>(std::lround(cy - hh)),
                     static_cast<int>(std::lround(cx + hw)),
                     static_cast<int>(std::lround(cy + hh)));
    const double score = (inside / area) * (inside / std::max(context, inside));
    if (score >= config.proposal_min_score) {
      scored.push_back({Box{static_cast<double>(x0), static_cast<double>(y0),
                            static_cast<double>(x1), static_cast<double>(y1)},
                        score});
    }
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });
  std::vector<Box> kept;
  for (const Scored& s : scored) {
    if (static_cast<int>(kept.size()) >= config.max_proposals) break;
    bool overlaps = false;
    for (const Box& k : kept) {
      if (box_iou(k, s.box) > config.nms_iou) {
        overlaps = true;
        break;
      }
    }
    if (!overlaps) kept.push_back(s.box);
  }
  return kept;
}

InstanceParsing fuse(const InstanceSet& instances, const LabelMap& parts,
                     const HeadConfig& config) {
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return instances[a].score > instances[b].score;
  });
  LabelMap claimed(parts.height, parts.width);
  InstanceParsing out;
  for (std::size_t idx : order) {
    const Instance& inst = instances[idx];
    if (inst.mask.height != parts.height || inst.mask.width != parts.width) {
      throw ContractViolation("fuse: instance mask and part map dims differ");
    }
    ParsedInstance p;
    p.box = inst.box;
    p.score = inst.score;
    p.mask = LabelMap(parts.height, parts.width);
    p.parts = LabelMap(parts.height, parts.width);
    std::vector<int> histogram(256, 0);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (!inst.mask.pixels[i] || claimed.pixels[i]) continue;
      claimed.pixels[i] = 1;
      p.mask.pixels[i] = 1;
      p.parts.pixels[i] = parts.pixels[i];
      if (parts.pixels[i]) ++histogram[parts.pixels[i]];
    }
    if (config.fill_background_with_majority) {
      const auto best = std::max_element(histogram.begin() + 1, histogram.end());
      if (*best > 0) {
        const auto label = static_cast<std::uint8_t>(best - histogram.begin());
        for (std::size_t i = 0; i < parts.size(); ++i) {
          if (p.mask.pixels[i] && !p.parts.pixels[i]) p.parts.pixels[i] = label;
        }
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

HeadOutput run_head(const ParamStore& params, const HeadConfig& config,
                    const Var& feature,
                    const std::optional<std::vector<Box>>& proposals) {
  CostScope cost(CostClass::kParse);
  const Tensor& f = feature.value();
  require_rank(f, 3, "run_head");
  const int frame_h = f.dim(1) * config.stride;
  const int frame_w = f.dim(2) * config.stride;
  HeadOutput out;
  out.parts = global_parsing(params, config, feature);
  const std::vector<Box> boxes =
      proposals ? *proposals
                : anchor_proposals(config, foreground_probability(out.parts.logits),
                                   f.dim(1), f.dim(2));
  out.instances = instance_branch(params, config, feature, boxes, frame_h, frame_w);
  out.parsing = fuse(out.instances, out.parts.labels, config);
  return out;
}

// ---------------------------------------------------------------------------
// Training

std::vector<TrainingRoi> sample_training_rois(const std::vector<GtInstance>& gt,
                                              int frame_h, int frame_w,
                                              std::mt19937_64& rng,
                                              int jitters_per_instance,
                                              int negatives) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  std::vector<TrainingRoi> rois;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    const Box& b = gt[g].box;
    for (int j = 0; j < jitters_per_instance; ++j) {
      Box chosen = b;
      for (int attempt = 0; attempt < 10; ++attempt) {
        const double w = b.width() * std::exp(uniform(-0.15, 0.15));
        const double h = b.height() * std::exp(uniform(-0.15, 0.15));
        const double cx = b.x0 + 0.5 * b.width() + uniform(-0.1, 0.1) * b.width();
        const double cy = b.y0 + 0.5 * b.height() + uniform(-0.1, 0.1) * b.height();
        const Box cand = clip_box({cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2},
                                  frame_w, frame_h);
        if (cand.area() > 0 && box_iou(cand, b) >= 0.5) {
          chosen = cand;
          break;
        }
      }
      rois.push_back({chosen, static_cast<int>(g)});
    }
  }
  for (int n = 0; n < negatives; ++n) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      const double s = uniform(8.0, 32.0);
      const double r = std::exp(uniform(std::log(0.5), std::log(2.0)));
      const double w = s / std::sqrt(r), h = s * std::sqrt(r);
      const double x0 = uniform(0.0, std::max(1.0, frame_w - w));
      const double y0 = uniform(0.0, std::max(1.0, frame_h - h));
      const Box cand = clip_box({x0, y0, x0 + w, y0 + h}, frame_w, frame_h);
      double worst = 0.0;
      for (const GtInstance& g : gt) worst = std::max(worst, box_iou(cand, g.box));
      if (cand.area() > 0 && worst < 0.3) {
        rois.push_back({cand, -1});
        break;
      }
    }
  }
  return rois;
}

Tensor mask_target(const LabelMap& mask, const Box& box, int size) {
  Tensor t({1, size, size});
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double cx = box.x0 + (j + 0.5) * box.width() / size;
      const double cy = box.y0 + (i + 0.5) * box.height() / size;
      const int px = std::clamp(static_cast<int>(std::floor(cx)), 0, mask.width - 1);
      const int py = std::clamp(static_cast<int>(std::floor(cy)), 0, mask.height - 1);
      t[static_cast<std::size_t>(i) * size + j] = mask.at(py, px) ? 1.0 : 0.0;
    }
  }
  return t;
}

HeadPrediction predict_for_training(const ParamStore& params,
                                    const HeadConfig& config, const Var& feature,
                                    const std::vector<TrainingRoi>& rois) {
  CostScope cost(CostClass::kParse);
  HeadPrediction pred;
  pred.parse_logits = global_parsing_logits(params, config, feature);
  for (const TrainingRoi& r : rois) {
    pred.rois.push_back(roi_head(params, config, feature, r.box));
  }
  return pred;
}

LossBreakdown HeadLoss::values() const {
  LossBreakdown b;
  b.parsing = parsing.value().item();
  b.cls = cls.value().item();
  b.box = box.value().item();
  b.mask = mask.value().item();
  b.total = total.value().item();
  return b;
}

HeadLoss multitask_loss(const HeadPrediction& prediction, const HeadTargets& targets,
                        const std::vector<TrainingRoi>& rois, const HeadConfig& config) {
  if (prediction.rois.size() != rois.size()) {
    throw ContractViolation("multitask_loss: prediction/ROI count mismatch");
  }
  const Tensor& logits = prediction.parse_logits.value();
  if (logits.dim(1) != targets.parts.height || logits.dim(2) != targets.parts.width) {
    throw ContractViolation("multitask_loss: part target dims do not match logits");
  }
  Tape& tape = *prediction.parse_logits.tape();
  std::vector<int> labels(targets.parts.pixels.begin(), targets.parts.pixels.end());
  HeadLoss loss;
  loss.parsing = ad::softmax_cross_entropy(prediction.parse_logits, labels);

  std::vector<Var> cls_terms, box_terms, mask_terms;
  for (std::size_t i = 0; i < rois.size(); ++i) {
    const TrainingRoi& roi = rois[i];
    const RoiPrediction& p = prediction.rois[i];
    const bool positive = roi.gt >= 0;
    cls_terms.push_back(ad::softmax_cross_entropy(p.cls_logits, {positive ? 1 : 0}));
    if (!positive) continue;
    if (roi.gt >= static_cast<int>(targets.instances.size())) {
      throw ContractViolation("multitask_loss: ROI refers to a missing instance");
    }
    const GtInstance& gt = targets.instances[roi.gt];
    const std::vector<double> d = encode_box_deltas(roi.box, gt.box);
    box_terms.push_back(ad::smooth_l1(p.box_deltas, Tensor({4, 1, 1}, d)));
    mask_terms.push_back(ad::bce_with_logits(
        p.mask_logits, mask_target(gt.mask, roi.box, config.mask_size)));
  }
  auto mean_of = [&](const std::vector<Var>& terms) {
    if (terms.empty()) return tape.constant(Tensor::scalar(0.0));
    return ad::scale(ad::add_n(terms), 1.0 / static_cast<double>(terms.size()));
  };
  loss.cls = mean_of(cls_terms);
  loss.box = mean_of(box_terms);
  loss.mask = mean_of(mask_terms);
  loss.total = ad::add(ad::add(ad::add(loss.parsing, loss.cls), loss.box), loss.mask);
  return loss;
}

}  // namespace aten

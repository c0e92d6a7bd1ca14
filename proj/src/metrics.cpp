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

#include "aten/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace aten {

namespace {

void require_same_dims(const LabelMap& a, const LabelMap& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw ContractViolation(std::string(what) + ": label maps differ in size (" +
                            std::to_string(a.height) + "x" + std::to_string(a.width) +
                            " vs " + std::to_string(b.height) + "x" +
                            std::to_string(b.width) + ")");
  }
}

}  // namespace

IouResult mean_iou(const std::vector<LabelMap>& pred, const std::vector<LabelMap>& gt,
                   int num_classes) {
  if (pred.size() != gt.size()) {
    throw ContractViolation("mean_iou: prediction and ground-truth frame counts differ");
  }
  if (num_classes < 1) throw ContractViolation("mean_iou: num_classes must be >= 1");
  std::vector<std::uint64_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (std::size_t f = 0; f < pred.size(); ++f) {
    require_same_dims(pred[f], gt[f], "mean_iou");
    for (std::size_t i = 0; i < pred[f].size(); ++i) {
      const int p = pred[f].pixels[i], g = gt[f].pixels[i];
      if (p >= num_classes || g >= num_classes) {
        throw ContractViolation("mean_iou: label " + std::to_string(std::max(p, g)) +
                                " out of range");
      }
      if (p == g) {
        ++tp[p];
      } else {
        ++fp[p];
        ++fn[g];
      }
    }
  }
  IouResult r;
  r.per_class.assign(num_classes, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    const std::uint64_t denom = tp[c] + fp[c] + fn[c];
    if (denom == 0) continue;
    r.per_class[c] = static_cast<double>(tp[c]) / static_cast<double>(denom);
    sum += r.per_class[c];
    ++present;
  }
  r.mean = present ? sum / present : 1.0;
  return r;
}

double mask_iou(const LabelMap& a, const LabelMap& b) {
  require_same_dims(a, b, "mask_iou");
  std::uint64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.pixels[i] != 0, y = b.pixels[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

double part_iou(const LabelMap& pred, const LabelMap& gt, int num_parts) {
  require_same_dims(pred, gt, "part_iou");
  std::vector<std::uint64_t> inter(num_parts + 1, 0), uni(num_parts + 1, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int p = pred.pixels[i], g = gt.pixels[i];
    if (p > num_parts || g > num_parts) {
      throw ContractViolation("part_iou: part label out of range");
    }
    if (p == g) {
      if (p) {
        ++inter[p];
        ++uni[p];
      }
    } else {
      if (p) ++uni[p];
      if (g) ++uni[g];
    }
  }
  double sum = 0.0;
  int present = 0;
  for (int c = 1; c <= num_parts; ++c) {
    if (!uni[c]) continue;
    sum += static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
    ++present;
  }
  return present ? sum / present : 0.0;
}

std::vector<double> ap_r_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

std::vector<double> ap_r_vol_thresholds() {
  std::vector<double> t;
  for (int i = 1; i <= 9; ++i) t.push_back(0.1 * i);
  return t;
}

ApResult average_precision(const std::vector<EvalFrame>& frames,
                           const std::vector<double>& thresholds,
                           InstanceOverlap overlap, int num_parts) {
  struct Ranked {
    std::size_t frame, index;
    double score;
  };
  std::vector<Ranked> ranked;
  std::size_t total_gt = 0;
  // Overlap matrices per frame, pred-major.
  std::vector<std::vector<double>> overlaps(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const EvalFrame& fr = frames[f];
    total_gt += fr.gt.size();
    for (std::size_t i = 0; i < fr.pred.size(); ++i) {
      ranked.push_back({f, i, fr.pred[i].score});
      for (const EvalInstance& g : fr.gt) {
        overlaps[f].push_back(overlap == InstanceOverlap::kMask
                                  ? mask_iou(fr.pred[i].mask, g.mask)
                                  : part_iou(fr.pred[i].parts, g.parts, num_parts));
      }
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

  ApResult result;
  result.thresholds = thresholds;
  result.undefined = total_gt == 0 && ranked.empty();
  for (double thr : thresholds) {
    if (total_gt == 0) {
      result.ap.push_back(ranked.empty() ? 1.0 : 0.0);
      continue;
    }
    std::vector<std::vector<bool>> matched(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
      matched[f].assign(frames[f].gt.size(), false);
    }
    std::vector<double> precision, recall;
    std::size_t tp = 0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      const Ranked& p = ranked[r];
      const std::size_t ng = frames[p.frame].gt.size();
      int best = -1;
      double best_iou = -1.0;
      for (std::size_t g = 0; g < ng; ++g) {
        if (matched[p.frame][g]) continue;
        const double iou = overlaps[p.frame][p.index * ng + g];
        if (iou >= thr && iou > best_iou) {
          best = static_cast<int>(g);
          best_iou = iou;
        }
      }
      if (best >= 0) {
        matched[p.frame][best] = true;
        ++tp;
      }
      precision.push_back(static_cast<double>(tp) / static_cast<double>(r + 1));
      recall.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
    }
    for (std::size_t i = precision.size(); i-- > 1;) {
      precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double ap = 0.0, prev_recall = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
    result.ap.push_back(ap);
  }
  result.mean = result.ap.empty()
                    ? 0.0
                    : std::accumulate(result.ap.begin(), result.ap.end(), 0.0) /
                          static_cast<double>(result.ap.size());
  return result;
}

ApResult ap_r(const std::vector<EvalFrame>& frames) {
  return average_precision(frames, ap_r_thresholds(), InstanceOverlap::kMask);
}

ApResult ap_r_vol(const std::vector<EvalFrame>& frames, int num_parts) {
  return average_precision(frames, ap_r_vol_thresholds(), InstanceOverlap::kParts,
                           num_parts);
}

double MetricsReport::ap_r_at(double threshold) const {
  for (std::size_t i = 0; i < ap_r.thresholds.size(); ++i) {
    if (std::abs(ap_r.thresholds[i] - threshold) < 1e-9) return ap_r.ap[i];
  }
  throw ContractViolation("ap_r_at: threshold not evaluated");
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["mean_iou"] = iou.mean;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
  for (double v : iou.per_class) {
    if (std::isnan(v)) {
      per_class.push_back(nullptr);
    } else {
      per_class.push_back(v);
    }
  }
  j["iou_per_class"] = per_class;
  j["ap_r"] = ap_r.mean;
  nlohmann::ordered_json thr = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < ap_r.thresholds.size(); ++i) {
    char key[16];
    std::snprintf(key, sizeof(key), "%.2f", ap_r.thresholds[i]);
    thr[key] = ap_r.ap[i];
  }
  j["ap_r_thresholds"] = thr;
  j["ap_r_vol"] = ap_r_vol.mean;
  j["ap_undefined"] = ap_r.undefined;
  return j.dump(2) + "\n";
}

MetricsReport evaluate(const std::vector<LabelMap>& pred_parts,
                       const std::vector<LabelMap>& gt_parts,
                       const std::vector<EvalFrame>& frames, int num_parts) {
  MetricsReport r;
  r.iou = mean_iou(pred_parts, gt_parts, num_parts + 1);
  r.ap_r = ap_r(frames);
  r.ap_r_vol = ap_r_vol(frames, num_parts);
  return r;
}

}  // namespace aten

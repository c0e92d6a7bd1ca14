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

#include "aten/predictions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace aten {

namespace {

std::string frame_dir(int frame) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", frame);
  return buf;
}

std::string instance_file(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "instance_%02zu.pgm", i);
  return buf;
}

}  // namespace

FramePrediction prediction_from(const HeadOutput& head) {
  return {head.parts.labels, head.parsing};
}

void write_frame_prediction(const std::filesystem::path& dir, int frame,
                            const FramePrediction& prediction) {
  const std::filesystem::path fdir = dir / "frames" / frame_dir(frame);
  std::filesystem::create_directories(fdir);
  write_pgm(fdir / "parts.pgm", prediction.parts);
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < prediction.instances.size(); ++i) {
    const ParsedInstance& inst = prediction.instances[i];
    LabelMap labels(inst.mask.height, inst.mask.width);
    for (std::size_t p = 0; p < labels.size(); ++p) {
      if (!inst.mask.pixels[p]) continue;
      labels.pixels[p] = inst.parts.pixels[p] ? inst.parts.pixels[p] : kMaskedBackground;
    }
    write_pgm(fdir / instance_file(i), labels);
    nlohmann::ordered_json j;
    j["box"] = {inst.box.x0, inst.box.y0, inst.box.x1, inst.box.y1};
    j["score"] = inst.score;
    j["labels"] = instance_file(i);
    list.push_back(j);
  }
  nlohmann::ordered_json doc;
  doc["frame"] = frame;
  doc["instances"] = list;
  write_text_file(fdir / "instances.json", doc.dump(2) + "\n");
}

std::vector<FramePrediction> read_predictions(const std::filesystem::path& dir) {
  std::vector<FramePrediction> out;
  for (int t = 0;; ++t) {
    const std::filesystem::path fdir = dir / "frames" / frame_dir(t);
    if (!std::filesystem::exists(fdir)) break;
    FramePrediction p;
    p.parts = read_pgm(fdir / "parts.pgm");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_text_file(fdir / "instances.json"));
      for (const auto& j : doc.at("instances")) {
        ParsedInstance inst;
        const auto box = j.at("box").get<std::vector<double>>();
        if (box.size() != 4) throw DataError("box must have 4 values");
        inst.box = {box[0], box[1], box[2], box[3]};
        inst.score = j.at("score").get<double>();
        const LabelMap labels = read_pgm(fdir / j.at("labels").get<std::string>());
        if (labels.height != p.parts.height || labels.width != p.parts.width) {
          throw DataError("instance map size differs from parts.pgm");
        }
        inst.mask = LabelMap(labels.height, labels.width);
        inst.parts = LabelMap(labels.height, labels.width);
        for (std::size_t i = 0; i < labels.size(); ++i) {
          if (!labels.pixels[i]) continue;
          inst.mask.pixels[i] = 1;
          if (labels.pixels[i] != kMaskedBackground) inst.parts.pixels[i] = labels.pixels[i];
        }
        p.instances.push_back(std::move(inst));
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("frame " + std::to_string(t) + " predictions unreadable: " + e.what());
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) throw DataError("no predictions under " + dir.string());
  return out;
}

FramePrediction ground_truth_prediction(const Dataset& data, int frame) {
  FramePrediction p;
  p.parts = data.part_labels(frame);
  for (const GtInstance& g : data.instances(frame)) {
    ParsedInstance inst;
    inst.box = g.box;
    inst.score = 1.0;
    inst.mask = g.mask;
    inst.parts = LabelMap(g.mask.height, g.mask.width);
    for (std::size_t i = 0; i < g.mask.size(); ++i) {
      if (g.mask.pixels[i]) inst.parts.pixels[i] = p.parts.pixels[i];
    }
    p.instances.push_back(std::move(inst));
  }
  return p;
}

MetricsReport evaluate_predictions(const std::vector<FramePrediction>& predictions,
                                   const Dataset& data) {
  if (static_cast<int>(predictions.size()) != data.num_frames()) {
    throw DataError("prediction has " + std::to_string(predictions.size()) +
                    " frames, ground truth has " + std::to_string(data.num_frames()));
  }
  std::vector<LabelMap> pred_parts, gt_parts;
  std::vector<EvalFrame> frames;
  for (int t = 0; t < data.num_frames(); ++t) {
    const FramePrediction gt = ground_truth_prediction(data, t);
    const FramePrediction& pr = predictions[t];
    if (pr.parts.height != gt.parts.height || pr.parts.width != gt.parts.width) {
      throw DataError("frame " + std::to_string(t) + ": prediction size differs from ground truth");
    }
    pred_parts.push_back(pr.parts);
    gt_parts.push_back(gt.parts);
    EvalFrame f;
    for (const ParsedInstance& i : pr.instances) f.pred.push_back({i.score, i.mask, i.parts});
    for (const ParsedInstance& i : gt.instances) f.gt.push_back({1.0, i.mask, i.parts});
    frames.push_back(std::move(f));
  }
  return evaluate(pred_parts, gt_parts, frames, data.num_parts());
}

LabelMap overlay(const Tensor& frame, const LabelMap& parts, int num_parts) {
  require_rank(frame, 3, "overlay");
  const int h = frame.dim(1), w = frame.dim(2);
  if (parts.height != h || parts.width != w) {
    throw ContractViolation("overlay: label map and frame differ in size");
  }
  const std::size_t n = static_cast<std::size_t>(h) * w;
  LabelMap out(h, w);
  for (std::size_t i = 0; i < n; ++i) {
    const double luma = (frame[i] + frame[n + i] + frame[2 * n + i]) / 3.0;
    double v = 0.4 * std::clamp(luma, 0.0, 1.0);
    if (parts.pixels[i]) v = 0.45 + 0.55 * parts.pixels[i] / std::max(1, num_parts);
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::min(v, 1.0)));
  }
  return out;
}

}  // namespace aten

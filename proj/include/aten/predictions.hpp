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

// On-disk predictions, one directory per frame:
//
//   frames/NNNNN/parts.pgm          global part labels
//   frames/NNNNN/instances.json     {"instances": [{"box", "score", "labels"}]}
//   frames/NNNNN/instance_II.pgm    0 outside the instance, its part label
//                                   inside, 255 for mask pixels labelled
//                                   background

#pragma once

#include <filesystem>
#include <vector>

#include "aten/metrics.hpp"
#include "aten/parsing_head.hpp"
#include "aten/synthdata.hpp"

namespace aten {

inline constexpr std::uint8_t kMaskedBackground = 255;

struct FramePrediction {
  LabelMap parts;
  InstanceParsing instances;
};

FramePrediction prediction_from(const HeadOutput& head);

void write_frame_prediction(const std::filesystem::path& dir, int frame,
                            const FramePrediction& prediction);
std::vector<FramePrediction> read_predictions(const std::filesystem::path& dir);

// Ground truth of a dataset frame in prediction form (score 1 per instance).
FramePrediction ground_truth_prediction(const Dataset& data, int frame);

// Pairs predictions with dataset ground truth and scores them.
MetricsReport evaluate_predictions(const std::vector<FramePrediction>& predictions,
                                   const Dataset& data);

// Grey frame with part labels blended in, for eyeballing results.
LabelMap overlay(const Tensor& frame, const LabelMap& parts, int num_parts);

}  // namespace aten

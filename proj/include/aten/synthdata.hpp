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

// Synthetic videos of articulated "person" shapes moving over a static
// textured background, with exact instance/part labels and flow.
//
// Flow convention: flow/AAAAA_BBBBB.t1 lives on frame B's pixel grid and
// holds, for every pixel p of frame B, the displacement d such that the
// content at p came from p + d in frame A. Both directions are written for
// every consecutive pair, so backward warping of frame A by that field
// reproduces frame B.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aten/io.hpp"
#include "aten/parsing_head.hpp"

namespace aten {

struct SyntheticScene {
  std::uint64_t seed = 0;
  int frames = 12;
  int height = 64;
  int width = 64;
  int instances = 2;       // 1..4
  int parts = 5;           // 3..7
  double max_velocity = 2.0;  // pixels per frame, translation magnitude
  double max_rotation = 0.03;  // radians per frame
  // Degradation: frames with (t - blur_offset) % blur_period == 0 get a
  // Gaussian blur whose sigma is drawn per frame from
  // [blur_sigma_min, blur_sigma_max]; period 0 disables. Noise applies to
  // every frame.
  int blur_period = 0;
  int blur_offset = 0;
  double blur_sigma_min = 1.5;
  double blur_sigma_max = 1.5;
  double noise_stddev = 0.0;

  void validate() const;
};

std::vector<std::string> part_class_names(int parts);

// Writes the dataset directory. Throws ContractViolation on invalid scenes.
void generate(const SyntheticScene& scene, const std::filesystem::path& out);

// Reader for the dataset layout written by generate().
class Dataset {
 public:
  static Dataset load(const std::filesystem::path& dir);

  int num_frames() const { return static_cast<int>(frames_.size()); }
  int height() const { return height_; }
  int width() const { return width_; }
  int num_parts() const { return num_parts_; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  const Tensor& frame(int t) const;
  const LabelMap& instance_labels(int t) const;
  const LabelMap& part_labels(int t) const;
  const LabelMap& valid(int t) const;
  std::vector<GtInstance> instances(int t) const;

  // Frame-resolution flow on `target`'s grid pointing into `reference`,
  // composed from consecutive-pair fields when the frames are not adjacent.
  Tensor flow(int target, int reference) const;

 private:
  void check_index(int t) const;

  int height_ = 0, width_ = 0, num_parts_ = 0;
  std::vector<std::string> class_names_;
  std::vector<Tensor> frames_;
  std::vector<LabelMap> instance_labels_, part_labels_, valid_;
  std::vector<Tensor> flow_forward_;   // [t]: on frame t+1's grid into frame t
  std::vector<Tensor> flow_backward_;  // [t]: on frame t's grid into frame t+1
};

// Composes flow fields: `first` maps grid B into A, `second` maps grid C into
// B; the result maps grid C into A.
Tensor compose_flow(const Tensor& first, const Tensor& second);

}  // namespace aten

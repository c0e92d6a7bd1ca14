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

#include "aten/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "aten/ops.hpp"
#include "json.hpp"

namespace aten {

namespace {

constexpr int kTemplates = 7;

struct Ellipse {
  double cx, cy, rx, ry;
};

// Body templates in units of the person scale, centred on the torso. Drawn
// in array order so later entries cover earlier ones.
constexpr std::array<Ellipse, kTemplates> kBody = {{
    {0.00, -0.08, 0.16, 0.20},   // torso
    {-0.08, 0.28, 0.07, 0.20},   // left leg
    {0.08, 0.28, 0.07, 0.20},    // right leg
    {-0.22, -0.08, 0.06, 0.18},  // left arm
    {0.22, -0.08, 0.06, 0.18},   // right arm
    {0.00, -0.38, 0.11, 0.12},   // head
    {0.00, -0.46, 0.10, 0.05},   // hair
}};
// Template index (as above) -> full seven-class label.
constexpr std::array<int, kTemplates> kTemplateClass = {2, 5, 6, 3, 4, 1, 7};

// Seven-class label -> label for a scene with `parts` classes.
int merge_label(int full, int parts) {
  static const std::array<std::array<int, 8>, 8> table = {{
      {}, {}, {},
      {0, 1, 2, 2, 2, 3, 3, 1},  // 3: head, upper_body, legs
      {0, 1, 2, 3, 3, 4, 4, 1},  // 4: head, torso, arms, legs
      {0, 1, 2, 3, 3, 4, 4, 5},  // 5: head, torso, arms, legs, hair
      {0, 1, 2, 3, 4, 5, 5, 6},  // 6: split arms
      {0, 1, 2, 3, 4, 5, 6, 7},  // 7: all
  }};
  return table[parts][full];
}

struct Pose {
  double cx, cy, theta;
};

struct Person {
  double scale;
  std::vector<Pose> poses;
  std::array<double, 3> tint;
  double tex_fx, tex_fy, tex_phase;
};

struct Hit {
  int instance = 0;  // 1-based, 0 = background
  int part = 0;      // seven-class label
  double qx = 0, qy = 0;
};

// Local body coordinates of frame point (x, y) for a pose.
void to_local(const Person& p, const Pose& pose, double x, double y, double* qx,
              double* qy) {
  const double dx = x - pose.cx, dy = y - pose.cy;
  const double c = std::cos(pose.theta), s = std::sin(pose.theta);
  *qx = (c * dx + s * dy) / p.scale;
  *qy = (-s * dx + c * dy) / p.scale;
}

void to_frame(const Person& p, const Pose& pose, double qx, double qy, double* x,
              double* y) {
  const double c = std::cos(pose.theta), s = std::sin(pose.theta);
  *x = pose.cx + p.scale * (c * qx - s * qy);
  *y = pose.cy + p.scale * (s * qx + c * qy);
}

int body_part(double qx, double qy) {
  int label = 0;
  for (int i = 0; i < kTemplates; ++i) {
    const Ellipse& e = kBody[i];
    const double u = (qx - e.cx) / e.rx, v = (qy - e.cy) / e.ry;
    if (u * u + v * v <= 1.0) label = kTemplateClass[i];
  }
  return label;
}

// Topmost person covering the pixel centre (x, y) at frame t.
Hit hit_test(const std::vector<Person>& people, int t, double x, double y) {
  for (int i = static_cast<int>(people.size()) - 1; i >= 0; --i) {
    Hit h;
    to_local(people[i], people[i].poses[t], x, y, &h.qx, &h.qy);
    h.part = body_part(h.qx, h.qy);
    if (h.part) {
      h.instance = i + 1;
      return h;
    }
  }
  return {};
}

constexpr std::array<std::array<double, 3>, 8> kPartColor = {{
    {0, 0, 0},
    {0.95, 0.80, 0.65},  // head
    {0.20, 0.45, 0.85},  // torso
    {0.85, 0.35, 0.25},  // left arm
    {0.85, 0.55, 0.20},  // right arm
    {0.25, 0.70, 0.35},  // left leg
    {0.30, 0.60, 0.55},  // right leg
    {0.30, 0.20, 0.15},  // hair
}};

double background(int c, double x, double y) {
  const double fx[3] = {0.11, 0.07, 0.05};
  const double fy[3] = {0.05, 0.13, 0.09};
  return 0.35 + 0.12 * std::sin(fx[c] * x + fy[c] * y + c) +
         0.06 * std::cos(0.23 * x - 0.17 * y + 2.0 * c);
}

double shade(const Person& p, int part, int c, double qx, double qy) {
  const double base = kPartColor[part][c] * p.tint[c];
  const double tex = 0.08 * std::sin(p.tex_fx * qx + p.tex_fy * qy + p.tex_phase + c);
  return std::clamp(base + tex, 0.0, 1.0);
}

std::vector<Person> make_people(const SyntheticScene& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double extent = std::min(s.height, s.width);
  std::vector<Person> people;
  for (int i = 0; i < s.instances; ++i) {
    Person p;
    p.scale = uniform(0.40, 0.55) * extent;
    const double margin_x = 0.3 * p.scale, margin_y = 0.5 * p.scale;
    const double lo_x = margin_x, hi_x = std::max(margin_x + 1, s.width - margin_x);
    const double lo_y = margin_y, hi_y = std::max(margin_y + 1, s.height - margin_y);
    double cx = uniform(lo_x, hi_x), cy = uniform(lo_y, hi_y);
    const double dir = uniform(0.0, 2.0 * std::numbers::pi);
    const double speed = uniform(0.5, 1.0) * s.max_velocity;
    double vx = speed * std::cos(dir), vy = speed * std::sin(dir);
    double theta = uniform(-0.2, 0.2);
    const double omega = uniform(-1.0, 1.0) * s.max_rotation;
    for (int c = 0; c < 3; ++c) p.tint[c] = uniform(0.75, 1.05);
    p.tex_fx = uniform(4.0, 10.0);
    p.tex_fy = uniform(4.0, 10.0);
    p.tex_phase = uniform(0.0, 6.28);
    for (int t = 0; t < s.frames; ++t) {
      p.poses.push_back({cx, cy, theta});
      // Reflect at the margins so people stay in view.
      cx += vx;
      cy += vy;
      if (cx < lo_x || cx > hi_x) {
        vx = -vx;
        cx = std::clamp(cx, lo_x, hi_x);
      }
      if (cy < lo_y || cy > hi_y) {
        vy = -vy;
        cy = std::clamp(cy, lo_y, hi_y);
      }
      theta += omega;
    }
    people.push_back(std::move(p));
  }
  return people;
}

Tensor gaussian_blur(const Tensor& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  Tensor tmp(img.dims()), out(img.dims());
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * img.at(ch, y, std::clamp(x + i, 0, w - 1));
        }
        tmp.at(ch, y, x) = acc;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += k[i + radius] * tmp.at(ch, std::clamp(y + i, 0, h - 1), x);
        }
        out.at(ch, y, x) = acc;
      }
    }
  }
  return out;
}

// Flow on frame `to`'s grid into frame `from`, plus validity of each pixel.
void pair_flow(const std::vector<Person>& people, int from, int to, int h, int w,
               Tensor* flow, LabelMap* valid) {
  *flow = Tensor({2, h, w});
  *valid = LabelMap(h, w, 1);
  const std::size_t n = static_cast<std::size_t>(h) * w;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const Hit hit = hit_test(people, to, px, py);
      double sx = px, sy = py;
      if (hit.instance) {
        const Person& p = people[hit.instance - 1];
        const Pose& a = p.poses[from];
        const Pose& b = p.poses[to];
        if (a.cx != b.cx || a.cy != b.cy || a.theta != b.theta) {
          to_frame(p, a, hit.qx, hit.qy, &sx, &sy);
        }
      }
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      (*flow)[i] = sx - px;
      (*flow)[n + i] = sy - py;
      const bool inside = sx >= 0 && sx < w && sy >= 0 && sy < h;
      const Hit source = inside ? hit_test(people, from, sx, sy) : Hit{};
      valid->pixels[i] = inside && source.instance == hit.instance ? 1 : 0;
    }
  }
}

std::string frame_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", t);
  return buf;
}

}  // namespace

void SyntheticScene::validate() const {
  if (height < 16 || width < 16 || height % 4 || width % 4) {
    throw ContractViolation("scene size " + std::to_string(height) + "x" +
                            std::to_string(width) +
                            " invalid: height and width must be multiples of 4 and >= 16");
  }
  if (frames < 1) throw ContractViolation("scene needs at least one frame");
  if (instances < 1 || instances > 4) {
    throw ContractViolation("scene instances must be in [1, 4]");
  }
  if (parts < 3 || parts > 7) throw ContractViolation("scene parts must be in [3, 7]");
  if (max_velocity < 0 || max_rotation < 0) {
    throw ContractViolation("scene motion bounds must be non-negative");
  }
  if (blur_period < 0 || blur_sigma_min <= 0 || blur_sigma_max < blur_sigma_min ||
      noise_stddev < 0) {
    throw ContractViolation("scene degradation parameters invalid");
  }
}

std::vector<std::string> part_class_names(int parts) {
  switch (parts) {
    case 3: return {"background", "head", "upper_body", "legs"};
    case 4: return {"background", "head", "torso", "arms", "legs"};
    case 5: return {"background", "head", "torso", "arms", "legs", "hair"};
    case 6: return {"background", "head", "torso", "left_arm", "right_arm", "legs", "hair"};
    case 7:
      return {"background", "head",     "torso",     "left_arm",
              "right_arm",  "left_leg", "right_leg", "hair"};
    default: throw ContractViolation("part count must be in [3, 7]");
  }
}

void generate(const SyntheticScene& scene, const std::filesystem::path& out) {
  scene.validate();
  std::mt19937_64 rng(scene.seed);
  const std::vector<Person> people = make_people(scene, rng);
  const int h = scene.height, w = scene.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::filesystem::create_directories(out / "frames");
  std::filesystem::create_directories(out / "labels");
  std::filesystem::create_directories(out / "flow");
  std::filesystem::create_directories(out / "valid");

  nlohmann::ordered_json frames = nlohmann::ordered_json::array();
  for (int t = 0; t < scene.frames; ++t) {
    Tensor img({3, h, w});
    LabelMap inst(h, w), part(h, w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Hit hit = hit_test(people, t, x + 0.5, y + 0.5);
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        for (int c = 0; c < 3; ++c) {
          img[c * n + i] = hit.instance
                               ? shade(people[hit.instance - 1], hit.part, c, hit.qx, hit.qy)
                               : background(c, x + 0.5, y + 0.5);
        }
        inst.pixels[i] = static_cast<std::uint8_t>(hit.instance);
        part.pixels[i] = static_cast<std::uint8_t>(hit.part ? merge_label(hit.part, scene.parts) : 0);
      }
    }
    if (scene.blur_period > 0 &&
        ((t - scene.blur_offset) % scene.blur_period + scene.blur_period) %
                scene.blur_period == 0) {
      std::mt19937_64 blur_rng(scene.seed * 999983ULL + static_cast<std::uint64_t>(t));
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(blur_rng);
      img = gaussian_blur(img, scene.blur_sigma_min +
                                   u * (scene.blur_sigma_max - scene.blur_sigma_min));
    }
    if (scene.noise_stddev > 0) {
      std::mt19937_64 noise_rng(scene.seed * 1000003ULL + static_cast<std::uint64_t>(t));
      std::normal_distribution<double> noise(0.0, scene.noise_stddev);
      for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = std::clamp(img[i] + noise(noise_rng), 0.0, 1.0);
      }
    }
    const std::string name = frame_name(t);
    write_t1(out / "frames" / (name + ".t1"), img);
    write_pgm(out / "labels" / (name + "_inst.pgm"), inst);
    write_pgm(out / "labels" / (name + "_part.pgm"), part);
    LabelMap valid(h, w, 1);
    if (t > 0) {
      Tensor fwd, bwd;
      LabelMap unused;
      pair_flow(people, t - 1, t, h, w, &fwd, &valid);
      pair_flow(people, t, t - 1, h, w, &bwd, &unused);
      write_t1(out / "flow" / (frame_name(t - 1) + "_" + name + ".t1"), fwd);
      write_t1(out / "flow" / (name + "_" + frame_name(t - 1) + ".t1"), bwd);
    }
    write_pgm(out / "valid" / (name + ".pgm"), valid);
    frames.push_back(name);
  }

  nlohmann::ordered_json m;
  m["format"] = "aten-synth-1";
  m["height"] = h;
  m["width"] = w;
  m["num_frames"] = scene.frames;
  m["num_parts"] = scene.parts;
  m["instances"] = scene.instances;
  m["class_names"] = part_class_names(scene.parts);
  m["frames"] = frames;
  nlohmann::ordered_json sc;
  sc["seed"] = scene.seed;
  sc["max_velocity"] = scene.max_velocity;
  sc["max_rotation"] = scene.max_rotation;
  sc["blur_period"] = scene.blur_period;
  sc["blur_offset"] = scene.blur_offset;
  sc["blur_sigma_min"] = scene.blur_sigma_min;
  sc["blur_sigma_max"] = scene.blur_sigma_max;
  sc["noise_stddev"] = scene.noise_stddev;
  m["scene"] = sc;
  write_text_file(out / "manifest.json", m.dump(2) + "\n");
}

Tensor compose_flow(const Tensor& first, const Tensor& second) {
  require_same_shape(first, second, "compose_flow");
  if (first.rank() != 3 || first.dim(0) != 2) {
    throw ContractViolation("compose_flow: flows must be (2,H,W)");
  }
  const Tensor coords = add(identity_grid(second.dim(1), second.dim(2)), second);
  return add(second, bilinear_sample(first, coords));
}

Dataset Dataset::load(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "manifest.json")) {
    throw DataError("dataset manifest not found: " + (dir / "manifest.json").string());
  }
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("dataset manifest unreadable: " + std::string(e.what()));
  }
  Dataset d;
  try {
    d.height_ = m.at("height").get<int>();
    d.width_ = m.at("width").get<int>();
    d.num_parts_ = m.at("num_parts").get<int>();
    d.class_names_ = m.at("class_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("dataset manifest missing fields: " + std::string(e.what()));
  }
  const auto names = m.at("frames").get<std::vector<std::string>>();
  for (std::size_t t = 0; t < names.size(); ++t) {
    const std::string& name = names[t];
    Tensor frame = read_t1(dir / "frames" / (name + ".t1"));
    if (frame.dims() != Shape{3, d.height_, d.width_}) {
      throw DataError("frame " + std::to_string(t) + " has dims " +
                      shape_to_string(frame.dims()) + ", manifest says 3x" +
                      std::to_string(d.height_) + "x" + std::to_string(d.width_));
    }
    d.frames_.push_back(std::move(frame));
    d.instance_labels_.push_back(read_pgm(dir / "labels" / (name + "_inst.pgm")));
    d.part_labels_.push_back(read_pgm(dir / "labels" / (name + "_part.pgm")));
    d.valid_.push_back(read_pgm(dir / "valid" / (name + ".pgm")));
    if (t > 0) {
      d.flow_forward_.push_back(read_t1(dir / "flow" / (names[t - 1] + "_" + name + ".t1")));
      d.flow_backward_.push_back(read_t1(dir / "flow" / (name + "_" + names[t - 1] + ".t1")));
    }
  }
  if (d.frames_.empty()) throw DataError("dataset has no frames");
  return d;
}

void Dataset::check_index(int t) const {
  if (t < 0 || t >= num_frames()) {
    throw ContractViolation("frame index " + std::to_string(t) + " out of range [0, " +
                            std::to_string(num_frames()) + ")");
  }
}

const Tensor& Dataset::frame(int t) const {
  check_index(t);
  return frames_[t];
}
const LabelMap& Dataset::instance_labels(int t) const {
  check_index(t);
  return instance_labels_[t];
}
const LabelMap& Dataset::part_labels(int t) const {
  check_index(t);
  return part_labels_[t];
}
const LabelMap& Dataset::valid(int t) const {
  check_index(t);
  return valid_[t];
}

std::vector<GtInstance> Dataset::instances(int t) const {
  const LabelMap& inst = instance_labels(t);
  int max_id = 0;
  for (std::uint8_t v : inst.pixels) max_id = std::max<int>(max_id, v);
  std::vector<GtInstance> out;
  for (int id = 1; id <= max_id; ++id) {
    GtInstance g;
    g.mask = LabelMap(inst.height, inst.width);
    int x0 = inst.width, y0 = inst.height, x1 = -1, y1 = -1;
    for (int y = 0; y < inst.height; ++y) {
      for (int x = 0; x < inst.width; ++x) {
        if (inst.at(y, x) != id) continue;
        g.mask.at(y, x) = 1;
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
    if (x1 < 0) continue;
    g.box = {static_cast<double>(x0), static_cast<double>(y0),
             static_cast<double>(x1 + 1), static_cast<double>(y1 + 1)};
    out.push_back(std::move(g));
  }
  return out;
}

Tensor Dataset::flow(int target, int reference) const {
  check_index(target);
  check_index(reference);
  if (target == reference) return Tensor({2, height_, width_});
  if (target == reference + 1) return flow_forward_[reference];
  if (target == reference - 1) return flow_backward_[target];
  const int step = target > reference ? -1 : 1;
  // flow(target, reference) = flow(target+step, reference) after flow(target, target+step)
  return compose_flow(flow(target + step, reference), flow(target, target + step));
}

}  // namespace aten

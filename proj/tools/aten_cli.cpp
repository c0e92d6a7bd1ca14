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

// aten: generate synthetic videos, train, infer, evaluate and benchmark.
//
// Every subcommand accepts --config FILE (a JSON object keyed by long flag
// names without the dashes). Flags given on the command line win over the
// file, which wins over built-in defaults. The resolved settings are written
// next to each command's outputs as config.json.
//
// Exit codes: 0 success, 2 usage or validation, 3 data or shape error,
// 4 internal error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aten/cost.hpp"
#include "aten/io.hpp"
#include "aten/pipeline.hpp"
#include "aten/predictions.hpp"
#include "aten/synthdata.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs `fn` and reports contract violations as usage errors.
template <typename Fn>
void validated(Fn&& fn) {
  try {
    fn();
  } catch (const aten::ContractViolation& e) {
    throw UsageError(e.what());
  }
}

void require_dir(const fs::path& p, const std::string& what) {
  if (!fs::is_directory(p)) throw UsageError(what + " not found: " + p.string());
}

void write_config(const fs::path& path, const ordered_json& config) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  aten::write_text_file(path, config.dump(2) + "\n");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string frame_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", t);
  return buf;
}

// ---------------------------------------------------------------- config file

// Appends the file's settings for every option the command line leaves
// unset, so CLI11 sees them as if typed after the explicit flags.
std::vector<std::string> merge_config_file(const std::vector<std::string>& args) {
  std::string config_path;
  std::set<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const std::string name = a.substr(2, a.find('=') == std::string::npos ? std::string::npos
                                                                        : a.find('=') - 2);
    given.insert(name);
    if (name == "config") {
      if (a.find('=') != std::string::npos) {
        config_path = a.substr(a.find('=') + 1);
      } else if (i + 1 < args.size()) {
        config_path = args[i + 1];
      }
    }
  }
  std::vector<std::string> out = args;
  if (config_path.empty()) return out;
  if (!fs::is_regular_file(config_path)) throw UsageError("config file not found: " + config_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(aten::read_text_file(config_path));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + config_path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
  auto scalar = [](const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  for (const auto& [key, value] : doc.items()) {
    if (given.count(key) || key == "config") continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back("--" + key);
    } else if (value.is_array()) {
      for (const auto& v : value) out.push_back("--" + key), out.push_back(scalar(v));
    } else {
      out.push_back("--" + key);
      out.push_back(scalar(value));
    }
  }
  return out;
}

// ------------------------------------------------------------------ generate

struct GenerateArgs {
  aten::SyntheticScene scene;
  int size = 64;
  std::string out;
};

void add_generate(CLI::App& app, GenerateArgs& a) {
  app.add_option("--seed", a.scene.seed, "random seed");
  app.add_option("--frames", a.scene.frames, "number of frames");
  app.add_option("--size", a.size, "frame height and width in pixels (multiple of 4)");
  app.add_option("--instances", a.scene.instances, "people per video (1..4)");
  app.add_option("--parts", a.scene.parts, "part classes (3..7)");
  app.add_option("--max-velocity", a.scene.max_velocity, "pixels per frame");
  app.add_option("--max-rotation", a.scene.max_rotation, "radians per frame");
  app.add_option("--blur-period", a.scene.blur_period, "blur every n-th frame (0: never)");
  app.add_option("--blur-offset", a.scene.blur_offset, "first blurred frame");
  app.add_option("--blur-sigma-min", a.scene.blur_sigma_min, "smallest blur sigma");
  app.add_option("--blur-sigma-max", a.scene.blur_sigma_max, "largest blur sigma");
  app.add_option("--noise", a.scene.noise_stddev, "additive Gaussian noise stddev");
  app.add_option("--out", a.out, "dataset directory")->required();
}

int run_generate(GenerateArgs a) {
  a.scene.height = a.scene.width = a.size;
  validated([&] { a.scene.validate(); });
  aten::generate(a.scene, a.out);
  const aten::SyntheticScene& s = a.scene;
  ordered_json c;
  c["command"] = "generate";
  c["seed"] = s.seed;
  c["frames"] = s.frames;
  c["size"] = a.size;
  c["instances"] = s.instances;
  c["parts"] = s.parts;
  c["max-velocity"] = s.max_velocity;
  c["max-rotation"] = s.max_rotation;
  c["blur-period"] = s.blur_period;
  c["blur-offset"] = s.blur_offset;
  c["blur-sigma-min"] = s.blur_sigma_min;
  c["blur-sigma-max"] = s.blur_sigma_max;
  c["noise"] = s.noise_stddev;
  c["out"] = a.out;
  write_config(fs::path(a.out) / "config.json", c);
  std::cout << "wrote " << s.frames << " frames to " << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------ pipeline flags

struct PipelineArgs {
  int segment_length = 3;
  int encoding_range = 2;
  std::string flow_source = "learned";
  std::string fusion = "gru";
  bool no_align = false;
  bool streaming = false;
};

void add_pipeline(CLI::App& app, PipelineArgs& a) {
  app.add_option("--segment-length", a.segment_length, "frames per key frame (l)");
  app.add_option("--encoding-range", a.encoding_range, "former key frames folded in (p)");
  app.add_option("--flow-source", a.flow_source, "learned, ground_truth or zero");
  app.add_option("--fusion", a.fusion, "temporal fusion: gru or average");
  app.add_flag("--no-align", a.no_align, "feed neighbour key features unwarped");
  app.add_flag("--streaming", a.streaming, "bounded key-feature cache");
}

aten::PipelineConfig pipeline_config(const PipelineArgs& a) {
  aten::PipelineConfig c;
  validated([&] {
    c.segment_length = a.segment_length;
    c.encoding_range = a.encoding_range;
    c.flow_source = aten::parse_flow_source(a.flow_source);
    if (a.fusion == "gru") {
      c.encoder.fusion = aten::TemporalFusion::kConvGru;
    } else if (a.fusion == "average") {
      c.encoder.fusion = aten::TemporalFusion::kAverage;
    } else {
      throw aten::ContractViolation("unknown fusion '" + a.fusion + "' (expected gru or average)");
    }
    c.encoder.align = !a.no_align;
    c.streaming = a.streaming;
    c.validate();
  });
  return c;
}

void echo_pipeline(ordered_json& c, const PipelineArgs& a) {
  c["segment-length"] = a.segment_length;
  c["encoding-range"] = a.encoding_range;
  c["flow-source"] = a.flow_source;
  c["fusion"] = a.fusion;
  c["no-align"] = a.no_align;
  c["streaming"] = a.streaming;
}

void check_model_fits(const aten::Model& model, const aten::Dataset& data) {
  if (model.config.head.num_parts != data.num_parts()) {
    throw aten::DataError("checkpoint predicts " + std::to_string(model.config.head.num_parts) +
                          " parts, dataset has " + std::to_string(data.num_parts()));
  }
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::vector<std::string> data;
  int epochs = 0;
  int steps = 200;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int channels = 32;
  double clip_norm = 0.0;
  bool cosine = false;
  bool fixed_batch = false;
  int save_every = 0;
  std::string checkpoint;
  PipelineArgs pipeline;
  std::string out;
};

void add_train(CLI::App& app, TrainArgs& a) {
  app.add_option("--data", a.data, "training dataset directory (repeatable)")->required();
  app.add_option("--epochs", a.epochs, "passes over all frames; overrides --steps when > 0");
  app.add_option("--steps", a.steps, "SGD steps");
  app.add_option("--lr", a.lr, "learning rate");
  app.add_option("--seed", a.seed, "initialization and sampling seed");
  app.add_option("--channels", a.channels, "feature width of a fresh model");
  app.add_option("--clip-norm", a.clip_norm, "global gradient norm cap (0: off)");
  app.add_flag("--cosine", a.cosine, "cosine learning-rate decay");
  app.add_flag("--fixed-batch", a.fixed_batch, "reuse the first sample every step");
  app.add_option("--save-every", a.save_every, "also checkpoint every n steps (0: final only)");
  app.add_option("--checkpoint", a.checkpoint, "start from this checkpoint");
  add_pipeline(app, a.pipeline);
  app.add_option("--out", a.out, "output directory")->required();
}

int run_train(const TrainArgs& a) {
  for (const std::string& d : a.data) require_dir(d, "dataset");
  if (!a.checkpoint.empty()) require_dir(a.checkpoint, "checkpoint");
  const aten::PipelineConfig config = pipeline_config(a.pipeline);
  validated([&] {
    if (a.epochs < 0 || a.steps < 1) throw aten::ContractViolation("steps must be >= 1");
    if (!(a.lr > 0)) throw aten::ContractViolation("lr must be positive");
    if (a.clip_norm < 0) throw aten::ContractViolation("clip-norm must be >= 0");
    if (a.save_every < 0) throw aten::ContractViolation("save-every must be >= 0");
  });

  std::vector<aten::Dataset> sets;
  for (const std::string& d : a.data) sets.push_back(aten::Dataset::load(d));
  std::vector<const aten::Dataset*> ptrs;
  int total_frames = 0;
  for (const aten::Dataset& s : sets) {
    if (s.num_parts() != sets.front().num_parts()) {
      throw aten::DataError("datasets disagree on the number of parts");
    }
    ptrs.push_back(&s);
    total_frames += s.num_frames();
  }

  aten::Model model;
  if (a.checkpoint.empty()) {
    aten::ModelConfig mc = aten::ModelConfig::with_channels(a.channels, sets.front().num_parts());
    validated([&] { mc.validate(); });
    model = aten::init_model(mc, a.seed);
  } else {
    model = aten::load_model(a.checkpoint);
  }
  check_model_fits(model, sets.front());

  aten::TrainOptions opt;
  opt.steps = a.epochs > 0 ? a.epochs * total_frames : a.steps;
  opt.lr = a.lr;
  opt.seed = a.seed;
  opt.fixed_batch = a.fixed_batch;
  opt.clip_norm = a.clip_norm;
  opt.cosine_decay = a.cosine;

  const fs::path out(a.out);
  fs::create_directories(out);
  std::ostringstream csv;
  csv << "step,video,key,target,parsing,cls,box,mask,total\n";
  const auto on_step = [&](int step, const aten::TrainingSample& s, const aten::LossBreakdown& l) {
    csv << step << ',' << s.video << ',' << s.key << ',' << s.target << ','
        << format_double(l.parsing) << ',' << format_double(l.cls) << ','
        << format_double(l.box) << ',' << format_double(l.mask) << ','
        << format_double(l.total) << '\n';
    if (a.save_every > 0 && (step + 1) % a.save_every == 0 && step + 1 < opt.steps) {
      char name[32];
      std::snprintf(name, sizeof(name), "checkpoint_%06d", step + 1);
      aten::save_model(out / name, model);
    }
  };
  const std::vector<aten::LossBreakdown> losses = aten::train(model, ptrs, config, opt, on_step);
  aten::save_model(out / "checkpoint", model);
  aten::write_text_file(out / "loss.csv", csv.str());

  ordered_json c;
  c["command"] = "train";
  c["data"] = a.data;
  c["epochs"] = a.epochs;
  c["steps"] = opt.steps;
  c["lr"] = a.lr;
  c["seed"] = a.seed;
  c["channels"] = model.config.backbone.channels;
  c["clip-norm"] = a.clip_norm;
  c["cosine"] = a.cosine;
  c["fixed-batch"] = a.fixed_batch;
  c["save-every"] = a.save_every;
  c["checkpoint"] = a.checkpoint;
  echo_pipeline(c, a.pipeline);
  c["out"] = a.out;
  write_config(out / "config.json", c);
  std::cout << "trained " << opt.steps << " steps, loss " << losses.front().total << " -> "
            << losses.back().total << "\n";
  return 0;
}

// --------------------------------------------------------------------- infer

struct InferArgs {
  std::string data;
  std::string checkpoint;
  PipelineArgs pipeline;
  bool baseline_timing = false;
  std::string out;
};

void add_infer(CLI::App& app, InferArgs& a) {
  app.add_option("--data", a.data, "dataset directory")->required();
  app.add_option("--checkpoint", a.checkpoint, "checkpoint directory")->required();
  add_pipeline(app, a.pipeline);
  app.add_flag("--baseline-timing", a.baseline_timing, "also time the per-frame baseline");
  app.add_option("--out", a.out, "output directory")->required();
}

int run_infer(const InferArgs& a) {
  require_dir(a.data, "dataset");
  require_dir(a.checkpoint, "checkpoint");
  const aten::PipelineConfig config = pipeline_config(a.pipeline);
  const aten::Dataset data = aten::Dataset::load(a.data);
  const aten::Model model = aten::load_model(a.checkpoint);
  check_model_fits(model, data);
  const aten::Video video = aten::video_from(data);

  aten::CostCounter counter;
  aten::SequenceResult result;
  {
    aten::CounterScope scope(&counter);
    result = aten::infer_sequence(model, video, config);
  }
  double baseline_ms = -1;
  if (a.baseline_timing) baseline_ms = aten::infer_per_frame(model, video, config.encoder).wall_ms;
  const aten::CostReport cost =
      aten::make_cost_report(counter, config, data.num_frames(), result.wall_ms, baseline_ms);

  const fs::path out(a.out);
  fs::create_directories(out / "vis");
  for (int t = 0; t < data.num_frames(); ++t) {
    const aten::FramePrediction p = aten::prediction_from(result.frames[t]);
    aten::write_frame_prediction(out, t, p);
    aten::write_pgm(out / "vis" / (frame_name(t) + ".pgm"),
                    aten::overlay(data.frame(t), p.parts, data.num_parts()));
  }
  ordered_json segments = ordered_json::array();
  for (const aten::Segment& s : result.plan) segments.push_back({s.begin, s.end, s.key});
  ordered_json plan;
  plan["segments"] = segments;
  aten::write_text_file(out / "plan.json", plan.dump(2) + "\n");
  aten::write_text_file(out / "cost.json", cost.to_json() + "\n");

  ordered_json c;
  c["command"] = "infer";
  c["data"] = a.data;
  c["checkpoint"] = a.checkpoint;
  echo_pipeline(c, a.pipeline);
  c["baseline-timing"] = a.baseline_timing;
  c["out"] = a.out;
  write_config(out / "config.json", c);
  std::cout << "inferred " << data.num_frames() << " frames, r_exact " << cost.r_exact << "\n";
  return 0;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string report;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  app.add_option("--pred", a.pred, "prediction directory written by infer")->required();
  app.add_option("--gt", a.gt, "ground-truth dataset directory")->required();
  app.add_option("--report", a.report, "metrics JSON path")->required();
}

int run_eval(const EvalArgs& a) {
  require_dir(a.pred, "prediction directory");
  require_dir(a.gt, "dataset");
  const aten::Dataset data = aten::Dataset::load(a.gt);
  const aten::MetricsReport report =
      aten::evaluate_predictions(aten::read_predictions(a.pred), data);
  const fs::path path(a.report);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  aten::write_text_file(path, report.to_json() + "\n");
  ordered_json c;
  c["command"] = "eval";
  c["pred"] = a.pred;
  c["gt"] = a.gt;
  c["report"] = a.report;
  write_config(path.string() + ".config.json", c);
  std::cout << "mean IoU " << report.iou.mean << "\n";
  return 0;
}

// --------------------------------------------------------------------- bench

struct BenchArgs {
  std::string data;
  std::string checkpoint;
  std::uint64_t seed = 0;
  int channels = 32;
  std::vector<int> sweep_l{1, 3, 5};
  PipelineArgs pipeline;
  std::string report;
};

void add_bench(CLI::App& app, BenchArgs& a) {
  app.add_option("--data", a.data, "dataset directory")->required();
  app.add_option("--checkpoint", a.checkpoint, "checkpoint (default: fresh model)");
  app.add_option("--seed", a.seed, "seed of the fresh model");
  app.add_option("--channels", a.channels, "width of the fresh model");
  app.add_option("--sweep-l", a.sweep_l, "segment lengths, comma separated")->delimiter(',');
  add_pipeline(app, a.pipeline);
  app.add_option("--report", a.report, "CSV path")->required();
}

int run_bench(const BenchArgs& a) {
  require_dir(a.data, "dataset");
  if (!a.checkpoint.empty()) require_dir(a.checkpoint, "checkpoint");
  std::vector<aten::PipelineConfig> configs;
  for (int l : a.sweep_l) {
    PipelineArgs p = a.pipeline;
    p.segment_length = l;
    configs.push_back(pipeline_config(p));
  }
  const aten::Dataset data = aten::Dataset::load(a.data);
  aten::Model model;
  if (a.checkpoint.empty()) {
    aten::ModelConfig mc = aten::ModelConfig::with_channels(a.channels, data.num_parts());
    validated([&] { mc.validate(); });
    model = aten::init_model(mc, a.seed);
  } else {
    model = aten::load_model(a.checkpoint);
  }
  check_model_fits(model, data);
  const aten::Video video = aten::video_from(data);

  std::ostringstream csv;
  csv << "l,mean_iou,r_exact,r_approx,r_measured,wall_ms\n";
  for (const aten::PipelineConfig& config : configs) {
    aten::CostCounter counter;
    aten::SequenceResult result;
    {
      aten::CounterScope scope(&counter);
      result = aten::infer_sequence(model, video, config);
    }
    const aten::CostReport cost =
        aten::make_cost_report(counter, config, data.num_frames(), result.wall_ms);
    std::vector<aten::FramePrediction> preds;
    for (const aten::HeadOutput& h : result.frames) preds.push_back(aten::prediction_from(h));
    const aten::MetricsReport m = aten::evaluate_predictions(preds, data);
    csv << config.segment_length << ',' << format_double(m.iou.mean) << ','
        << format_double(cost.r_exact) << ',' << format_double(cost.r_approx) << ','
        << format_double(cost.r_measured) << ',' << format_double(result.wall_ms) << '\n';
    std::cout << "l=" << config.segment_length << " mIoU " << m.iou.mean << " r_exact "
              << cost.r_exact << " " << result.wall_ms << " ms\n";
  }
  const fs::path path(a.report);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  aten::write_text_file(path, csv.str());
  ordered_json c;
  c["command"] = "bench";
  c["data"] = a.data;
  c["checkpoint"] = a.checkpoint;
  c["seed"] = a.seed;
  c["channels"] = model.config.backbone.channels;
  c["sweep-l"] = a.sweep_l;
  echo_pipeline(c, a.pipeline);
  c["report"] = a.report;
  write_config(path.string() + ".config.json", c);
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"ATEN video instance-level human parsing"};
  app.require_subcommand(1);
  std::string config_file;
  GenerateArgs gen;
  TrainArgs train;
  InferArgs infer;
  EvalArgs eval;
  BenchArgs bench;
  struct Command {
    CLI::App* app;
    std::function<int()> run;
  };
  std::vector<Command> commands = {
      {app.add_subcommand("generate", "write a synthetic video dataset"), [&] { return run_generate(gen); }},
      {app.add_subcommand("train", "train a model on synthetic videos"), [&] { return run_train(train); }},
      {app.add_subcommand("infer", "parse a video with a trained model"), [&] { return run_infer(infer); }},
      {app.add_subcommand("eval", "score predictions against ground truth"), [&] { return run_eval(eval); }},
      {app.add_subcommand("bench", "sweep the segment length"), [&] { return run_bench(bench); }},
  };
  add_generate(*commands[0].app, gen);
  add_train(*commands[1].app, train);
  add_infer(*commands[2].app, infer);
  add_eval(*commands[3].app, eval);
  add_bench(*commands[4].app, bench);
  for (const Command& c : commands) c.app->add_option("--config", config_file, "JSON settings file");

  std::vector<std::string> args(argv + 1, argv + argc);
  args = merge_config_file(args);
  std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (const Command& c : commands) {
    if (c.app->parsed()) return c.run();
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const aten::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}

// Copyright 2026 The SceneFlow Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: generate | annotate | stats | train | eval | bench | export.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sceneflow/annotator.h"
#include "sceneflow/bench.h"
#include "sceneflow/binary_io.h"
#include "sceneflow/config_text.h"
#include "sceneflow/error.h"
#include "sceneflow/flow_io.h"
#include "sceneflow/generator.h"
#include "sceneflow/metrics.h"
#include "sceneflow/net/model.h"
#include "sceneflow/parallel.h"
#include "sceneflow/scene_io.h"

namespace sceneflow {
namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kIoError = 3, kNumericError = 4 };

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
    case ErrorCode::kBadMagic:
    case ErrorCode::kVersionMismatch:
    case ErrorCode::kTruncated:
      return kIoError;
    case ErrorCode::kNonFinite:
    case ErrorCode::kDivergence:
      return kNumericError;
    default:
      return kConfigError;
  }
}

struct Globals {
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string config;
};

// Resolved settings go to stderr so stdout and output files carry data only.
void Echo(const std::string& command, const std::string& text) {
  std::cerr << "# sceneflow " << command << " resolved config\n" << text;
  if (!text.empty() && text.back() != '\n') std::cerr << '\n';
}

std::uint64_t Mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Top-level keys of a flat key = value file; sections are rejected.
SectionReader FlatConfig(const ConfigDocument& doc, const std::string& what) {
  if (doc.sections.size() > 1) {
    throw Error(ErrorCode::kConfig, what + " config takes no sections");
  }
  return SectionReader(doc.sections[0]);
}

void WriteOutput(const std::optional<std::string>& path, const std::string& bytes) {
  if (path) {
    WriteBinaryFile(*path, bytes);
  } else {
    std::cout << bytes;
  }
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string spec;
  int urban = 0;
  int frames = 11;
  std::string out;
  std::string out_dir;
};

void RunGenerate(const Globals& g, const GenerateArgs& a) {
  if (a.urban > 0) {
    if (a.out_dir.empty()) throw Error(ErrorCode::kConfig, "--urban needs --out-dir");
    if (!a.spec.empty() || !g.config.empty()) {
      throw Error(ErrorCode::kConfig, "--urban does not take a scene spec");
    }
    UrbanSceneOptions opts;
    opts.duration_frames = a.frames;
    const std::uint64_t seed = g.seed.value_or(0);
    Echo("generate", "urban = " + std::to_string(a.urban) + "\nframes = " +
                         std::to_string(a.frames) + "\nseed = " + std::to_string(seed) + "\n");
    std::filesystem::create_directories(a.out_dir);
    ParallelFor(static_cast<std::size_t>(a.urban), g.jobs, [&](std::size_t i) {
      const SceneSpec spec = SampleUrbanScene(opts, seed + i);
      char name[32];
      std::snprintf(name, sizeof(name), "segment_%04zu.sfrs", i);
      WriteSegment(Generate(spec), (std::filesystem::path(a.out_dir) / name).string());
    });
    return;
  }
  if (a.out.empty()) throw Error(ErrorCode::kConfig, "--out is required");
  std::string path = a.spec.empty() ? g.config : a.spec;
  if (path.empty()) throw Error(ErrorCode::kConfig, "a scene spec file is required");
  SceneSpec spec = LoadSceneSpec(path);
  if (g.seed) spec.seed = *g.seed;
  Echo("generate", SceneSpecToText(spec));
  WriteSegment(Generate(spec), a.out);
}

// ---------------------------------------------------------------- annotate

struct AnnotateArgs {
  std::string segment;
  std::string out;
  std::string out_segment;
  bool no_ego = false;
  std::vector<std::string> ablate;
  std::optional<double> remove_ground;
  std::optional<double> downsample;
  std::optional<double> ground_level;
};

struct Ablation {
  ObjectClass cls;
  AblationMode mode;
};

Ablation ParseAblation(const std::string& text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kConfig, "ablation must be <class>:<stationary|ignored>: " + text);
  }
  const auto cls = ParseClassName(text.substr(0, colon));
  if (!cls || !IsObjectClass(*cls)) {
    throw Error(ErrorCode::kConfig, "ablation class must be an object class: " + text);
  }
  const std::string mode = text.substr(colon + 1);
  if (mode == "stationary") return {*cls, AblationMode::kStationary};
  if (mode == "ignored") return {*cls, AblationMode::kIgnored};
  throw Error(ErrorCode::kConfig, "ablation mode must be stationary or ignored: " + text);
}

void RunAnnotate(const Globals& g, AnnotateArgs a) {
  AnnotationConfig cfg;
  std::optional<double> downsample;
  std::vector<std::string> ablate;
  if (!g.config.empty()) {
    const ConfigDocument doc = ParseConfigText(ReadTextFile(g.config));
    SectionReader r = FlatConfig(doc, "annotation");
    cfg.compensate_ego = r.GetBool("compensate_ego", cfg.compensate_ego);
    cfg.box_margin = r.GetDouble("box_margin", cfg.box_margin);
    cfg.ground_level = r.GetDouble("ground_level", cfg.ground_level);
    if (r.Has("ground_removal")) cfg.ground_removal = r.GetDouble("ground_removal", 0.0);
    if (r.Has("downsample")) downsample = r.GetDouble("downsample", 1.0);
    if (auto v = r.Take("ablate")) {
      std::istringstream in(*v);
      for (std::string item; std::getline(in, item, ',');) ablate.push_back(item);
    }
    r.Finish();
  }
  if (a.no_ego) cfg.compensate_ego = false;
  if (a.remove_ground) cfg.ground_removal = *a.remove_ground;
  if (a.ground_level) cfg.ground_level = *a.ground_level;
  if (a.downsample) downsample = *a.downsample;
  if (!a.ablate.empty()) ablate = a.ablate;
  ValidateAnnotationConfig(cfg);
  std::vector<Ablation> ablations;
  for (const std::string& s : ablate) ablations.push_back(ParseAblation(s));
  const std::uint64_t seed = g.seed.value_or(0);

  std::string echo = "segment = " + a.segment + "\ncompensate_ego = " +
                     (cfg.compensate_ego ? "true" : "false") + "\nbox_margin = " +
                     FormatDouble(cfg.box_margin) + "\nground_level = " +
                     FormatDouble(cfg.ground_level) + "\n";
  if (cfg.ground_removal) echo += "ground_removal = " + FormatDouble(*cfg.ground_removal) + "\n";
  if (downsample) echo += "downsample = " + FormatDouble(*downsample) + "\nseed = " +
                         std::to_string(seed) + "\n";
  for (const std::string& s : ablate) echo += "ablate = " + s + "\n";
  Echo("annotate", echo);

  // Fixed order: ground removal, downsample, annotate, ablate.
  RunSegment seg = ReadSegment(a.segment);
  for (std::size_t i = 0; i < seg.frames.size(); ++i) {
    Frame& f = seg.frames[i];
    if (cfg.ground_removal) f = RemoveGround(f, *cfg.ground_removal, cfg.ground_level);
    if (downsample) f = DownsamplePoints(f, *downsample, Mix(seed, i)).frame;
  }
  std::vector<FlowAnnotation> anns = AnnotateSegment(seg, cfg, g.jobs);
  for (const Ablation& ab : ablations) {
    for (FlowAnnotation& ann : anns) ann = AblateLabels(ann, {ab.cls}, ab.mode);
  }
  WriteFlowLabels(anns, a.out);
  if (!a.out_segment.empty()) WriteSegment(seg, a.out_segment);
}

// ---------------------------------------------------------------- shared

MetricsConfig LoadMetricsConfig(const Globals& g) {
  MetricsConfig cfg;
  if (!g.config.empty()) {
    const ConfigDocument doc = ParseConfigText(ReadTextFile(g.config));
    SectionReader r = FlatConfig(doc, "metrics");
    cfg.moving_threshold = r.GetDouble("moving_threshold", cfg.moving_threshold);
    cfg.stat_threshold = r.GetDouble("stat_threshold", cfg.stat_threshold);
    cfg.error_thresholds = r.GetDoubleList("error_thresholds", cfg.error_thresholds);
    r.Finish();
  }
  ValidateMetricsConfig(cfg);
  return cfg;
}

std::string MetricsConfigText(const MetricsConfig& cfg) {
  std::string s = "moving_threshold = " + FormatDouble(cfg.moving_threshold) +
                  "\nstat_threshold = " + FormatDouble(cfg.stat_threshold) +
                  "\nerror_thresholds = ";
  for (std::size_t i = 0; i < cfg.error_thresholds.size(); ++i) {
    s += (i ? ", " : "") + FormatDouble(cfg.error_thresholds[i]);
  }
  return s + "\n";
}

// "segment.sfrs[,labels.sffl]"; without labels the segment is annotated with
// default settings.
std::vector<net::TrainingExample> LoadExamples(const std::vector<std::string>& data,
                                               bool compensate_input, int jobs) {
  if (data.empty()) throw Error(ErrorCode::kConfig, "at least one --data entry is required");
  std::vector<std::vector<net::TrainingExample>> parts(data.size());
  ParallelFor(data.size(), jobs, [&](std::size_t i) {
    const std::size_t comma = data[i].find(',');
    const RunSegment seg = ReadSegment(data[i].substr(0, comma));
    const std::vector<FlowAnnotation> anns = comma == std::string::npos
                                                 ? AnnotateSegment(seg)
                                                 : ReadFlowLabels(data[i].substr(comma + 1));
    if (anns.size() + 1 != seg.frames.size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  data[i] + ": expected one annotation per frame after the first");
    }
    for (std::size_t k = 1; k < seg.frames.size(); ++k) {
      if (anns[k - 1].points.size() != seg.frames[k].points.size()) {
        throw Error(ErrorCode::kShapeMismatch,
                    data[i] + ": labels do not match frame " + std::to_string(k));
      }
      parts[i].push_back(
          net::MakeExample(seg.frames[k - 1], seg.frames[k], anns[k - 1], compensate_input));
    }
  });
  std::vector<net::TrainingExample> out;
  for (auto& p : parts) {
    for (auto& e : p) out.push_back(std::move(e));
  }
  return out;
}

net::NetConfig PresetConfig(const std::string& preset) {
  if (preset == "tiny") return net::TinyNetConfig();
  if (preset == "paper") return net::PaperNetConfig();
  throw Error(ErrorCode::kConfig, "preset must be tiny or paper: " + preset);
}

// ---------------------------------------------------------------- stats

struct StatsArgs {
  std::vector<std::string> labels;
  std::optional<std::string> out;
};

void RunStats(const Globals& g, const StatsArgs& a) {
  const MetricsConfig cfg = LoadMetricsConfig(g);
  Echo("stats", MetricsConfigText(cfg));
  std::vector<std::vector<FlowAnnotation>> parts(a.labels.size());
  ParallelFor(a.labels.size(), g.jobs,
              [&](std::size_t i) { parts[i] = ReadFlowLabels(a.labels[i]); });
  std::vector<FlowAnnotation> all;
  for (auto& p : parts) {
    for (auto& f : p) all.push_back(std::move(f));
  }
  WriteOutput(a.out, DatasetStatsToCsv(ComputeDatasetStats(all, cfg)));
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::vector<std::string> data;
  std::string out;
  std::string preset = "tiny";
  std::optional<int> epochs;
};

void RunTrain(const Globals& g, const TrainArgs& a) {
  net::NetConfig cfg = PresetConfig(a.preset);
  if (!g.config.empty()) cfg = net::NetConfigFromText(ReadTextFile(g.config), cfg);
  if (g.seed) cfg.seed = *g.seed;
  if (a.epochs) cfg.epochs = *a.epochs;
  net::ValidateNetConfig(cfg);
  Echo("train", net::NetConfigToText(cfg));
  const std::vector<net::TrainingExample> data =
      LoadExamples(a.data, cfg.ego_compensated_input, g.jobs);
  net::FlowNetModel<float> model(cfg);
  net::Train(model, data, [](const net::EpochReport& e) {
    std::cerr << "epoch " << e.epoch << " loss " << FormatDouble(e.mean_loss) << "\n";
  });
  net::WriteCheckpoint(model, a.out);
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::vector<std::string> data;
  std::optional<std::string> out;
  bool text = false;
};

void RunEval(const Globals& g, const EvalArgs& a) {
  const MetricsConfig cfg = LoadMetricsConfig(g);
  const net::FlowNetModel<float> model = net::ReadCheckpoint(a.checkpoint);
  Echo("eval", "checkpoint = " + a.checkpoint + "\n" + MetricsConfigText(cfg));
  const std::vector<net::TrainingExample> data =
      LoadExamples(a.data, model.config().ego_compensated_input, g.jobs);
  std::vector<net::FlowPrediction> preds(data.size());
  ParallelFor(data.size(), g.jobs, [&](std::size_t i) {
    preds[i] = net::Predict(model, net::FramePair{data[i].prev, data[i].curr});
  });
  MetricsAccumulator acc(cfg);
  for (std::size_t i = 0; i < data.size(); ++i) {
    acc.Add({preds[i].flow, preds[i].predicted}, data[i].labels);
  }
  const MetricsReport report = acc.Report();
  WriteOutput(a.out, a.text ? ReportToText(report) : ReportToCsv(report));
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string checkpoint;
  std::string preset = "tiny";
  std::vector<std::size_t> sizes;
  std::optional<int> warmup;
  std::optional<int> iters;
  std::optional<std::string> out;
  std::string svg;
};

void RunBench(const Globals& g, const BenchArgs& a) {
  BenchOptions opts;
  if (!g.config.empty()) {
    const ConfigDocument doc = ParseConfigText(ReadTextFile(g.config));
    SectionReader r = FlatConfig(doc, "bench");
    if (r.Has("sizes")) {
      opts.sizes.clear();
      for (double v : r.GetDoubleList("sizes", {})) {
        if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
          throw Error(ErrorCode::kConfig, "bench sizes must be non-negative integers");
        }
        opts.sizes.push_back(static_cast<std::size_t>(v));
      }
    }
    opts.warmup = static_cast<int>(r.GetInt("warmup", opts.warmup));
    opts.iters = static_cast<int>(r.GetInt("iters", opts.iters));
    r.Finish();
  }
  if (!a.sizes.empty()) opts.sizes = a.sizes;
  if (a.warmup) opts.warmup = *a.warmup;
  if (a.iters) opts.iters = *a.iters;
  if (g.seed) opts.seed = *g.seed;
  ValidateBenchOptions(opts);
  const net::FlowNetModel<float> model = a.checkpoint.empty()
                                             ? net::FlowNetModel<float>(PresetConfig(a.preset))
                                             : net::ReadCheckpoint(a.checkpoint);
  std::string echo = "model = " + (a.checkpoint.empty() ? "preset " + a.preset : a.checkpoint) +
                     "\nsizes = ";
  for (std::size_t i = 0; i < opts.sizes.size(); ++i) {
    echo += (i ? ", " : "") + std::to_string(opts.sizes[i]);
  }
  echo += "\nwarmup = " + std::to_string(opts.warmup) + "\niters = " +
          std::to_string(opts.iters) + "\nseed = " + std::to_string(opts.seed) + "\n";
  Echo("bench", echo);
  const BenchResult r = RunLatency(model, opts);
  WriteOutput(a.out, BenchToCsv(r));
  if (!a.svg.empty()) WriteBinaryFile(a.svg, BenchToSvg(r));
}

// ---------------------------------------------------------------- export

struct ExportArgs {
  std::string labels;
  std::string out;
};

void RunExport(const Globals& g, const ExportArgs& a) {
  if (!g.config.empty()) throw Error(ErrorCode::kConfig, "export takes no config file");
  Echo("export", "labels = " + a.labels + "\n");
  WriteBinaryFile(a.out, EncodeExport(ReadFlowLabels(a.labels)));
}

int Main(int argc, char** argv) {
  CLI::App app{"Synthetic LiDAR scene-flow annotation, training and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed override for every random choice");
  app.add_option("--jobs", g.jobs, "Worker threads; outputs do not depend on it")
      ->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Subcommand key = value config file");

  GenerateArgs gen;
  CLI::App* c_gen = app.add_subcommand("generate", "Generate a segment from a scene spec");
  c_gen->add_option("spec", gen.spec, "Scene spec file (default: --config)");
  c_gen->add_option("--out", gen.out, "Output segment (SFRS)");
  c_gen->add_option("--urban", gen.urban, "Sample this many random urban scenes instead")
      ->check(CLI::NonNegativeNumber);
  c_gen->add_option("--frames", gen.frames, "Frames per urban scene")->check(CLI::PositiveNumber);
  c_gen->add_option("--out-dir", gen.out_dir, "Directory for urban scenes");

  AnnotateArgs ann;
  CLI::App* c_ann = app.add_subcommand("annotate", "Bootstrap per-point flow labels");
  c_ann->add_option("segment", ann.segment, "Input segment (SFRS)")
      ->required();
  c_ann->add_option("--out", ann.out, "Output labels (SFFL)")->required();
  c_ann->add_option("--out-segment", ann.out_segment,
                    "Write the ground-removed/downsampled segment the labels align with");
  c_ann->add_flag("--no-ego-compensation", ann.no_ego, "Measure motion relative to the sensor");
  c_ann->add_option("--ablate", ann.ablate, "<class>:<stationary|ignored>, repeatable");
  c_ann->add_option("--remove-ground", ann.remove_ground, "Drop points below this height");
  c_ann->add_option("--ground-level", ann.ground_level, "Ground z in the AV frame");
  c_ann->add_option("--downsample", ann.downsample, "Keep this fraction of points");

  StatsArgs st;
  CLI::App* c_st = app.add_subcommand("stats", "Dataset statistics CSV");
  c_st->add_option("labels", st.labels, "Label files (SFFL)")
      ->required();
  c_st->add_option("--out", st.out, "Output CSV (default stdout)");

  TrainArgs tr;
  CLI::App* c_tr = app.add_subcommand("train", "Train a flow network");
  c_tr->add_option("--data", tr.data, "segment.sfrs[,labels.sffl], repeatable")->required();
  c_tr->add_option("--out", tr.out, "Output checkpoint")->required();
  c_tr->add_option("--preset", tr.preset, "tiny or paper");
  c_tr->add_option("--epochs", tr.epochs, "Epoch override")->check(CLI::PositiveNumber);

  EvalArgs ev;
  CLI::App* c_ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  c_ev->add_option("checkpoint", ev.checkpoint, "Checkpoint file")
      ->required();
  c_ev->add_option("--data", ev.data, "segment.sfrs[,labels.sffl], repeatable")->required();
  c_ev->add_option("--out", ev.out, "Output report (default stdout)");
  c_ev->add_flag("--text", ev.text, "Human-readable table instead of CSV");

  BenchArgs be;
  CLI::App* c_be = app.add_subcommand("bench", "Forward latency versus point count");
  c_be->add_option("--checkpoint", be.checkpoint, "Checkpoint (default: --preset)");
  c_be->add_option("--preset", be.preset, "tiny or paper");
  c_be->add_option("--sizes", be.sizes, "Point counts")->delimiter(',');
  c_be->add_option("--warmup", be.warmup, "Untimed runs per size");
  c_be->add_option("--iters", be.iters, "Timed runs per size");
  c_be->add_option("--out", be.out, "Output CSV (default stdout)");
  c_be->add_option("--svg", be.svg, "Also write an SVG plot");

  ExportArgs ex;
  CLI::App* c_ex = app.add_subcommand("export", "Per-point (vx, vy, vz, class) float32 export");
  c_ex->add_option("labels", ex.labels, "Label file (SFFL)")
      ->required();
  c_ex->add_option("--out", ex.out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*c_gen) RunGenerate(g, gen);
    if (*c_ann) RunAnnotate(g, ann);
    if (*c_st) RunStats(g, st);
    if (*c_tr) RunTrain(g, tr);
    if (*c_ev) RunEval(g, ev);
    if (*c_be) RunBench(g, be);
    if (*c_ex) RunExport(g, ex);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}

}  // namespace
}  // namespace sceneflow

int main(int argc, char** argv) { return sceneflow::Main(argc, argv); }

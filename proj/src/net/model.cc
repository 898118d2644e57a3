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

#include "sceneflow/net/model.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "sceneflow/config_text.h"
#include "sceneflow/error.h"

namespace sceneflow::net {

NetConfig PaperNetConfig() { return NetConfig{}; }

NetConfig TinyNetConfig() {
  NetConfig c;
  c.grid.extent = 32.0;
  c.grid.cells = 64;
  c.channel_scale = 0.25;
  c.learning_rate = 1e-3;
  c.batch_size = 4;
  c.epochs = 20;
  c.final_lr_fraction = 0.01;
  c.background_loss_weight = 1.0;
  return c;
}

int ScaledWidth(int base, double scale) {
  return std::max(1, static_cast<int>(std::lround(base * scale)));
}

void ValidateNetConfig(const NetConfig& c) {
  ValidateGrid(c.grid);
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
  if (c.grid.cells % 8 != 0) fail("grid cells must be a multiple of 8");
  if (!(std::isfinite(c.channel_scale) && c.channel_scale > 0.0)) fail("channel_scale must be > 0");
  if (!(c.bn_epsilon > 0.0)) fail("bn_epsilon must be > 0");
  if (!(c.bn_momentum >= 0.0 && c.bn_momentum < 1.0)) fail("bn_momentum must be in [0, 1)");
  if (!(c.background_loss_weight >= 0.0)) fail("background_loss_weight must be >= 0");
  if (!(std::isfinite(c.learning_rate) && c.learning_rate >= 0.0)) fail("learning_rate must be >= 0");
  if (!(c.final_lr_fraction >= 0.0 && c.final_lr_fraction <= 1.0))
    fail("final_lr_fraction must be in [0, 1]");
  if (!(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0)) fail("adam_beta1 must be in [0, 1)");
  if (!(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0)) fail("adam_beta2 must be in [0, 1)");
  if (!(c.adam_epsilon > 0.0)) fail("adam_epsilon must be > 0");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (c.epochs < 0) fail("epochs must be >= 0");
}

std::string NetConfigToText(const NetConfig& c) {
  std::string s;
  auto kv = [&s](const char* k, const std::string& v) { s += std::string(k) + " = " + v + "\n"; };
  kv("grid_extent", FormatDouble(c.grid.extent));
  kv("grid_cells", std::to_string(c.grid.cells));
  kv("grid_z_min", FormatDouble(c.grid.z_min));
  kv("grid_z_max", FormatDouble(c.grid.z_max));
  kv("channel_scale", FormatDouble(c.channel_scale));
  kv("bn_epsilon", FormatDouble(c.bn_epsilon));
  kv("bn_momentum", FormatDouble(c.bn_momentum));
  kv("background_loss_weight", FormatDouble(c.background_loss_weight));
  kv("learning_rate", FormatDouble(c.learning_rate));
  kv("final_lr_fraction", FormatDouble(c.final_lr_fraction));
  kv("adam_beta1", FormatDouble(c.adam_beta1));
  kv("adam_beta2", FormatDouble(c.adam_beta2));
  kv("adam_epsilon", FormatDouble(c.adam_epsilon));
  kv("batch_size", std::to_string(c.batch_size));
  kv("epochs", std::to_string(c.epochs));
  kv("loss_form", c.loss_form == LossForm::kEuclidean ? "euclidean" : "squared");
  kv("seed", std::to_string(c.seed));
  kv("zero_head", c.zero_head ? "true" : "false");
  kv("ego_compensated_input", c.ego_compensated_input ? "true" : "false");
  return s;
}

NetConfig NetConfigFromText(std::string_view text, const NetConfig& base) {
  const ConfigDocument doc = ParseConfigText(text);
  if (doc.sections.size() > 1) {
    throw Error(ErrorCode::kConfig, "line " + std::to_string(doc.sections[1].line) +
                                        ": network config takes no sections");
  }
  SectionReader r(doc.sections[0]);
  NetConfig c = base;
  c.grid.extent = r.GetDouble("grid_extent", c.grid.extent);
  c.grid.cells = static_cast<int>(r.GetInt("grid_cells", c.grid.cells));
  c.grid.z_min = r.GetDouble("grid_z_min", c.grid.z_min);
  c.grid.z_max = r.GetDouble("grid_z_max", c.grid.z_max);
  c.channel_scale = r.GetDouble("channel_scale", c.channel_scale);
  c.bn_epsilon = r.GetDouble("bn_epsilon", c.bn_epsilon);
  c.bn_momentum = r.GetDouble("bn_momentum", c.bn_momentum);
  c.background_loss_weight = r.GetDouble("background_loss_weight", c.background_loss_weight);
  c.learning_rate = r.GetDouble("learning_rate", c.learning_rate);
  c.final_lr_fraction = r.GetDouble("final_lr_fraction", c.final_lr_fraction);
  c.adam_beta1 = r.GetDouble("adam_beta1", c.adam_beta1);
  c.adam_beta2 = r.GetDouble("adam_beta2", c.adam_beta2);
  c.adam_epsilon = r.GetDouble("adam_epsilon", c.adam_epsilon);
  c.batch_size = static_cast<int>(r.GetInt("batch_size", c.batch_size));
  c.epochs = static_cast<int>(r.GetInt("epochs", c.epochs));
  const std::string form =
      r.GetString("loss_form", c.loss_form == LossForm::kEuclidean ? "euclidean" : "squared");
  if (form == "euclidean") {
    c.loss_form = LossForm::kEuclidean;
  } else if (form == "squared") {
    c.loss_form = LossForm::kSquared;
  } else {
    throw Error(ErrorCode::kConfig, "loss_form must be euclidean or squared, got '" + form + "'");
  }
  c.seed = r.GetUint("seed", c.seed);
  c.zero_head = r.GetBool("zero_head", c.zero_head);
  c.ego_compensated_input = r.GetBool("ego_compensated_input", c.ego_compensated_input);
  r.Finish();
  ValidateNetConfig(c);
  return c;
}

namespace {

struct EncoderLayer {
  const char* name;
  int stride;
  int width;
};

constexpr EncoderLayer kEncoder[] = {
    {"C", 2, 64},  {"D", 1, 64},  {"E", 1, 64},  {"F", 1, 64},  {"G", 2, 128}, {"H", 1, 128},
    {"I", 1, 128}, {"J", 1, 128}, {"K", 1, 128}, {"L", 1, 128}, {"M", 2, 256}, {"N", 1, 256},
    {"O", 1, 256}, {"P", 1, 256}, {"Q", 1, 256}, {"R", 1, 256},
};

struct SkipBlock {
  const char* name;
  int d;
  int d_b;
};

constexpr SkipBlock kDecoder[] = {{"S", 128, 128}, {"T", 128, 64}, {"U", 64, 64}};

constexpr int kPointWidth = 64;
constexpr int kHeadWidth = 32;

std::string_view LayerOf(std::string_view name) { return name.substr(0, name.find('/')); }

}  // namespace

template <typename T>
FlowNetModel<T>::FlowNetModel(const NetConfig& cfg) : config_(cfg) {
  ValidateNetConfig(cfg);
  const double s = cfg.channel_scale;
  const int pw = ScaledWidth(kPointWidth, s);
  auto add_bn = [this](const std::string& layer, int c) {
    Add(layer + "/bn/gamma", {c}, true);
    Add(layer + "/bn/beta", {c}, true);
    Add(layer + "/bn/moving_mean", {c}, false);
    Add(layer + "/bn/moving_variance", {c}, false);
  };
  add_bn("A", kEncodingDim);
  Add("A/dense/kernel", {kEncodingDim, pw}, true);

  int in = pw;
  std::vector<int> skip_width = {2 * pw};  // B*
  for (const EncoderLayer& e : kEncoder) {
    const int out = ScaledWidth(e.width, s);
    Add(std::string(e.name) + "/conv/kernel", {3, 3, in, out}, true);
    add_bn(e.name, out);
    in = out;
    const std::string_view n = e.name;
    if (n == "F" || n == "L" || n == "R") skip_width.push_back(2 * out);
  }
  // skip_width: B*, F*, L*, R*.
  int alpha = skip_width[3];
  for (int k = 0; k < 3; ++k) {
    const SkipBlock& b = kDecoder[k];
    const int beta = skip_width[2 - k];
    const int d = ScaledWidth(b.d, s), db = ScaledWidth(b.d_b, s);
    const std::string p = b.name;
    Add(p + "/U1/kernel", {1, 1, alpha, db}, true);
    Add(p + "/U3/kernel", {1, 1, beta, db}, true);
    Add(p + "/U5/kernel", {3, 3, 2 * db, d}, true);
    Add(p + "/U6/kernel", {3, 3, d, d}, true);
    alpha = d;
  }
  const int vw = ScaledWidth(64, s);
  Add("V/conv/kernel", {3, 3, alpha, vw}, true);
  const int x_width = vw + pw + kEncodingDim;
  const int hw = ScaledWidth(kHeadWidth, s);
  Add("Y/dense/kernel", {x_width, hw}, true);
  Add("Y/dense/bias", {hw}, true);
  Add("Z/dense/kernel", {hw, 3}, true);
  Add("Z/dense/bias", {3}, true);
  Initialize();
}

template <typename T>
void FlowNetModel<T>::Add(std::string name, std::vector<int> shape, bool trainable) {
  Parameter<T> p;
  p.name = std::move(name);
  p.value = Tensor<T>(std::move(shape));
  p.trainable = trainable;
  params_.push_back(std::move(p));
}

template <typename T>
void FlowNetModel<T>::Initialize() {
  std::mt19937_64 rng(config_.seed);
  for (Parameter<T>& p : params_) {
    const std::string_view n = p.name;
    auto ends = [n](std::string_view suffix) { return n.ends_with(suffix); };
    if (ends("/gamma") || ends("/moving_variance")) {
      std::fill(p.value.data.begin(), p.value.data.end(), T(1));
    } else if (ends("/kernel")) {
      if (config_.zero_head && LayerOf(n) == "Z") continue;
      const auto& sh = p.value.shape;
      const double receptive = sh.size() == 4 ? double(sh[0]) * sh[1] : 1.0;
      const double fan_in = receptive * sh[sh.size() - 2];
      const double fan_out = receptive * sh.back();
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (T& v : p.value.data) v = static_cast<T>(u(rng));
    }
  }
}

template <typename T>
template <typename U>
FlowNetModel<T> FlowNetModel<T>::From(const FlowNetModel<U>& other) {
  FlowNetModel<T> m(other.config());
  for (std::size_t i = 0; i < m.params_.size(); ++i) {
    const auto& src = other.parameters()[i].value.data;
    auto& dst = m.params_[i].value.data;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = static_cast<T>(src[j]);
  }
  return m;
}

template <typename T>
Parameter<T>& FlowNetModel<T>::param(std::string_view name) {
  for (Parameter<T>& p : params_)
    if (p.name == name) return p;
  throw Error(ErrorCode::kInvalidArgument, "no parameter named " + std::string(name));
}

template <typename T>
const Parameter<T>& FlowNetModel<T>::param(std::string_view name) const {
  return const_cast<FlowNetModel*>(this)->param(name);
}

template <typename T>
std::vector<std::string> FlowNetModel<T>::LayerNames() {
  std::vector<std::string> names = {"A"};
  for (const EncoderLayer& e : kEncoder) names.emplace_back(e.name);
  for (const SkipBlock& b : kDecoder) names.emplace_back(b.name);
  names.insert(names.end(), {"V", "Y", "Z"});
  return names;
}

template <typename T>
std::size_t FlowNetModel<T>::LayerParamCount(std::string_view layer) const {
  std::size_t n = 0;
  for (const Parameter<T>& p : params_)
    if (LayerOf(p.name) == layer) n += p.value.size();
  return n;
}

template <typename T>
std::size_t FlowNetModel<T>::ParamCount() const {
  std::size_t n = 0;
  for (const Parameter<T>& p : params_) n += p.value.size();
  return n;
}

template <typename T>
void FlowNetModel<T>::ZeroGrad() {
  for (Parameter<T>& p : params_) {
    if (p.grad.size() != p.value.size()) p.grad = Tensor<T>(p.value.shape);
    std::fill(p.grad.data.begin(), p.grad.data.end(), T(0));
  }
}

template class FlowNetModel<float>;
template class FlowNetModel<double>;
template FlowNetModel<double> FlowNetModel<double>::From(const FlowNetModel<float>&);
template FlowNetModel<float> FlowNetModel<float>::From(const FlowNetModel<double>&);
template FlowNetModel<float> FlowNetModel<float>::From(const FlowNetModel<float>&);

template <typename T>
BatchInput<T> PrepareBatch(std::span<const FramePair> pairs, const GridConfig& grid) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  BatchInput<T> in;
  in.batch = static_cast<int>(pairs.size());
  const auto cells = static_cast<std::int32_t>(grid.num_cells());
  auto fill = [&](ScatterIndex& index, Tensor<T>& enc, std::span<const Point3> pts, int b,
                  std::vector<std::size_t>* source) {
    const PillarAssignment a = EncodePoints(pts, grid);
    std::vector<std::int32_t> row_of(a.size(), -1);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.cell[i] < 0) continue;
      row_of[i] = static_cast<std::int32_t>(index.cell.size());
      index.cell.push_back(a.cell[i] + b * cells);
      enc.data.insert(enc.data.end(), a.encoding[i].begin(), a.encoding[i].end());
      if (source) source->push_back(i);
    }
    for (std::int32_t i : a.order) index.order.push_back(row_of[i]);
  };
  for (ScatterIndex* idx : {&in.prev_index, &in.curr_index}) {
    idx->batch = in.batch;
    idx->rows = grid.cells;
    idx->cols = grid.cells;
  }
  in.curr_offset.push_back(0);
  for (int b = 0; b < in.batch; ++b) {
    if (pairs[b].curr.empty()) throw Error(ErrorCode::kInvalidArgument, "empty current cloud");
    fill(in.prev_index, in.prev_encoding, pairs[b].prev, b, nullptr);
    fill(in.curr_index, in.curr_encoding, pairs[b].curr, b, &in.curr_source);
    in.curr_offset.push_back(in.curr_index.cell.size());
    in.curr_points.push_back(pairs[b].curr.size());
  }
  in.prev_encoding.shape = {static_cast<int>(in.prev_index.cell.size()), kEncodingDim};
  in.curr_encoding.shape = {static_cast<int>(in.curr_index.cell.size()), kEncodingDim};
  return in;
}

template BatchInput<float> PrepareBatch<float>(std::span<const FramePair>, const GridConfig&);
template BatchInput<double> PrepareBatch<double>(std::span<const FramePair>, const GridConfig&);

namespace {

template <typename T>
struct Layers {
  Tape<T>& tape;
  FlowNetModel<T>& model;
  BatchNormOptions bn;

  Var P(const std::string& name) { return tape.Param(model.param(name)); }

  Var Norm(const std::string& layer, Var x) {
    return BatchNorm(tape, x, P(layer + "/bn/gamma"), P(layer + "/bn/beta"),
                     model.param(layer + "/bn/moving_mean"),
                     model.param(layer + "/bn/moving_variance"), bn);
  }

  struct Encoded {
    Var point_feature;
    Var skip[4];  // B, F, L, R
  };

  Encoded Encode(const Tensor<T>& encoding, const ScatterIndex& index) {
    Encoded e;
    Var x = tape.Constant(encoding);
    e.point_feature = Relu(tape, Dense(tape, Norm("A", x), P("A/dense/kernel")));
    Var g = ScatterToGrid(tape, e.point_feature, index);
    e.skip[0] = g;
    int k = 1;
    for (const EncoderLayer& l : kEncoder) {
      const std::string n = l.name;
      g = Relu(tape, Norm(n, Conv2d(tape, g, P(n + "/conv/kernel"), l.stride)));
      if (n == "F" || n == "L" || n == "R") e.skip[k++] = g;
    }
    return e;
  }

  Var UpsampleSkip(const std::string& n, Var alpha, Var beta) {
    Var a = UpsampleBilinear2x(tape, Conv2d(tape, alpha, P(n + "/U1/kernel"), 1));
    Var b = Conv2d(tape, beta, P(n + "/U3/kernel"), 1);
    const Var parts[] = {a, b};
    Var x = Concat<T>(tape, parts);
    x = Conv2d(tape, x, P(n + "/U5/kernel"), 1);
    return Conv2d(tape, x, P(n + "/U6/kernel"), 1);
  }
};

}  // namespace

template <typename T>
ForwardTrace Forward(Tape<T>& tape, FlowNetModel<T>& model, const BatchInput<T>& input,
                     bool training) {
  const NetConfig& cfg = model.config();
  if (input.curr_index.rows != cfg.grid.cells) {
    throw Error(ErrorCode::kShapeMismatch, "batch was prepared for a different grid");
  }
  Layers<T> L{tape, model, BatchNormOptions{training, cfg.bn_epsilon, cfg.bn_momentum}};
  auto prev = L.Encode(input.prev_encoding, input.prev_index);
  auto curr = L.Encode(input.curr_encoding, input.curr_index);

  Var skip[4];
  for (int k = 0; k < 4; ++k) {
    const Var parts[] = {prev.skip[k], curr.skip[k]};
    skip[k] = Concat<T>(tape, parts);
  }
  Var x = skip[3];
  x = L.UpsampleSkip("S", x, skip[2]);
  x = L.UpsampleSkip("T", x, skip[1]);
  x = L.UpsampleSkip("U", x, skip[0]);
  x = Conv2d(tape, x, L.P("V/conv/kernel"), 1);

  Var w = GatherFromGrid(tape, x, input.curr_index);
  const Var parts[] = {w, curr.point_feature, tape.Constant(input.curr_encoding)};
  Var h = Concat<T>(tape, parts);
  h = AddBias(tape, Dense(tape, h, L.P("Y/dense/kernel")), L.P("Y/dense/bias"));
  h = AddBias(tape, Dense(tape, h, L.P("Z/dense/kernel")), L.P("Z/dense/bias"));

  ForwardTrace t;
  t.flow = h;
  t.point_feature[0] = prev.point_feature;
  t.point_feature[1] = curr.point_feature;
  t.grid[0] = prev.skip[0];
  t.grid[1] = curr.skip[0];
  t.encoder[0] = prev.skip[3];
  t.encoder[1] = curr.skip[3];
  return t;
}

template ForwardTrace Forward<float>(Tape<float>&, FlowNetModel<float>&, const BatchInput<float>&,
                                     bool);
template ForwardTrace Forward<double>(Tape<double>&, FlowNetModel<double>&,
                                      const BatchInput<double>&, bool);

template <typename T>
FlowPrediction Predict(const FlowNetModel<T>& model, const FramePair& pair) {
  const BatchInput<T> in = PrepareBatch<T>(std::span<const FramePair>(&pair, 1), model.config().grid);
  Tape<T> tape(/*recording=*/false);
  // Inference mode reads parameters only.
  auto& m = const_cast<FlowNetModel<T>&>(model);
  const ForwardTrace t = Forward(tape, m, in, /*training=*/false);
  const Tensor<T>& flow = tape.value(t.flow);
  FlowPrediction out;
  out.flow.assign(pair.curr.size(), Vec3::Zero());
  out.predicted.assign(pair.curr.size(), 0);
  for (std::size_t r = 0; r < in.curr_source.size(); ++r) {
    const std::size_t i = in.curr_source[r];
    out.flow[i] = Vec3(flow.data[3 * r], flow.data[3 * r + 1], flow.data[3 * r + 2]);
    out.predicted[i] = 1;
  }
  return out;
}

template FlowPrediction Predict<float>(const FlowNetModel<float>&, const FramePair&);
template FlowPrediction Predict<double>(const FlowNetModel<double>&, const FramePair&);

TrainingExample MakeExample(const Frame& prev, const Frame& curr, const FlowAnnotation& labels,
                            bool compensate_ego) {
  if (labels.points.size() != curr.points.size()) {
    throw Error(ErrorCode::kShapeMismatch, "labels are not aligned with the current cloud");
  }
  TrainingExample ex;
  ex.prev = prev.points;
  if (compensate_ego) {
    const std::vector<Vec3> moved = EgoCompensate(prev, curr);
    for (std::size_t i = 0; i < moved.size(); ++i) {
      ex.prev[i].x = moved[i].x();
      ex.prev[i].y = moved[i].y();
      ex.prev[i].z = moved[i].z();
    }
  }
  ex.curr = curr.points;
  ex.labels = labels;
  return ex;
}

template <typename T>
LossTargets<T> MakeLossTargets(const BatchInput<T>& input,
                               std::span<const FlowAnnotation* const> labels,
                               double background_weight) {
  if (labels.size() != static_cast<std::size_t>(input.batch)) {
    throw Error(ErrorCode::kShapeMismatch, "one annotation per pair required");
  }
  LossTargets<T> t;
  const std::size_t n = input.curr_source.size();
  t.target.assign(3 * n, T(0));
  t.weight.assign(n, T(0));
  t.mask.assign(n, 0);
  for (int b = 0; b < input.batch; ++b) {
    const FlowAnnotation& ann = *labels[b];
    if (ann.points.size() != input.curr_points[b]) {
      throw Error(ErrorCode::kShapeMismatch, "labels are not aligned with the current cloud");
    }
    for (std::size_t r = input.curr_offset[b]; r < input.curr_offset[b + 1]; ++r) {
      const FlowLabel& l = ann.points[input.curr_source[r]];
      if (!l.valid) continue;
      t.mask[r] = 1;
      ++t.valid;
      t.weight[r] = static_cast<T>(l.class_id == ObjectClass::kBackground ? background_weight : 1.0);
      for (int j = 0; j < 3; ++j) t.target[3 * r + j] = static_cast<T>(l.flow[j]);
    }
  }
  return t;
}

template LossTargets<float> MakeLossTargets<float>(const BatchInput<float>&,
                                                   std::span<const FlowAnnotation* const>, double);
template LossTargets<double> MakeLossTargets<double>(const BatchInput<double>&,
                                                     std::span<const FlowAnnotation* const>,
                                                     double);

}  // namespace sceneflow::net

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

#ifndef SCENEFLOW_NET_MODEL_H_
#define SCENEFLOW_NET_MODEL_H_

// The scene-flow network.
//
//   A  per-point featurizer: batch norm over the 8-channel encoding, then a
//      bias-free linear layer to 64 channels and ReLU
//   B  snap-to-grid: per-pillar sum of A
//   C..R  strided 3x3 conv stack with batch norm and ReLU (shared weights,
//      run once per frame)
//   S, T, U  upsample-skip blocks over the depth-concatenated encoder
//      outputs of both frames; V a 3x3 conv
//   W  ungrid: each current point reads its pillar's embedding
//   X  concat(W, A, raw encoding); Y linear to 32; Z linear to 3 (m/s)
//
// Widths are multiplied by NetConfig::channel_scale.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sceneflow/annotator.h"
#include "sceneflow/net/tape.h"
#include "sceneflow/pillar_grid.h"

namespace sceneflow::net {

struct NetConfig {
  GridConfig grid;
  double channel_scale = 1.0;
  double bn_epsilon = 1e-3;
  double bn_momentum = 0.99;
  double background_loss_weight = 0.1;
  double learning_rate = 1e-6;
  // Cosine decay of the learning rate over all training steps, ending at
  // learning_rate * final_lr_fraction. 1 keeps the rate constant.
  double final_lr_fraction = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 64;
  int epochs = 19;
  LossForm loss_form = LossForm::kEuclidean;
  std::uint64_t seed = 1;
  // Initialize layer Z to zero, so the untrained model predicts no motion.
  bool zero_head = false;
  // Whether the previous cloud is moved into the current AV frame before it
  // reaches the network. Recorded here so evaluation prepares inputs the way
  // the model was trained.
  bool ego_compensated_input = true;

  bool operator==(const NetConfig&) const = default;
};

// Full-size network (grid 512 x 512 over 170 m).
NetConfig PaperNetConfig();
// Desk-scale preset: 64 x 64 grid over 32 m, quarter widths, and a learning
// rate, batch size, cosine schedule and unit background loss weight suited to
// a few hundred synthetic frames.
NetConfig TinyNetConfig();

void ValidateNetConfig(const NetConfig& cfg);
std::string NetConfigToText(const NetConfig& cfg);
// Keys absent from the text keep the value in `base`.
NetConfig NetConfigFromText(std::string_view text, const NetConfig& base = {});

// round(base * scale), at least 1.
int ScaledWidth(int base, double scale);

template <typename T>
class FlowNetModel {
 public:
  explicit FlowNetModel(const NetConfig& cfg);

  // Same architecture and values with a different scalar type.
  template <typename U>
  static FlowNetModel From(const FlowNetModel<U>& other);

  const NetConfig& config() const { return config_; }
  std::vector<Parameter<T>>& parameters() { return params_; }
  const std::vector<Parameter<T>>& parameters() const { return params_; }

  Parameter<T>& param(std::string_view name);
  const Parameter<T>& param(std::string_view name) const;

  // Layer letters in build order ("A", "C", ..., "Z").
  static std::vector<std::string> LayerNames();
  std::size_t LayerParamCount(std::string_view layer) const;
  std::size_t ParamCount() const;

  void ZeroGrad();

 private:
  void Add(std::string name, std::vector<int> shape, bool trainable);
  void Initialize();

  NetConfig config_;
  std::vector<Parameter<T>> params_;
};

// One frame pair. `prev` must already be in the representation the model
// expects (see NetConfig::ego_compensated_input and MakeExample).
struct FramePair {
  std::span<const Point3> prev;
  std::span<const Point3> curr;
};

// Pillarized network input for a batch of frame pairs. Only in-grid points
// become rows; curr_source maps each current row back to its point.
template <typename T>
struct BatchInput {
  int batch = 0;
  Tensor<T> prev_encoding;  // [N_prev, 8]
  Tensor<T> curr_encoding;  // [N_curr, 8]
  ScatterIndex prev_index;
  ScatterIndex curr_index;
  std::vector<std::size_t> curr_offset;  // batch + 1 row offsets
  std::vector<std::size_t> curr_source;  // row -> point index within its pair
  std::vector<std::size_t> curr_points;  // per pair, total current points
};

template <typename T>
BatchInput<T> PrepareBatch(std::span<const FramePair> pairs, const GridConfig& grid);

// Intermediate values a test may want to inspect.
struct ForwardTrace {
  Var flow;                      // [N_curr, 3]
  Var point_feature[2];          // A output, prev / curr
  Var grid[2];                   // B output, prev / curr
  Var encoder[2];                // R output, prev / curr
};

// Builds the forward graph on `tape`. In training mode batch statistics are
// used and moving averages updated. `input` must outlive the tape.
template <typename T>
ForwardTrace Forward(Tape<T>& tape, FlowNetModel<T>& model, const BatchInput<T>& input,
                     bool training);

struct FlowPrediction {
  std::vector<Vec3> flow;              // zero where no prediction
  std::vector<std::uint8_t> predicted; // 0 for out-of-grid points
};

// Inference-mode forward of one pair; does not modify the model.
template <typename T>
FlowPrediction Predict(const FlowNetModel<T>& model, const FramePair& pair);

struct TrainingExample {
  std::vector<Point3> prev;
  std::vector<Point3> curr;
  FlowAnnotation labels;  // aligned with curr
};

// Builds the network input for (prev, curr). With `compensate_ego` the
// previous cloud is expressed in the current AV frame.
TrainingExample MakeExample(const Frame& prev, const Frame& curr, const FlowAnnotation& labels,
                            bool compensate_ego);

// Per-row loss targets for a prepared batch.
template <typename T>
struct LossTargets {
  std::vector<T> target;
  std::vector<T> weight;
  std::vector<std::uint8_t> mask;
  std::size_t valid = 0;
};

template <typename T>
LossTargets<T> MakeLossTargets(const BatchInput<T>& input,
                               std::span<const FlowAnnotation* const> labels,
                               double background_weight);

// Graph loss for a batch of examples; throws kNoValidPoints when nothing is
// scorable.
template <typename T>
double BatchLoss(FlowNetModel<T>& model, std::span<const TrainingExample* const> batch,
                 bool training, bool backward);

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::int64_t step = 0;
  double lr_scale = 1.0;  // multiplies cfg.learning_rate for the next step
};

// One Adam update of every trainable parameter from its grad buffer.
template <typename T>
void AdamStep(FlowNetModel<T>& model, AdamState<T>& state);

struct EpochReport {
  int epoch = 0;       // 0-based
  double mean_loss = 0.0;
  std::size_t batches = 0;
};

struct TrainResult {
  std::vector<EpochReport> epochs;
  std::size_t steps = 0;
  std::size_t skipped_batches = 0;  // batches with no scorable point
};

// Deterministic mini-batch Adam over `data` for config().epochs epochs.
// Throws kDivergence on a non-finite loss.
template <typename T>
TrainResult Train(FlowNetModel<T>& model, std::span<const TrainingExample> data,
                  const std::function<void(const EpochReport&)>& on_epoch = {});

struct GradCheckOptions {
  double epsilon = 1e-5;
  int samples = 256;
  std::uint64_t seed = 7;
  int max_attempts = 8192;
  // Restrict sampling to parameters whose name starts with one of these.
  std::vector<std::string> prefixes;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  int checked = 0;
  int skipped_kinks = 0;
  std::string worst_name;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares tape gradients with central differences on randomly chosen
// trainable parameters. Samples whose perturbation flips any ReLU are
// skipped and redrawn. Relative error is |a - n| / max(|a|, |n|).
GradCheckResult GradCheck(FlowNetModel<double>& model, std::span<const TrainingExample> batch,
                          const GradCheckOptions& opt = {});

// Checkpoint: "SFCK", u32 version, u32 length + config text, u32 tensor
// count, then per tensor u32 name length, name, u32 rank, u32 dims, f32
// values. Little-endian.
std::string EncodeCheckpoint(const FlowNetModel<float>& model);
FlowNetModel<float> DecodeCheckpoint(std::string_view bytes);
void WriteCheckpoint(const FlowNetModel<float>& model, const std::string& path);
FlowNetModel<float> ReadCheckpoint(const std::string& path);

}  // namespace sceneflow::net

#endif  // SCENEFLOW_NET_MODEL_H_

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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "sceneflow/error.h"
#include "sceneflow/net/model.h"

namespace sceneflow::net {
namespace {

struct LossEval {
  double loss = 0.0;
  std::uint64_t relu_signature = 0;
};

template <typename T>
LossEval EvalLoss(FlowNetModel<T>& model, std::span<const TrainingExample* const> batch,
                  bool training, bool backward) {
  std::vector<FramePair> pairs;
  std::vector<const FlowAnnotation*> labels;
  for (const TrainingExample* ex : batch) {
    pairs.push_back({ex->prev, ex->curr});
    labels.push_back(&ex->labels);
  }
  const NetConfig& cfg = model.config();
  const BatchInput<T> in = PrepareBatch<T>(pairs, cfg.grid);
  const LossTargets<T> targets = MakeLossTargets(in, labels, cfg.background_loss_weight);
  if (targets.valid == 0) throw Error(ErrorCode::kNoValidPoints, "batch has no scorable point");
  Tape<T> tape(backward);
  const ForwardTrace t = Forward(tape, model, in, training);
  const Var loss = FlowLoss<T>(tape, t.flow, targets.target, targets.weight, targets.mask,
                               cfg.loss_form);
  LossEval e;
  e.loss = tape.value(loss).data[0];
  e.relu_signature = tape.relu_signature();
  if (backward && std::isfinite(e.loss)) tape.Backward(loss);
  return e;
}

}  // namespace

template <typename T>
double BatchLoss(FlowNetModel<T>& model, std::span<const TrainingExample* const> batch,
                 bool training, bool backward) {
  return EvalLoss(model, batch, training, backward).loss;
}

template double BatchLoss<float>(FlowNetModel<float>&, std::span<const TrainingExample* const>,
                                 bool, bool);
template double BatchLoss<double>(FlowNetModel<double>&, std::span<const TrainingExample* const>,
                                  bool, bool);

template <typename T>
void AdamStep(FlowNetModel<T>& model, AdamState<T>& state) {
  const NetConfig& cfg = model.config();
  auto& params = model.parameters();
  if (state.m.empty()) {
    for (const Parameter<T>& p : params) {
      state.m.emplace_back(p.trainable ? p.value.size() : 0, T(0));
      state.v.emplace_back(p.trainable ? p.value.size() : 0, T(0));
    }
  }
  ++state.step;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double lr_t = cfg.learning_rate * state.lr_scale * std::sqrt(1.0 - std::pow(b2, double(state.step))) /
                      (1.0 - std::pow(b1, double(state.step)));
  const T lr = static_cast<T>(lr_t), eps = static_cast<T>(cfg.adam_epsilon);
  const T tb1 = static_cast<T>(b1), tb2 = static_cast<T>(b2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<T>& p = params[k];
    if (!p.trainable || p.grad.size() != p.value.size()) continue;
    T* m = state.m[k].data();
    T* v = state.v[k].data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const T g = p.grad.data[i];
      m[i] = tb1 * m[i] + (T(1) - tb1) * g;
      v[i] = tb2 * v[i] + (T(1) - tb2) * g * g;
      p.value.data[i] -= lr * m[i] / (std::sqrt(v[i]) + eps);
    }
  }
}

template void AdamStep<float>(FlowNetModel<float>&, AdamState<float>&);
template void AdamStep<double>(FlowNetModel<double>&, AdamState<double>&);

template <typename T>
TrainResult Train(FlowNetModel<T>& model, std::span<const TrainingExample> data,
                  const std::function<void(const EpochReport&)>& on_epoch) {
  if (data.empty()) throw Error(ErrorCode::kInvalidArgument, "empty training set");
  const NetConfig& cfg = model.config();
  TrainResult result;
  AdamState<T> adam;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const double total_steps =
      static_cast<double>(cfg.epochs) * static_cast<double>((data.size() + bs - 1) / bs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    EpochReport rep;
    rep.epoch = epoch;
    double sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      std::vector<const TrainingExample*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i)
        batch.push_back(&data[order[i]]);
      model.ZeroGrad();
      double loss;
      try {
        loss = EvalLoss(model, batch, /*training=*/true, /*backward=*/true).loss;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoValidPoints) throw;
        ++result.skipped_batches;
        continue;
      }
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kDivergence, "non-finite loss at epoch " + std::to_string(epoch) +
                                                ", step " + std::to_string(result.steps));
      }
      const double progress = total_steps > 1 ? result.steps / (total_steps - 1) : 1.0;
      adam.lr_scale = cfg.final_lr_fraction +
                      (1.0 - cfg.final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
      AdamStep(model, adam);
      ++result.steps;
      ++rep.batches;
      sum += loss;
    }
    rep.mean_loss = rep.batches ? sum / static_cast<double>(rep.batches) : 0.0;
    result.epochs.push_back(rep);
    if (on_epoch) on_epoch(rep);
  }
  return result;
}

template TrainResult Train<float>(FlowNetModel<float>&, std::span<const TrainingExample>,
                                  const std::function<void(const EpochReport&)>&);
template TrainResult Train<double>(FlowNetModel<double>&, std::span<const TrainingExample>,
                                   const std::function<void(const EpochReport&)>&);

GradCheckResult GradCheck(FlowNetModel<double>& model, std::span<const TrainingExample> batch,
                          const GradCheckOptions& opt) {
  std::vector<const TrainingExample*> ptrs;
  for (const TrainingExample& ex : batch) ptrs.push_back(&ex);

  std::vector<std::size_t> candidates;
  auto& params = model.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].trainable) continue;
    bool match = opt.prefixes.empty();
    for (const std::string& pre : opt.prefixes) match = match || params[k].name.starts_with(pre);
    if (match) candidates.push_back(k);
  }
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "no parameter to check");

  // Moving statistics are updated by every training-mode pass but do not
  // affect training-mode outputs; restore them afterwards anyway.
  std::vector<Tensor<double>> saved;
  for (const auto& p : params) saved.push_back(p.value);

  model.ZeroGrad();
  const LossEval base = EvalLoss(model, ptrs, /*training=*/true, /*backward=*/true);

  GradCheckResult r;
  std::mt19937_64 rng(opt.seed);
  for (int attempt = 0; attempt < opt.max_attempts && r.checked < opt.samples; ++attempt) {
    const std::size_t k = candidates[std::uniform_int_distribution<std::size_t>(
        0, candidates.size() - 1)(rng)];
    Parameter<double>& p = params[k];
    const std::size_t i =
        std::uniform_int_distribution<std::size_t>(0, p.value.size() - 1)(rng);
    const double orig = p.value.data[i];
    p.value.data[i] = orig + opt.epsilon;
    const LossEval plus = EvalLoss(model, ptrs, true, false);
    p.value.data[i] = orig - opt.epsilon;
    const LossEval minus = EvalLoss(model, ptrs, true, false);
    p.value.data[i] = orig;
    if (plus.relu_signature != base.relu_signature ||
        minus.relu_signature != base.relu_signature) {
      ++r.skipped_kinks;
      continue;
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * opt.epsilon);
    const double analytic = p.grad.data[i];
    const double denom = std::max(std::abs(numeric), std::abs(analytic));
    const double rel = denom > 0.0 ? std::abs(numeric - analytic) / denom : 0.0;
    ++r.checked;
    if (rel >= r.max_relative_error) {
      r.max_relative_error = rel;
      r.worst_name = p.name;
      r.worst_index = i;
      r.worst_analytic = analytic;
      r.worst_numeric = numeric;
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k].value = saved[k];
  return r;
}

}  // namespace sceneflow::net

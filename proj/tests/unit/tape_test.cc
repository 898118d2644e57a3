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

#include "sceneflow/net/tape.h"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "sceneflow/error.h"

namespace sceneflow::net {
namespace {

using Build = std::function<Var(Tape<double>&, std::vector<Var>&)>;

Parameter<double> RandomParam(std::vector<int> shape, std::mt19937_64& rng, double lo = -1,
                              double hi = 1) {
  Parameter<double> p;
  p.value = Tensor<double>(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : p.value.data) v = u(rng);
  return p;
}

// Scalar probe <y, g> with a fixed random g, so every output element
// contributes to the checked gradient.
Var Probe(Tape<double>& tape, Var y, const std::vector<double>& g) {
  const Tensor<double>& yv = tape.value(y);
  double s = 0;
  for (std::size_t i = 0; i < yv.size(); ++i) s += yv.data[i] * g[i];
  Tensor<double> out({1});
  out.data[0] = s;
  Var r = tape.Push(std::move(out), tape.needs_grad(y));
  tape.OnBackward([&tape, y, r, &g] {
    const double go = tape.grad(r).data[0];
    Tensor<double>& gy = tape.grad(y);
    for (std::size_t i = 0; i < gy.size(); ++i) gy.data[i] += go * g[i];
  });
  return r;
}

// Max relative error between tape gradients and central differences over
// every element of every input. Central differences are exact for linear
// ops, so those use a large step that keeps rounding error negligible.
double CheckGradients(std::vector<Parameter<double>>& inputs, const Build& build,
                      double eps = 1e-2) {
  std::mt19937_64 rng(99);
  std::vector<double> g;
  auto eval = [&](bool backward) {
    Tape<double> tape(backward);
    std::vector<Var> vars;
    for (auto& p : inputs) vars.push_back(tape.Param(p));
    const Var y = build(tape, vars);
    if (g.empty()) {
      std::normal_distribution<double> nd;
      g.resize(tape.value(y).size());
      for (double& v : g) v = nd(rng);
    }
    const Var loss = Probe(tape, y, g);
    const double value = tape.value(loss).data[0];
    if (backward) tape.Backward(loss);
    return value;
  };
  for (auto& p : inputs) p.grad = Tensor<double>(p.value.shape);
  eval(true);
  double worst = 0;
  for (auto& p : inputs) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double keep = p.value.data[i];
      p.value.data[i] = keep + eps;
      const double up = eval(false);
      p.value.data[i] = keep - eps;
      const double down = eval(false);
      p.value.data[i] = keep;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = p.grad.data[i];
      const double denom = std::max(std::abs(numeric), std::abs(analytic));
      if (denom > 0) worst = std::max(worst, std::abs(numeric - analytic) / std::max(denom, 1e-6));
    }
  }
  return worst;
}

TEST(TapeGradients, Dense) {
  std::mt19937_64 rng(1);
  std::vector<Parameter<double>> in = {RandomParam({5, 4}, rng), RandomParam({4, 3}, rng)};
  EXPECT_LE(CheckGradients(in, [](auto& t, auto& v) { return Dense(t, v[0], v[1]); }), 1e-7);
}

TEST(TapeGradients, AddBias) {
  std::mt19937_64 rng(2);
  std::vector<Parameter<double>> in = {RandomParam({2, 3, 4}, rng), RandomParam({4}, rng)};
  EXPECT_LE(CheckGradients(in, [](auto& t, auto& v) { return AddBias(t, v[0], v[1]); }), 1e-7);
}

TEST(TapeGradients, BatchNormTrainingAndInference) {
  for (bool training : {true, false}) {
    std::mt19937_64 rng(3);
    std::vector<Parameter<double>> in = {RandomParam({6, 3}, rng, -2, 2), RandomParam({3}, rng),
                                         RandomParam({3}, rng)};
    Parameter<double> mean = RandomParam({3}, rng), var = RandomParam({3}, rng, 0.5, 2);
    mean.trainable = var.trainable = false;
    const double err = CheckGradients(in, [&](auto& t, auto& v) {
      return BatchNorm(t, v[0], v[1], v[2], mean, var, {training, 1e-3, 0.99});
    }, 1e-5);
    EXPECT_LE(err, 1e-6) << "training=" << training;
  }
}

TEST(TapeGradients, ReluAwayFromKink) {
  std::mt19937_64 rng(4);
  std::vector<Parameter<double>> in = {RandomParam({20}, rng)};
  for (double& v : in[0].value.data) v += v >= 0 ? 0.1 : -0.1;
  EXPECT_LE(CheckGradients(in, [](auto& t, auto& v) { return Relu(t, v[0]); }, 1e-3), 1e-7);
}

TEST(TapeGradients, Conv2dStridesAndKernels) {
  for (int k : {1, 3}) {
    for (int stride : {1, 2}) {
      std::mt19937_64 rng(5 + k + stride);
      std::vector<Parameter<double>> in = {RandomParam({2, 5, 6, 3}, rng),
                                           RandomParam({k, k, 3, 4}, rng)};
      const double err = CheckGradients(
          in, [stride](auto& t, auto& v) { return Conv2d(t, v[0], v[1], stride); });
      EXPECT_LE(err, 1e-7) << "k=" << k << " stride=" << stride;
    }
  }
}

TEST(TapeGradients, UpsampleBilinear) {
  std::mt19937_64 rng(6);
  std::vector<Parameter<double>> in = {RandomParam({2, 3, 4, 2}, rng)};
  EXPECT_LE(CheckGradients(in, [](auto& t, auto& v) { return UpsampleBilinear2x(t, v[0]); }),
            1e-7);
}

TEST(TapeGradients, Concat) {
  std::mt19937_64 rng(7);
  std::vector<Parameter<double>> in = {RandomParam({2, 3, 2}, rng), RandomParam({2, 3, 5}, rng)};
  EXPECT_LE(CheckGradients(in,
                           [](auto& t, auto& v) {
                             const Var parts[] = {v[0], v[1]};
                             return Concat(t, std::span<const Var>(parts));
                           }),
            1e-7);
}

TEST(TapeGradients, ScatterAndGather) {
  std::mt19937_64 rng(8);
  ScatterIndex idx{2, 3, 3, {0, 4, 4, -1, 9, 17, 9}, {}};
  for (std::int32_t c = 0; c < 18; ++c)
    for (std::int32_t i = 0; i < 7; ++i)
      if (idx.cell[i] == c) idx.order.push_back(i);
  std::vector<Parameter<double>> pts = {RandomParam({7, 3}, rng)};
  EXPECT_LE(CheckGradients(pts, [&](auto& t, auto& v) { return ScatterToGrid(t, v[0], idx); }),
            1e-7);
  std::vector<Parameter<double>> grid = {RandomParam({2, 3, 3, 2}, rng)};
  EXPECT_LE(CheckGradients(grid, [&](auto& t, auto& v) { return GatherFromGrid(t, v[0], idx); }),
            1e-7);
}

TEST(TapeGradients, FlowLossBothForms) {
  std::mt19937_64 rng(9);
  const std::vector<double> target = {1, 0, 0, 0, 2, 0, -1, -1, 1, 0.5, 0.5, 0.5};
  const std::vector<double> weight = {1.0, 0.1, 1.0, 1.0};
  const std::vector<std::uint8_t> mask = {1, 1, 0, 1};
  for (LossForm form : {LossForm::kEuclidean, LossForm::kSquared}) {
    std::vector<Parameter<double>> in = {RandomParam({4, 3}, rng, -3, 3)};
    EXPECT_LE(CheckGradients(in,
                             [&](auto& t, auto& v) {
                               return FlowLoss<double>(t, v[0], target, weight, mask, form);
                             }, 1e-5),
              1e-6);
  }
}

TEST(TapeGradients, ComposedNetwork) {
  std::mt19937_64 rng(10);
  std::vector<Parameter<double>> in = {RandomParam({1, 4, 4, 2}, rng), RandomParam({3, 3, 2, 3}, rng),
                                       RandomParam({3}, rng), RandomParam({3}, rng),
                                       RandomParam({1, 1, 3, 2}, rng)};
  Parameter<double> mean({}, {}), var({}, {});
  mean.value = Tensor<double>({3});
  var.value = Tensor<double>({3}, 1.0);
  const double err = CheckGradients(in, [&](auto& t, auto& v) {
    Var h = Conv2d(t, v[0], v[1], 2);
    h = BatchNorm(t, h, v[2], v[3], mean, var, {true, 1e-3, 0.99});
    h = Conv2d(t, h, v[4], 1);
    return UpsampleBilinear2x(t, h);
  }, 1e-5);
  EXPECT_LE(err, 1e-6);
}

TEST(Ops, UpsampleTaps) {
  Tape<double> tape(false);
  Tensor<double> x({1, 1, 2, 1});
  x.data = {0.0, 4.0};
  const Tensor<double>& y = tape.value(UpsampleBilinear2x(tape, tape.Constant(x)));
  ASSERT_EQ(y.shape, (std::vector<int>{1, 2, 4, 1}));
  const std::vector<double> row = {0.0, 1.0, 3.0, 4.0};
  for (int i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(y.data[i], row[i]);
    EXPECT_DOUBLE_EQ(y.data[4 + i], row[i]);
  }
}

TEST(Ops, BatchNormUpdatesMovingStatistics) {
  Tape<double> tape(false);
  Tensor<double> x({4, 1});
  x.data = {1, 2, 3, 6};
  Parameter<double> gamma{"g", Tensor<double>({1}, 1.0), {}, true};
  Parameter<double> beta{"b", Tensor<double>({1}, 0.0), {}, true};
  Parameter<double> mean{"m", Tensor<double>({1}, 0.0), {}, false};
  Parameter<double> var{"v", Tensor<double>({1}, 1.0), {}, false};
  const Var y = BatchNorm(tape, tape.Constant(x), tape.Param(gamma), tape.Param(beta), mean, var,
                          {true, 0.0, 0.9});
  EXPECT_NEAR(mean.value.data[0], 0.1 * 3.0, 1e-12);
  EXPECT_NEAR(var.value.data[0], 0.9 + 0.1 * (14.0 / 3.0), 1e-12);
  double s = 0;
  for (double v : tape.value(y).data) s += v;
  EXPECT_NEAR(s, 0.0, 1e-12);
}

TEST(Loss, Examples) {
  Tape<double> tape(false);
  Tensor<double> pred({2, 3});
  pred.data = {1, 0, 0, 0, 2, 0};
  const std::vector<double> target(6, 0.0), weight = {1.0, 0.1};
  const std::vector<std::uint8_t> mask = {1, 1};
  const Var p = tape.Constant(pred);
  EXPECT_NEAR(tape.value(FlowLoss<double>(tape, p, target, weight, mask, LossForm::kEuclidean))
                  .data[0],
              0.6, 1e-12);
  EXPECT_NEAR(
      tape.value(FlowLoss<double>(tape, p, target, weight, mask, LossForm::kSquared)).data[0],
      (1.0 + 0.1 * 4.0) / 2, 1e-12);
  const std::vector<double> same = pred.data;
  EXPECT_EQ(tape.value(FlowLoss<double>(tape, p, same, weight, mask, LossForm::kEuclidean))
                .data[0],
            0.0);
  const std::vector<std::uint8_t> none = {0, 0};
  try {
    FlowLoss<double>(tape, p, target, weight, none, LossForm::kEuclidean);
    ADD_FAILURE() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoValidPoints);
  }
}

TEST(Loss, MaskedPredictionsDoNotMatter) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-5, 5);
  std::bernoulli_distribution keep(0.6);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 17;
    Tensor<double> pred({n, 3});
    std::vector<double> target(3 * n), weight(n);
    std::vector<std::uint8_t> mask(n);
    for (double& v : pred.data) v = u(rng);
    for (double& v : target) v = u(rng);
    for (int i = 0; i < n; ++i) {
      weight[i] = keep(rng) ? 1.0 : 0.1;
      mask[i] = keep(rng);
    }
    mask[0] = 1;
    Tape<double> tape(false);
    const double base =
        tape.value(FlowLoss<double>(tape, tape.Constant(pred), target, weight, mask,
                                    LossForm::kEuclidean))
            .data[0];
    for (int i = 0; i < n; ++i)
      if (!mask[i])
        for (int j = 0; j < 3; ++j) pred.data[3 * i + j] = u(rng) * 100;
    const double after =
        tape.value(FlowLoss<double>(tape, tape.Constant(pred), target, weight, mask,
                                    LossForm::kEuclidean))
            .data[0];
    EXPECT_EQ(base, after);
  }
}

TEST(Tape, RejectsNonScalarLossAndNonRecordingBackward) {
  Tape<double> tape(true);
  const Var v = tape.Push(Tensor<double>({2}), true);
  EXPECT_THROW(tape.Backward(v), Error);
  Tape<double> off(false);
  const Var s = off.Push(Tensor<double>({1}), true);
  EXPECT_THROW(off.Backward(s), Error);
  EXPECT_FALSE(off.needs_grad(s));
}

}  // namespace
}  // namespace sceneflow::net

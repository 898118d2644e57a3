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

#ifndef SCENEFLOW_NET_TAPE_H_
#define SCENEFLOW_NET_TAPE_H_

// Minimal reverse-mode gradient tape over the fixed op set the flow network
// needs. Every op computes its forward value eagerly; when the tape is
// recording it also pushes a closure that propagates the output gradient to
// its inputs. Backward() replays the closures in reverse order.

#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace sceneflow::net {

template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, T fill = T(0))
      : shape(std::move(s)), data(Count(shape), fill) {}

  static std::size_t Count(const std::vector<int>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  }
  std::size_t size() const { return data.size(); }
  int dim(int i) const { return shape[i < 0 ? shape.size() + i : i]; }
  int channels() const { return shape.back(); }
  std::size_t rows() const { return shape.empty() ? 0 : size() / channels(); }
};

// Trainable tensor or buffer (batch-norm moving statistics are buffers).
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;
};

struct Var {
  int id = -1;
};

template <typename T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  Var Constant(Tensor<T> value);
  // The parameter must outlive the tape; its grad buffer receives the
  // accumulated gradient during Backward().
  Var Param(Parameter<T>& p);
  // Output node of an op; `needs_grad` is true when any input needs one.
  Var Push(Tensor<T> value, bool needs_grad);

  const Tensor<T>& value(Var v) const;
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  // Gradient buffer of v, zero-allocated on first use.
  Tensor<T>& grad(Var v);

  // Registers the backward closure of the most recently pushed node.
  void OnBackward(std::function<void()> fn);

  // Seeds d(loss)/d(loss) = 1 and propagates; loss must be a scalar.
  void Backward(Var loss);

  // Order-dependent digest of every ReLU activation pattern seen so far.
  // Finite-difference checks compare it to detect kink crossings.
  std::uint64_t relu_signature() const { return relu_signature_; }
  void MixReluSignature(std::uint64_t h) {
    relu_signature_ = (relu_signature_ ^ h) * 0x100000001b3ULL + 0x9e3779b97f4a7c15ULL;
  }

 private:
  struct Node {
    Tensor<T> own;
    Parameter<T>* param = nullptr;
    Tensor<T> grad;
    bool needs_grad = false;
    std::function<void()> backward;
  };
  bool recording_;
  std::vector<Node> nodes_;
  std::uint64_t relu_signature_ = 0;
};

// ---- op set -------------------------------------------------------------
// Shapes: points [N, C]; grids [B, H, W, C]; dense weights [C_in, C_out];
// convolution weights [k, k, C_in, C_out].

template <typename T>
Var Dense(Tape<T>& tape, Var x, Var w);
template <typename T>
Var AddBias(Tape<T>& tape, Var x, Var bias);

// Normalizes over every leading dimension. In training mode batch statistics
// are used and the moving averages are updated in place.
struct BatchNormOptions {
  bool training = false;
  double epsilon = 1e-3;
  double momentum = 0.99;
};
template <typename T>
Var BatchNorm(Tape<T>& tape, Var x, Var gamma, Var beta,
              Parameter<T>& moving_mean, Parameter<T>& moving_var,
              const BatchNormOptions& opt);

template <typename T>
Var Relu(Tape<T>& tape, Var x);

// SAME padding.
template <typename T>
Var Conv2d(Tape<T>& tape, Var x, Var w, int stride);

// x2 bilinear, half-pixel centers, edge clamped.
template <typename T>
Var UpsampleBilinear2x(Tape<T>& tape, Var x);

// Concatenates along the last dimension.
template <typename T>
Var Concat(Tape<T>& tape, std::span<const Var> parts);

// Points -> [batch, rows, cols, C] by summation. `cell` holds flat ids in
// [0, batch*rows*cols) per point; `order` is the summation order.
struct ScatterIndex {
  int batch = 1;
  int rows = 1;
  int cols = 1;
  std::vector<std::int32_t> cell;
  std::vector<std::int32_t> order;
};
template <typename T>
Var ScatterToGrid(Tape<T>& tape, Var points, const ScatterIndex& index);

// Grid -> per-point rows; backward is the summation above.
template <typename T>
Var GatherFromGrid(Tape<T>& tape, Var grid, const ScatterIndex& index);

enum class LossForm { kEuclidean, kSquared };

// mean_i over points with mask[i] of weight[i] * e_i, e_i = |pred_i - target_i|
// (or its square). Throws kNoValidPoints when the mask is empty.
template <typename T>
Var FlowLoss(Tape<T>& tape, Var pred, std::span<const T> target,
             std::span<const T> weight, std::span<const std::uint8_t> mask,
             LossForm form);

}  // namespace sceneflow::net

#endif  // SCENEFLOW_NET_TAPE_H_

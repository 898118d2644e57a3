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

#include <algorithm>
#include <cmath>
#include <memory>

#include "sceneflow/error.h"
#include "sceneflow/simd/kernels.h"

namespace sceneflow::net {

template <typename T>
Var Tape<T>::Constant(Tensor<T> value) {
  Node n;
  n.own = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Tape<T>::Param(Parameter<T>& p) {
  Node n;
  n.param = &p;
  n.needs_grad = recording_ && p.trainable;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Tape<T>::Push(Tensor<T> value, bool needs_grad) {
  Node n;
  n.own = std::move(value);
  n.needs_grad = recording_ && needs_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.param ? n.param->value : n.own;
}

template <typename T>
Tensor<T>& Tape<T>::grad(Var v) {
  Node& n = nodes_[v.id];
  Tensor<T>& g = n.param ? n.param->grad : n.grad;
  const Tensor<T>& val = value(v);
  if (g.size() != val.size()) g = Tensor<T>(val.shape);
  return g;
}

template <typename T>
void Tape<T>::OnBackward(std::function<void()> fn) {
  if (recording_ && nodes_.back().needs_grad) nodes_.back().backward = std::move(fn);
}

template <typename T>
void Tape<T>::Backward(Var loss) {
  if (!recording_) throw Error(ErrorCode::kInvalidArgument, "tape is not recording");
  if (value(loss).size() != 1) throw Error(ErrorCode::kShapeMismatch, "loss must be a scalar");
  if (!nodes_[loss.id].needs_grad) return;
  grad(loss).data[0] = T(1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.data.empty()) n.backward();
  }
}

template class Tape<float>;
template class Tape<double>;

namespace {

template <typename T>
void AddInto(Tensor<T>& dst, const T* src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += src[i];
}

template <typename T>
void Require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kShapeMismatch, what);
}

}  // namespace

template <typename T>
Var Dense(Tape<T>& tape, Var x, Var w) {
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& wv = tape.value(w);
  Require<T>(wv.shape.size() == 2 && !xv.shape.empty() && xv.channels() == wv.dim(0),
             "dense: shape mismatch");
  const std::size_t n = xv.rows();
  const int cin = wv.dim(0), cout = wv.dim(1);
  std::vector<int> shape = xv.shape;
  shape.back() = cout;
  Tensor<T> out(shape);
  const auto s = simd::DenseShape(n, cin, cout);
  if (n > 0) simd::Kernels<T>().conv_forward(s, xv.data.data(), wv.data.data(), out.data.data());
  Var y = tape.Push(std::move(out), tape.needs_grad(x) || tape.needs_grad(w));
  tape.OnBackward([&tape, x, w, y, s, n] {
    const Tensor<T>& dy = tape.grad(y);
    if (n == 0) return;
    const auto& k = simd::Kernels<T>();
    if (tape.needs_grad(x)) {
      std::vector<T> dx(s.in_size());
      k.conv_backward_data(s, dy.data.data(), tape.value(w).data.data(), dx.data());
      AddInto(tape.grad(x), dx.data());
    }
    if (tape.needs_grad(w)) {
      std::vector<T> dw(s.weight_size());
      k.conv_backward_filter(s, tape.value(x).data.data(), dy.data.data(), dw.data());
      AddInto(tape.grad(w), dw.data());
    }
  });
  return y;
}

template <typename T>
Var AddBias(Tape<T>& tape, Var x, Var bias) {
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& bv = tape.value(bias);
  Require<T>(bv.size() == static_cast<std::size_t>(xv.channels()), "bias: shape mismatch");
  Tensor<T> out = xv;
  const int c = xv.channels();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (int j = 0; j < c; ++j) out.data[r * c + j] += bv.data[j];
  Var y = tape.Push(std::move(out), tape.needs_grad(x) || tape.needs_grad(bias));
  tape.OnBackward([&tape, x, bias, y, c] {
    const Tensor<T>& dy = tape.grad(y);
    if (tape.needs_grad(x)) AddInto(tape.grad(x), dy.data.data());
    if (tape.needs_grad(bias)) {
      Tensor<T>& db = tape.grad(bias);
      for (std::size_t r = 0; r < dy.rows(); ++r)
        for (int j = 0; j < c; ++j) db.data[j] += dy.data[r * c + j];
    }
  });
  return y;
}

template <typename T>
Var BatchNorm(Tape<T>& tape, Var x, Var gamma, Var beta, Parameter<T>& moving_mean,
              Parameter<T>& moving_var, const BatchNormOptions& opt) {
  const Tensor<T>& xv = tape.value(x);
  const int c = xv.channels();
  const std::size_t m = xv.rows();
  Require<T>(tape.value(gamma).size() == static_cast<std::size_t>(c) &&
                 tape.value(beta).size() == static_cast<std::size_t>(c) &&
                 moving_mean.value.size() == static_cast<std::size_t>(c) &&
                 moving_var.value.size() == static_cast<std::size_t>(c),
             "batch norm: shape mismatch");
  const T* g = tape.value(gamma).data.data();
  const T* b = tape.value(beta).data.data();

  auto inv_std = std::make_shared<std::vector<T>>(c);
  std::vector<T> mean(c);
  if (opt.training && m > 0) {
    std::vector<double> s1(c, 0.0), s2(c, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const T* row = xv.data.data() + r * c;
      for (int j = 0; j < c; ++j) s1[j] += row[j];
    }
    for (int j = 0; j < c; ++j) s1[j] /= static_cast<double>(m);
    for (std::size_t r = 0; r < m; ++r) {
      const T* row = xv.data.data() + r * c;
      for (int j = 0; j < c; ++j) {
        const double d = row[j] - s1[j];
        s2[j] += d * d;
      }
    }
    for (int j = 0; j < c; ++j) {
      const double var = s2[j] / static_cast<double>(m);
      mean[j] = static_cast<T>(s1[j]);
      (*inv_std)[j] = static_cast<T>(1.0 / std::sqrt(var + opt.epsilon));
      const double unbiased = m > 1 ? s2[j] / static_cast<double>(m - 1) : var;
      T& mm = moving_mean.value.data[j];
      T& mv = moving_var.value.data[j];
      mm = static_cast<T>(opt.momentum * mm + (1.0 - opt.momentum) * s1[j]);
      mv = static_cast<T>(opt.momentum * mv + (1.0 - opt.momentum) * unbiased);
    }
  } else {
    for (int j = 0; j < c; ++j) {
      mean[j] = moving_mean.value.data[j];
      (*inv_std)[j] = static_cast<T>(1.0 / std::sqrt(double(moving_var.value.data[j]) + opt.epsilon));
    }
  }

  // xhat is kept for the backward pass.
  auto xhat = std::make_shared<std::vector<T>>(xv.size());
  Tensor<T> out(xv.shape);
  for (std::size_t r = 0; r < m; ++r) {
    const T* row = xv.data.data() + r * c;
    T* h = xhat->data() + r * c;
    T* o = out.data.data() + r * c;
    for (int j = 0; j < c; ++j) {
      h[j] = (row[j] - mean[j]) * (*inv_std)[j];
      o[j] = g[j] * h[j] + b[j];
    }
  }
  const bool training = opt.training;
  Var y = tape.Push(std::move(out),
                    tape.needs_grad(x) || tape.needs_grad(gamma) || tape.needs_grad(beta));
  tape.OnBackward([&tape, x, gamma, beta, y, c, m, xhat, inv_std, training] {
    const Tensor<T>& dy = tape.grad(y);
    std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const T* d = dy.data.data() + r * c;
      const T* h = xhat->data() + r * c;
      for (int j = 0; j < c; ++j) {
        sum_dy[j] += d[j];
        sum_dy_xhat[j] += static_cast<double>(d[j]) * h[j];
      }
    }
    if (tape.needs_grad(gamma)) {
      Tensor<T>& dg = tape.grad(gamma);
      for (int j = 0; j < c; ++j) dg.data[j] += static_cast<T>(sum_dy_xhat[j]);
    }
    if (tape.needs_grad(beta)) {
      Tensor<T>& db = tape.grad(beta);
      for (int j = 0; j < c; ++j) db.data[j] += static_cast<T>(sum_dy[j]);
    }
    if (!tape.needs_grad(x)) return;
    const T* g = tape.value(gamma).data.data();
    Tensor<T>& dx = tape.grad(x);
    if (training) {
      const double inv_m = 1.0 / static_cast<double>(m);
      std::vector<T> a(c), mb(c), mh(c);
      for (int j = 0; j < c; ++j) {
        a[j] = g[j] * (*inv_std)[j];
        mb[j] = static_cast<T>(sum_dy[j] * inv_m);
        mh[j] = static_cast<T>(sum_dy_xhat[j] * inv_m);
      }
      for (std::size_t r = 0; r < m; ++r) {
        const T* d = dy.data.data() + r * c;
        const T* h = xhat->data() + r * c;
        T* o = dx.data.data() + r * c;
        for (int j = 0; j < c; ++j) o[j] += a[j] * (d[j] - mb[j] - h[j] * mh[j]);
      }
    } else {
      for (std::size_t r = 0; r < m; ++r) {
        const T* d = dy.data.data() + r * c;
        T* o = dx.data.data() + r * c;
        for (int j = 0; j < c; ++j) o[j] += g[j] * (*inv_std)[j] * d[j];
      }
    }
  });
  return y;
}

template <typename T>
Var Relu(Tape<T>& tape, Var x) {
  const Tensor<T>& xv = tape.value(x);
  Tensor<T> out(xv.shape);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const bool pos = xv.data[i] > T(0);
    out.data[i] = pos ? xv.data[i] : T(0);
    word = (word << 1) | (pos ? 1u : 0u);
    if ((i & 63) == 63) {
      h = (h ^ word) * 0x100000001b3ULL;
      word = 0;
    }
  }
  tape.MixReluSignature((h ^ word) * 0x100000001b3ULL);
  Var y = tape.Push(std::move(out), tape.needs_grad(x));
  tape.OnBackward([&tape, x, y] {
    const Tensor<T>& dy = tape.grad(y);
    const Tensor<T>& xv = tape.value(x);
    Tensor<T>& dx = tape.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (xv.data[i] > T(0)) dx.data[i] += dy.data[i];
  });
  return y;
}

template <typename T>
Var Conv2d(Tape<T>& tape, Var x, Var w, int stride) {
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& wv = tape.value(w);
  Require<T>(xv.shape.size() == 4 && wv.shape.size() == 4 && wv.dim(0) == wv.dim(1) &&
                 wv.dim(2) == xv.dim(3),
             "conv2d: shape mismatch");
  const auto s =
      simd::SameConv(xv.dim(0), xv.dim(1), xv.dim(2), xv.dim(3), wv.dim(3), wv.dim(0), stride);
  Tensor<T> out({s.batch, s.out_h, s.out_w, s.out_c});
  simd::Kernels<T>().conv_forward(s, xv.data.data(), wv.data.data(), out.data.data());
  Var y = tape.Push(std::move(out), tape.needs_grad(x) || tape.needs_grad(w));
  tape.OnBackward([&tape, x, w, y, s] {
    const Tensor<T>& dy = tape.grad(y);
    const auto& k = simd::Kernels<T>();
    if (tape.needs_grad(x)) {
      std::vector<T> dx(s.in_size());
      k.conv_backward_data(s, dy.data.data(), tape.value(w).data.data(), dx.data());
      AddInto(tape.grad(x), dx.data());
    }
    if (tape.needs_grad(w)) {
      std::vector<T> dw(s.weight_size());
      k.conv_backward_filter(s, tape.value(x).data.data(), dy.data.data(), dw.data());
      AddInto(tape.grad(w), dw.data());
    }
  });
  return y;
}

namespace {

// Source taps of output index o along one axis for x2 half-pixel upsampling.
inline void UpsampleTaps(int o, int n, int& i0, int& i1) {
  const int k = o >> 1;
  i0 = k;
  i1 = (o & 1) ? std::min(k + 1, n - 1) : std::max(k - 1, 0);
}

}  // namespace

template <typename T>
Var UpsampleBilinear2x(Tape<T>& tape, Var x) {
  const Tensor<T>& xv = tape.value(x);
  Require<T>(xv.shape.size() == 4, "upsample: expected [B,H,W,C]");
  const int b = xv.dim(0), h = xv.dim(1), w = xv.dim(2), c = xv.dim(3);
  Tensor<T> out({b, 2 * h, 2 * w, c});
  const T near = T(0.75), far = T(0.25);
  for (int n = 0; n < b; ++n)
    for (int oy = 0; oy < 2 * h; ++oy) {
      int y0, y1;
      UpsampleTaps(oy, h, y0, y1);
      for (int ox = 0; ox < 2 * w; ++ox) {
        int x0, x1;
        UpsampleTaps(ox, w, x0, x1);
        const T* p00 = xv.data.data() + ((std::size_t(n) * h + y0) * w + x0) * c;
        const T* p01 = xv.data.data() + ((std::size_t(n) * h + y0) * w + x1) * c;
        const T* p10 = xv.data.data() + ((std::size_t(n) * h + y1) * w + x0) * c;
        const T* p11 = xv.data.data() + ((std::size_t(n) * h + y1) * w + x1) * c;
        T* o = out.data.data() + ((std::size_t(n) * 2 * h + oy) * 2 * w + ox) * c;
        for (int j = 0; j < c; ++j)
          o[j] = near * (near * p00[j] + far * p01[j]) + far * (near * p10[j] + far * p11[j]);
      }
    }
  Var y = tape.Push(std::move(out), tape.needs_grad(x));
  tape.OnBackward([&tape, x, y, b, h, w, c] {
    const Tensor<T>& dy = tape.grad(y);
    Tensor<T>& dx = tape.grad(x);
    const T near = T(0.75), far = T(0.25);
    for (int n = 0; n < b; ++n)
      for (int oy = 0; oy < 2 * h; ++oy) {
        int y0, y1;
        UpsampleTaps(oy, h, y0, y1);
        for (int ox = 0; ox < 2 * w; ++ox) {
          int x0, x1;
          UpsampleTaps(ox, w, x0, x1);
          const T* d = dy.data.data() + ((std::size_t(n) * 2 * h + oy) * 2 * w + ox) * c;
          T* p00 = dx.data.data() + ((std::size_t(n) * h + y0) * w + x0) * c;
          T* p01 = dx.data.data() + ((std::size_t(n) * h + y0) * w + x1) * c;
          T* p10 = dx.data.data() + ((std::size_t(n) * h + y1) * w + x0) * c;
          T* p11 = dx.data.data() + ((std::size_t(n) * h + y1) * w + x1) * c;
          for (int j = 0; j < c; ++j) {
            p00[j] += near * near * d[j];
            p01[j] += near * far * d[j];
            p10[j] += far * near * d[j];
            p11[j] += far * far * d[j];
          }
        }
      }
  });
  return y;
}

template <typename T>
Var Concat(Tape<T>& tape, std::span<const Var> parts) {
  Require<T>(!parts.empty(), "concat: no inputs");
  const Tensor<T>& first = tape.value(parts[0]);
  const std::size_t rows = first.rows();
  std::vector<int> widths;
  int total = 0;
  bool needs = false;
  for (Var p : parts) {
    const Tensor<T>& v = tape.value(p);
    Require<T>(v.shape.size() == first.shape.size() && v.rows() == rows &&
                   std::equal(v.shape.begin(), v.shape.end() - 1, first.shape.begin()),
               "concat: leading dimensions differ");
    widths.push_back(v.channels());
    total += v.channels();
    needs = needs || tape.needs_grad(p);
  }
  std::vector<int> shape = first.shape;
  shape.back() = total;
  Tensor<T> out(shape);
  int offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor<T>& v = tape.value(parts[k]);
    const int wk = widths[k];
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.data.data() + r * wk, wk, out.data.data() + r * total + offset);
    offset += wk;
  }
  Var y = tape.Push(std::move(out), needs);
  std::vector<Var> ins(parts.begin(), parts.end());
  tape.OnBackward([&tape, ins, widths, total, rows, y] {
    const Tensor<T>& dy = tape.grad(y);
    int offset = 0;
    for (std::size_t k = 0; k < ins.size(); ++k) {
      const int wk = widths[k];
      if (tape.needs_grad(ins[k])) {
        Tensor<T>& dx = tape.grad(ins[k]);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* src = dy.data.data() + r * total + offset;
          T* dst = dx.data.data() + r * wk;
          for (int j = 0; j < wk; ++j) dst[j] += src[j];
        }
      }
      offset += wk;
    }
  });
  return y;
}

template <typename T>
Var ScatterToGrid(Tape<T>& tape, Var points, const ScatterIndex& index) {
  const Tensor<T>& pv = tape.value(points);
  Require<T>(pv.shape.size() == 2 && pv.rows() == index.cell.size(),
             "scatter: feature rows differ from index");
  const int c = pv.channels();
  Tensor<T> out({index.batch, index.rows, index.cols, c});
  simd::Kernels<T>().scatter_add_rows(pv.data.data(), c, index.cell.data(), index.order.data(),
                                      index.order.size(), out.data.data());
  Var y = tape.Push(std::move(out), tape.needs_grad(points));
  tape.OnBackward([&tape, points, y, &index, c] {
    std::vector<T> d(tape.value(points).size());
    simd::Kernels<T>().gather_rows(tape.grad(y).data.data(), c, index.cell.data(),
                                   index.cell.size(), d.data());
    AddInto(tape.grad(points), d.data());
  });
  return y;
}

template <typename T>
Var GatherFromGrid(Tape<T>& tape, Var grid, const ScatterIndex& index) {
  const Tensor<T>& gv = tape.value(grid);
  Require<T>(gv.shape.size() == 4 && gv.dim(0) == index.batch && gv.dim(1) == index.rows &&
                 gv.dim(2) == index.cols,
             "gather: grid shape differs from index");
  const int c = gv.channels();
  Tensor<T> out({static_cast<int>(index.cell.size()), c});
  simd::Kernels<T>().gather_rows(gv.data.data(), c, index.cell.data(), index.cell.size(),
                                 out.data.data());
  Var y = tape.Push(std::move(out), tape.needs_grad(grid));
  tape.OnBackward([&tape, grid, y, &index, c] {
    simd::Kernels<T>().scatter_add_rows(tape.grad(y).data.data(), c, index.cell.data(),
                                        index.order.data(), index.order.size(),
                                        tape.grad(grid).data.data());
  });
  return y;
}

template <typename T>
Var FlowLoss(Tape<T>& tape, Var pred, std::span<const T> target, std::span<const T> weight,
             std::span<const std::uint8_t> mask, LossForm form) {
  const Tensor<T>& pv = tape.value(pred);
  const std::size_t n = pv.rows();
  Require<T>(pv.channels() == 3 && target.size() == 3 * n && weight.size() == n &&
                 mask.size() == n,
             "loss: shape mismatch");
  std::size_t count = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    ++count;
    double sq = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double e = double(pv.data[3 * i + j]) - double(target[3 * i + j]);
      sq += e * e;
    }
    sum += weight[i] * (form == LossForm::kEuclidean ? std::sqrt(sq) : sq);
  }
  if (count == 0) throw Error(ErrorCode::kNoValidPoints, "loss: no valid points");
  Tensor<T> out({1});
  out.data[0] = static_cast<T>(sum / static_cast<double>(count));
  Var y = tape.Push(std::move(out), tape.needs_grad(pred));
  tape.OnBackward([&tape, pred, y, target, weight, mask, form, count, n] {
    const double scale = double(tape.grad(y).data[0]) / static_cast<double>(count);
    const Tensor<T>& pv = tape.value(pred);
    Tensor<T>& dp = tape.grad(pred);
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      double e[3], sq = 0.0;
      for (int j = 0; j < 3; ++j) {
        e[j] = double(pv.data[3 * i + j]) - double(target[3 * i + j]);
        sq += e[j] * e[j];
      }
      double f;
      if (form == LossForm::kEuclidean) {
        const double norm = std::sqrt(sq);
        f = norm > 0.0 ? weight[i] / norm : 0.0;
      } else {
        f = 2.0 * weight[i];
      }
      for (int j = 0; j < 3; ++j) dp.data[3 * i + j] += static_cast<T>(scale * f * e[j]);
    }
  });
  return y;
}

#define SCENEFLOW_INSTANTIATE_OPS(T)                                                    \
  template Var Dense<T>(Tape<T>&, Var, Var);                                            \
  template Var AddBias<T>(Tape<T>&, Var, Var);                                          \
  template Var BatchNorm<T>(Tape<T>&, Var, Var, Var, Parameter<T>&, Parameter<T>&,      \
                            const BatchNormOptions&);                                   \
  template Var Relu<T>(Tape<T>&, Var);                                                  \
  template Var Conv2d<T>(Tape<T>&, Var, Var, int);                                      \
  template Var UpsampleBilinear2x<T>(Tape<T>&, Var);                                    \
  template Var Concat<T>(Tape<T>&, std::span<const Var>);                               \
  template Var ScatterToGrid<T>(Tape<T>&, Var, const ScatterIndex&);                    \
  template Var GatherFromGrid<T>(Tape<T>&, Var, const ScatterIndex&);                   \
  template Var FlowLoss<T>(Tape<T>&, Var, std::span<const T>, std::span<const T>,       \
                           std::span<const std::uint8_t>, LossForm);

SCENEFLOW_INSTANTIATE_OPS(float)
SCENEFLOW_INSTANTIATE_OPS(double)

}  // namespace sceneflow::net

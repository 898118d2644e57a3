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
#include <cstring>

#include "sceneflow/simd/kernels.h"

namespace sceneflow::simd {

ConvShape SameConv(int batch, int h, int w, int in_c, int out_c, int kernel,
                   int stride) {
  ConvShape s;
  s.batch = batch;
  s.in_h = h;
  s.in_w = w;
  s.in_c = in_c;
  s.out_c = out_c;
  s.kernel = kernel;
  s.stride = stride;
  s.out_h = (h + stride - 1) / stride;
  s.out_w = (w + stride - 1) / stride;
  const int pad_h = std::max((s.out_h - 1) * stride + kernel - h, 0);
  const int pad_w = std::max((s.out_w - 1) * stride + kernel - w, 0);
  s.pad_top = pad_h / 2;
  s.pad_left = pad_w / 2;
  return s;
}

ConvShape DenseShape(std::size_t n, int in_c, int out_c) {
  ConvShape s;
  s.batch = 1;
  s.in_h = s.out_h = static_cast<int>(n);
  s.in_w = s.out_w = 1;
  s.in_c = in_c;
  s.out_c = out_c;
  return s;
}

namespace {

template <typename T>
void ConvForward(const ConvShape& s, const T* in, const T* w, T* out) {
  const int ci_n = s.in_c, co_n = s.out_c, k = s.kernel;
  std::fill(out, out + s.out_size(), T(0));
  for (int b = 0; b < s.batch; ++b) {
    for (int oy = 0; oy < s.out_h; ++oy) {
      for (int ox = 0; ox < s.out_w; ++ox) {
        T* o = out + ((static_cast<std::size_t>(b) * s.out_h + oy) * s.out_w + ox) * co_n;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * s.stride + ky - s.pad_top;
          if (iy < 0 || iy >= s.in_h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * s.stride + kx - s.pad_left;
            if (ix < 0 || ix >= s.in_w) continue;
            const T* x = in + ((static_cast<std::size_t>(b) * s.in_h + iy) * s.in_w + ix) * ci_n;
            const T* wt = w + static_cast<std::size_t>(ky * k + kx) * ci_n * co_n;
            for (int ci = 0; ci < ci_n; ++ci) {
              const T v = x[ci];
              const T* wr = wt + static_cast<std::size_t>(ci) * co_n;
              for (int co = 0; co < co_n; ++co) o[co] += v * wr[co];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void ConvBackwardData(const ConvShape& s, const T* d_out, const T* w, T* d_in) {
  const int ci_n = s.in_c, co_n = s.out_c, k = s.kernel;
  std::fill(d_in, d_in + s.in_size(), T(0));
  for (int b = 0; b < s.batch; ++b) {
    for (int oy = 0; oy < s.out_h; ++oy) {
      for (int ox = 0; ox < s.out_w; ++ox) {
        const T* g = d_out + ((static_cast<std::size_t>(b) * s.out_h + oy) * s.out_w + ox) * co_n;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * s.stride + ky - s.pad_top;
          if (iy < 0 || iy >= s.in_h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * s.stride + kx - s.pad_left;
            if (ix < 0 || ix >= s.in_w) continue;
            T* dx = d_in + ((static_cast<std::size_t>(b) * s.in_h + iy) * s.in_w + ix) * ci_n;
            const T* wt = w + static_cast<std::size_t>(ky * k + kx) * ci_n * co_n;
            for (int ci = 0; ci < ci_n; ++ci) {
              const T* wr = wt + static_cast<std::size_t>(ci) * co_n;
              T acc = 0;
              for (int co = 0; co < co_n; ++co) acc += wr[co] * g[co];
              dx[ci] += acc;
            }
          }
        }
      }
    }
  }
}

template <typename T>
void ConvBackwardFilter(const ConvShape& s, const T* in, const T* d_out, T* d_w) {
  const int ci_n = s.in_c, co_n = s.out_c, k = s.kernel;
  std::fill(d_w, d_w + s.weight_size(), T(0));
  for (int b = 0; b < s.batch; ++b) {
    for (int oy = 0; oy < s.out_h; ++oy) {
      for (int ox = 0; ox < s.out_w; ++ox) {
        const T* g = d_out + ((static_cast<std::size_t>(b) * s.out_h + oy) * s.out_w + ox) * co_n;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * s.stride + ky - s.pad_top;
          if (iy < 0 || iy >= s.in_h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * s.stride + kx - s.pad_left;
            if (ix < 0 || ix >= s.in_w) continue;
            const T* x = in + ((static_cast<std::size_t>(b) * s.in_h + iy) * s.in_w + ix) * ci_n;
            T* dw = d_w + static_cast<std::size_t>(ky * k + kx) * ci_n * co_n;
            for (int ci = 0; ci < ci_n; ++ci) {
              const T v = x[ci];
              T* dr = dw + static_cast<std::size_t>(ci) * co_n;
              for (int co = 0; co < co_n; ++co) dr[co] += v * g[co];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void ScatterAddRows(const T* src, int depth, const std::int32_t* cell,
                    const std::int32_t* order, std::size_t n, T* dst) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = static_cast<std::size_t>(order[i]);
    const T* s = src + p * depth;
    T* d = dst + static_cast<std::size_t>(cell[p]) * depth;
    for (int c = 0; c < depth; ++c) d[c] += s[c];
  }
}

template <typename T>
void GatherRows(const T* grid, int depth, const std::int32_t* cell,
                std::size_t n, T* dst) {
  for (std::size_t i = 0; i < n; ++i) {
    T* d = dst + i * depth;
    if (cell[i] < 0) {
      std::fill(d, d + depth, T(0));
    } else {
      std::memcpy(d, grid + static_cast<std::size_t>(cell[i]) * depth,
                  sizeof(T) * depth);
    }
  }
}

template <typename T>
KernelTable<T> MakeScalarTable() {
  return KernelTable<T>{"scalar", &ConvForward<T>, &ConvBackwardData<T>,
                        &ConvBackwardFilter<T>, &ScatterAddRows<T>,
                        &GatherRows<T>};
}

}  // namespace

const KernelTable<float>& ScalarKernelsF32() {
  static const KernelTable<float> table = MakeScalarTable<float>();
  return table;
}

const KernelTable<double>& ScalarKernelsF64() {
  static const KernelTable<double> table = MakeScalarTable<double>();
  return table;
}

}  // namespace sceneflow::simd

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

#ifndef SCENEFLOW_SIMD_KERNELS_H_
#define SCENEFLOW_SIMD_KERNELS_H_

// Data-parallel inner loops of the network. Every kernel has a portable
// scalar reference (float and double) and, on x86-64, an AVX2+FMA float
// variant. The active float table is chosen once at startup from CPUID;
// SCENEFLOW_ISA=scalar|avx2 overrides the choice.
//
// Tensors are NHWC; convolution weights are [k][k][c_in][c_out]. A dense
// layer is a 1x1 convolution over an N x 1 image.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace sceneflow::simd {

struct ConvShape {
  int batch = 1;
  int in_h = 1, in_w = 1, in_c = 1;
  int out_h = 1, out_w = 1, out_c = 1;
  int kernel = 1;
  int stride = 1;
  int pad_top = 0, pad_left = 0;

  std::size_t in_size() const {
    return static_cast<std::size_t>(batch) * in_h * in_w * in_c;
  }
  std::size_t out_size() const {
    return static_cast<std::size_t>(batch) * out_h * out_w * out_c;
  }
  std::size_t weight_size() const {
    return static_cast<std::size_t>(kernel) * kernel * in_c * out_c;
  }
};

// TensorFlow SAME padding: out = ceil(in / stride), the odd pixel of padding
// goes to the bottom/right.
ConvShape SameConv(int batch, int h, int w, int in_c, int out_c, int kernel,
                   int stride);

// Dense layer as a 1x1 convolution over n rows.
ConvShape DenseShape(std::size_t n, int in_c, int out_c);

template <typename T>
struct KernelTable {
  std::string_view name;
  // out = conv(in, w); out is overwritten.
  void (*conv_forward)(const ConvShape&, const T* in, const T* w, T* out);
  // d_in = conv^T(d_out, w); d_in is overwritten.
  void (*conv_backward_data)(const ConvShape&, const T* d_out, const T* w,
                             T* d_in);
  // d_w = sum over pixels of in (x) d_out; d_w is overwritten.
  void (*conv_backward_filter)(const ConvShape&, const T* in, const T* d_out,
                               T* d_w);
  // dst[cell[order[i]]] += src[order[i]] for i in [0, n), rows of `depth`.
  void (*scatter_add_rows)(const T* src, int depth, const std::int32_t* cell,
                           const std::int32_t* order, std::size_t n, T* dst);
  // dst[i] = cell[i] < 0 ? 0 : grid[cell[i]], rows of `depth`.
  void (*gather_rows)(const T* grid, int depth, const std::int32_t* cell,
                      std::size_t n, T* dst);
};

const KernelTable<float>& ScalarKernelsF32();
const KernelTable<double>& ScalarKernelsF64();
// nullptr when the AVX2 variant was not compiled or the CPU lacks AVX2/FMA.
const KernelTable<float>* Avx2KernelsF32();

bool CpuSupportsAvx2Fma();

const KernelTable<float>& ActiveKernelsF32();
// Force a table (tests, benchmarks). Not thread-safe against running kernels.
void SetActiveKernelsF32(const KernelTable<float>& table);

template <typename T>
const KernelTable<T>& Kernels();
template <>
inline const KernelTable<float>& Kernels<float>() { return ActiveKernelsF32(); }
template <>
inline const KernelTable<double>& Kernels<double>() { return ScalarKernelsF64(); }

}  // namespace sceneflow::simd

#endif  // SCENEFLOW_SIMD_KERNELS_H_

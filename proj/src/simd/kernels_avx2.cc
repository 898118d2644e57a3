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

// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <cstring>
#include <vector>

#include "sceneflow/simd/kernels.h"

namespace sceneflow::simd {
namespace {

inline std::size_t PixelOffset(int b, int y, int x, int h, int w, int c) {
  return ((static_cast<std::size_t>(b) * h + y) * w + x) * c;
}

// Valid output range [lo, hi) along one axis for kernel tap `t`.
inline void TapRange(int t, int stride, int pad, int in_len, int out_len,
                     int* lo, int* hi) {
  // iy = oy * stride + t - pad must lie in [0, in_len).
  int first = pad - t;
  *lo = first <= 0 ? 0 : (first + stride - 1) / stride;
  const int last = in_len - 1 + pad - t;  // oy * stride <= last
  *hi = last < 0 ? 0 : std::min(out_len, last / stride + 1);
  if (*hi < *lo) *hi = *lo;
}

// acc[0..NV) over channels [co0, co0 + 8 NV) of one output pixel.
template <int NV>
inline void ForwardChunk(const ConvShape& s, const float* in, const float* w,
                         float* o, int b, int oy, int ox, int co0) {
  __m256 acc[NV];
  for (int j = 0; j < NV; ++j) acc[j] = _mm256_setzero_ps();
  const int ci_n = s.in_c, co_n = s.out_c, k = s.kernel;
  for (int ky = 0; ky < k; ++ky) {
    const int iy = oy * s.stride + ky - s.pad_top;
    if (iy < 0 || iy >= s.in_h) continue;
    for (int kx = 0; kx < k; ++kx) {
      const int ix = ox * s.stride + kx - s.pad_left;
      if (ix < 0 || ix >= s.in_w) continue;
      const float* x = in + PixelOffset(b, iy, ix, s.in_h, s.in_w, ci_n);
      const float* wt = w + static_cast<std::size_t>(ky * k + kx) * ci_n * co_n + co0;
      for (int ci = 0; ci < ci_n; ++ci) {
        const __m256 v = _mm256_broadcast_ss(x + ci);
        const float* wr = wt + static_cast<std::size_t>(ci) * co_n;
        for (int j = 0; j < NV; ++j) {
          acc[j] = _mm256_fmadd_ps(v, _mm256_loadu_ps(wr + 8 * j), acc[j]);
        }
      }
    }
  }
  for (int j = 0; j < NV; ++j) _mm256_storeu_ps(o + co0 + 8 * j, acc[j]);
}

inline void ForwardTail(const ConvShape& s, const float* in, const float* w,
                        float* o, int b, int oy, int ox, int co0) {
  const int ci_n = s.in_c, co_n = s.out_c, k = s.kernel;
  for (int co = co0; co < co_n; ++co) o[co] = 0.0f;
  for (int ky = 0; ky < k; ++ky) {
    const int iy = oy * s.stride + ky - s.pad_top;
    if (iy < 0 || iy >= s.in_h) continue;
    for (int kx = 0; kx < k; ++kx) {
      const int ix = ox * s.stride + kx - s.pad_left;
      if (ix < 0 || ix >= s.in_w) continue;
      const float* x = in + PixelOffset(b, iy, ix, s.in_h, s.in_w, ci_n);
      const float* wt = w + static_cast<std::size_t>(ky * k + kx) * ci_n * co_n;
      for (int ci = 0; ci < ci_n; ++ci) {
        const float v = x[ci];
        const float* wr = wt + static_cast<std::size_t>(ci) * co_n;
        for (int co = co0; co < co_n; ++co) o[co] += v * wr[co];
      }
    }
  }
}

using ChunkFn = void (*)(const ConvShape&, const float*, const float*, float*,
                         int, int, int, int);
constexpr ChunkFn kForwardChunks[9] = {
    nullptr,          &ForwardChunk<1>, &ForwardChunk<2>,
    &ForwardChunk<3>, &ForwardChunk<4>, &ForwardChunk<5>,
    &ForwardChunk<6>, &ForwardChunk<7>, &ForwardChunk<8>};

void ConvForwardPixels(const ConvShape& s, const float* in, const float* w,
                       float* out) {
  const int co_n = s.out_c;
  for (int b = 0; b < s.batch; ++b) {
    for (int oy = 0; oy < s.out_h; ++oy) {
      for (int ox = 0; ox < s.out_w; ++ox) {
        float* o = out + PixelOffset(b, oy, ox, s.out_h, s.out_w, co_n);
        int co0 = 0;
        for (; co_n - co0 >= 64; co0 += 64) {
          ForwardChunk<8>(s, in, w, o, b, oy, ox, co0);
        }
        if (const int nv = (co_n - co0) / 8; nv > 0) {
          kForwardChunks[nv](s, in, w, o, b, oy, ox, co0);
          co0 += 8 * nv;
        }
        if (co0 < co_n) ForwardTail(s, in, w, o, b, oy, ox, co0);
      }
    }
  }
}

void ConvForwardAvx2(const ConvShape& s, const float* in, const float* w,
                     float* out) {
  ConvForwardPixels(s, in, w, out);
}

// The data gradient is a convolution of d_out with the transposed filter
// bank, evaluated per input pixel so each pixel is written once.
void ConvBackwardDataAvx2(const ConvShape& s, const float* d_out,
                          const float* w, float* d_in) {
  const int ci_n = s.in_c, co_n = s.out_c, k = s.kernel;
  thread_local std::vector<float> wt;
  wt.resize(s.weight_size());
  for (int tap = 0; tap < k * k; ++tap) {
    const float* src = w + static_cast<std::size_t>(tap) * ci_n * co_n;
    float* dst = wt.data() + static_cast<std::size_t>(tap) * ci_n * co_n;
    for (int ci = 0; ci < ci_n; ++ci) {
      for (int co = 0; co < co_n; ++co) {
        dst[static_cast<std::size_t>(co) * ci_n + ci] = src[static_cast<std::size_t>(ci) * co_n + co];
      }
    }
  }
  struct Tap {
    const float* g;
    const float* wt;
  };
  std::vector<Tap> taps(static_cast<std::size_t>(k) * k);
  for (int b = 0; b < s.batch; ++b) {
    for (int iy = 0; iy < s.in_h; ++iy) {
      for (int ix = 0; ix < s.in_w; ++ix) {
        std::size_t nt = 0;
        for (int ky = 0; ky < k; ++ky) {
          const int ty = iy + s.pad_top - ky;
          if (ty < 0 || ty % s.stride != 0 || ty / s.stride >= s.out_h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int tx = ix + s.pad_left - kx;
            if (tx < 0 || tx % s.stride != 0 || tx / s.stride >= s.out_w) continue;
            taps[nt++] = {d_out + PixelOffset(b, ty / s.stride, tx / s.stride,
                                              s.out_h, s.out_w, co_n),
                          wt.data() + static_cast<std::size_t>(ky * k + kx) * ci_n * co_n};
          }
        }
        float* dx = d_in + PixelOffset(b, iy, ix, s.in_h, s.in_w, ci_n);
        int ci0 = 0;
        for (; ci_n - ci0 >= 32; ci0 += 32) {
          __m256 a0 = _mm256_setzero_ps(), a1 = _mm256_setzero_ps(),
                 a2 = _mm256_setzero_ps(), a3 = _mm256_setzero_ps();
          for (std::size_t t = 0; t < nt; ++t) {
            const float* g = taps[t].g;
            const float* wr = taps[t].wt + ci0;
            for (int co = 0; co < co_n; ++co, wr += ci_n) {
              const __m256 v = _mm256_broadcast_ss(g + co);
              a0 = _mm256_fmadd_ps(v, _mm256_loadu_ps(wr), a0);
              a1 = _mm256_fmadd_ps(v, _mm256_loadu_ps(wr + 8), a1);
              a2 = _mm256_fmadd_ps(v, _mm256_loadu_ps(wr + 16), a2);
              a3 = _mm256_fmadd_ps(v, _mm256_loadu_ps(wr + 24), a3);
            }
          }
          _mm256_storeu_ps(dx + ci0, a0);
          _mm256_storeu_ps(dx + ci0 + 8, a1);
          _mm256_storeu_ps(dx + ci0 + 16, a2);
          _mm256_storeu_ps(dx + ci0 + 24, a3);
        }
        for (; ci_n - ci0 >= 8; ci0 += 8) {
          __m256 a0 = _mm256_setzero_ps();
          for (std::size_t t = 0; t < nt; ++t) {
            const float* g = taps[t].g;
            const float* wr = taps[t].wt + ci0;
            for (int co = 0; co < co_n; ++co, wr += ci_n) {
              a0 = _mm256_fmadd_ps(_mm256_broadcast_ss(g + co),
                                   _mm256_loadu_ps(wr), a0);
            }
          }
          _mm256_storeu_ps(dx + ci0, a0);
        }
        for (int ci = ci0; ci < ci_n; ++ci) {
          float acc = 0.0f;
          for (std::size_t t = 0; t < nt; ++t) {
            const float* g = taps[t].g;
            const float* wr = taps[t].wt + ci;
            for (int co = 0; co < co_n; ++co) acc += g[co] * wr[static_cast<std::size_t>(co) * ci_n];
          }
          dx[ci] = acc;
        }
      }
    }
  }
}

// dw[tap][ci0 .. ci0+CB)[co0 .. co0+8NV) accumulated over every output pixel.
template <int CB, int NV>
void FilterBlock(const ConvShape& s, const float* in, const float* d_out,
                 float* dw_tap, int ky, int kx, int ci0, int co0) {
  __m256 acc[CB][NV];
  for (int c = 0; c < CB; ++c)
    for (int j = 0; j < NV; ++j) acc[c][j] = _mm256_setzero_ps();
  int oy0, oy1, ox0, ox1;
  TapRange(ky, s.stride, s.pad_top, s.in_h, s.out_h, &oy0, &oy1);
  TapRange(kx, s.stride, s.pad_left, s.in_w, s.out_w, &ox0, &ox1);
  const int ci_n = s.in_c, co_n = s.out_c;
  const std::size_t x_step = static_cast<std::size_t>(s.stride) * ci_n;
  for (int b = 0; b < s.batch; ++b) {
    for (int oy = oy0; oy < oy1; ++oy) {
      const int iy = oy * s.stride + ky - s.pad_top;
      const float* x = in + PixelOffset(b, iy, ox0 * s.stride + kx - s.pad_left,
                                        s.in_h, s.in_w, ci_n) + ci0;
      const float* g = d_out + PixelOffset(b, oy, ox0, s.out_h, s.out_w, co_n) + co0;
      for (int ox = ox0; ox < ox1; ++ox, x += x_step, g += co_n) {
        __m256 gv[NV];
        for (int j = 0; j < NV; ++j) gv[j] = _mm256_loadu_ps(g + 8 * j);
        for (int c = 0; c < CB; ++c) {
          const __m256 xv = _mm256_broadcast_ss(x + c);
          for (int j = 0; j < NV; ++j) acc[c][j] = _mm256_fmadd_ps(xv, gv[j], acc[c][j]);
        }
      }
    }
  }
  for (int c = 0; c < CB; ++c) {
    float* dr = dw_tap + static_cast<std::size_t>(ci0 + c) * co_n + co0;
    for (int j = 0; j < NV; ++j) _mm256_storeu_ps(dr + 8 * j, acc[c][j]);
  }
}

void FilterTail(const ConvShape& s, const float* in, const float* d_out,
                float* dw_tap, int ky, int kx, int ci_lo, int ci_hi, int co_lo,
                int co_hi) {
  int oy0, oy1, ox0, ox1;
  TapRange(ky, s.stride, s.pad_top, s.in_h, s.out_h, &oy0, &oy1);
  TapRange(kx, s.stride, s.pad_left, s.in_w, s.out_w, &ox0, &ox1);
  const int ci_n = s.in_c, co_n = s.out_c;
  for (int ci = ci_lo; ci < ci_hi; ++ci) {
    for (int co = co_lo; co < co_hi; ++co) {
      float acc = 0.0f;
      for (int b = 0; b < s.batch; ++b) {
        for (int oy = oy0; oy < oy1; ++oy) {
          const int iy = oy * s.stride + ky - s.pad_top;
          for (int ox = ox0; ox < ox1; ++ox) {
            const int ix = ox * s.stride + kx - s.pad_left;
            acc += in[PixelOffset(b, iy, ix, s.in_h, s.in_w, ci_n) + ci] *
                   d_out[PixelOffset(b, oy, ox, s.out_h, s.out_w, co_n) + co];
          }
        }
      }
      dw_tap[static_cast<std::size_t>(ci) * co_n + co] = acc;
    }
  }
}

template <int NV>
void FilterColumn(const ConvShape& s, const float* in, const float* d_out,
                  float* dw_tap, int ky, int kx, int co0) {
  int ci0 = 0;
  for (; s.in_c - ci0 >= 4; ci0 += 4) {
    FilterBlock<4, NV>(s, in, d_out, dw_tap, ky, kx, ci0, co0);
  }
  for (; ci0 < s.in_c; ++ci0) {
    FilterBlock<1, NV>(s, in, d_out, dw_tap, ky, kx, ci0, co0);
  }
}

void ConvBackwardFilterAvx2(const ConvShape& s, const float* in,
                            const float* d_out, float* d_w) {
  const int k = s.kernel, co_n = s.out_c;
  for (int ky = 0; ky < k; ++ky) {
    for (int kx = 0; kx < k; ++kx) {
      float* dw_tap = d_w + static_cast<std::size_t>(ky * k + kx) * s.in_c * co_n;
      int co0 = 0;
      for (; co_n - co0 >= 16; co0 += 16) {
        FilterColumn<2>(s, in, d_out, dw_tap, ky, kx, co0);
      }
      if (co_n - co0 >= 8) {
        FilterColumn<1>(s, in, d_out, dw_tap, ky, kx, co0);
        co0 += 8;
      }
      if (co0 < co_n) FilterTail(s, in, d_out, dw_tap, ky, kx, 0, s.in_c, co0, co_n);
    }
  }
}

void ScatterAddRowsAvx2(const float* src, int depth, const std::int32_t* cell,
                        const std::int32_t* order, std::size_t n, float* dst) {
  const int vec_end = depth & ~7;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = static_cast<std::size_t>(order[i]);
    const float* s = src + p * depth;
    float* d = dst + static_cast<std::size_t>(cell[p]) * depth;
    int c = 0;
    for (; c < vec_end; c += 8) {
      _mm256_storeu_ps(d + c, _mm256_add_ps(_mm256_loadu_ps(d + c),
                                            _mm256_loadu_ps(s + c)));
    }
    for (; c < depth; ++c) d[c] += s[c];
  }
}

void GatherRowsAvx2(const float* grid, int depth, const std::int32_t* cell,
                    std::size_t n, float* dst) {
  const int vec_end = depth & ~7;
  for (std::size_t i = 0; i < n; ++i) {
    float* d = dst + i * depth;
    if (cell[i] < 0) {
      std::fill(d, d + depth, 0.0f);
      continue;
    }
    const float* g = grid + static_cast<std::size_t>(cell[i]) * depth;
    int c = 0;
    for (; c < vec_end; c += 8) _mm256_storeu_ps(d + c, _mm256_loadu_ps(g + c));
    for (; c < depth; ++c) d[c] = g[c];
  }
}

}  // namespace

const KernelTable<float>* Avx2KernelsF32Compiled() {
  static const KernelTable<float> table{
      "avx2", &ConvForwardAvx2, &ConvBackwardDataAvx2, &ConvBackwardFilterAvx2,
      &ScatterAddRowsAvx2, &GatherRowsAvx2};
  return &table;
}

}  // namespace sceneflow::simd

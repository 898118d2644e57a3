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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "sceneflow/simd/kernels.h"

namespace sceneflow::simd {

#if defined(SCENEFLOW_HAVE_AVX2)
const KernelTable<float>* Avx2KernelsF32Compiled();
#endif

bool CpuSupportsAvx2Fma() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable<float>* Avx2KernelsF32() {
#if defined(SCENEFLOW_HAVE_AVX2)
  if (CpuSupportsAvx2Fma()) return Avx2KernelsF32Compiled();
#endif
  return nullptr;
}

namespace {

const KernelTable<float>* SelectFromEnvironment() {
  const char* env = std::getenv("SCENEFLOW_ISA");
  const std::string_view want = env ? env : "";
  if (want == "scalar") return &ScalarKernelsF32();
  if (const auto* avx2 = Avx2KernelsF32()) return avx2;
  return &ScalarKernelsF32();
}

std::atomic<const KernelTable<float>*>& Active() {
  static std::atomic<const KernelTable<float>*> active{SelectFromEnvironment()};
  return active;
}

}  // namespace

const KernelTable<float>& ActiveKernelsF32() { return *Active().load(); }

void SetActiveKernelsF32(const KernelTable<float>& table) { Active().store(&table); }

}  // namespace sceneflow::simd

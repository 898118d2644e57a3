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

#ifndef SCENEFLOW_FLOW_IO_H_
#define SCENEFLOW_FLOW_IO_H_

// "SFFL" flow-label files, little-endian:
//
//   char[4] "SFFL", u32 version (1), u32 frame_count
//   per frame: i64 timestamp_us, u32 n,
//              n x (f32 vx, f32 vy, f32 vz, u8 class_id, u8 valid)
//
// "SFEX" export files carry the same frames as float32 quadruples
// (vx, vy, vz, class) per point; invalid points use class 255:
//
//   char[4] "SFEX", u32 version (1), u32 frame_count
//   per frame: i64 timestamp_us, u32 n, n x f32x4

#include <string>
#include <string_view>
#include <vector>

#include "sceneflow/annotator.h"

namespace sceneflow {

inline constexpr std::string_view kFlowMagic = "SFFL";
inline constexpr std::string_view kExportMagic = "SFEX";
inline constexpr std::uint32_t kFlowVersion = 1;
inline constexpr float kExportInvalidClass = 255.0f;

std::string EncodeFlowLabels(const std::vector<FlowAnnotation>& frames);
std::vector<FlowAnnotation> DecodeFlowLabels(std::string_view bytes);
void WriteFlowLabels(const std::vector<FlowAnnotation>& frames,
                     const std::string& path);
std::vector<FlowAnnotation> ReadFlowLabels(const std::string& path);

std::string EncodeExport(const std::vector<FlowAnnotation>& frames);
// Invalid points come back with background class and zero flow: the
// exported sentinel does not retain either.
std::vector<FlowAnnotation> DecodeExport(std::string_view bytes);

}  // namespace sceneflow

#endif  // SCENEFLOW_FLOW_IO_H_

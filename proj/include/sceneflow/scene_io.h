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

#ifndef SCENEFLOW_SCENE_IO_H_
#define SCENEFLOW_SCENE_IO_H_

// "SFRS" run-segment files, little-endian:
//
//   char[4]  magic "SFRS"
//   u32      version (1)
//   u32      frame_count
//   per frame:
//     i64    timestamp_us
//     f64x16 ego pose, row-major 4x4
//     u32    n_points, then n_points x f32x5 (x, y, z, f0, f1)
//     u32    n_labels, then per label:
//            u64 track_id, u8 class_id, f32x7 (cx, cy, cz, l, w, h, heading)
//
// Points and boxes are stored as float32; a segment whose payload is already
// float32-representable reads back bit-identical.

#include <string>
#include <string_view>

#include "sceneflow/scene.h"

namespace sceneflow {

inline constexpr std::string_view kSegmentMagic = "SFRS";
inline constexpr std::uint32_t kSegmentVersion = 1;

std::string EncodeSegment(const RunSegment& segment);
RunSegment DecodeSegment(std::string_view bytes);

void WriteSegment(const RunSegment& segment, const std::string& path);
RunSegment ReadSegment(const std::string& path);

}  // namespace sceneflow

#endif  // SCENEFLOW_SCENE_IO_H_

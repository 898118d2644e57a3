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

#ifndef SCENEFLOW_SCENE_H_
#define SCENEFLOW_SCENE_H_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sceneflow/geom.h"

namespace sceneflow {

enum class ObjectClass : std::uint8_t {
  kBackground = 0,
  kVehicle = 1,
  kPedestrian = 2,
  kCyclist = 3,
};

inline constexpr int kNumClasses = 4;

std::string_view ClassName(ObjectClass c);
std::optional<ObjectClass> ParseClassName(std::string_view name);
bool IsObjectClass(ObjectClass c);

struct ObjectLabel {
  std::uint64_t track_id = 0;
  ObjectClass class_id = ObjectClass::kVehicle;
  Box3 box;  // in the frame's AV coordinates

  bool operator==(const ObjectLabel&) const = default;
};

struct Frame {
  std::int64_t timestamp_us = 0;
  Transform3 ego_pose;  // AV frame -> world frame
  std::vector<Point3> points;  // AV frame
  std::vector<ObjectLabel> labels;

  const ObjectLabel* FindTrack(std::uint64_t track_id) const;
};

bool SameFrame(const Frame& a, const Frame& b);

struct SegmentMeta {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

// An ordered run of frames. The meta block is in-memory provenance only; it
// is not part of the on-disk format, so equality compares frames.
struct RunSegment {
  std::vector<Frame> frames;
  SegmentMeta meta;

  bool operator==(const RunSegment& o) const;
};

// Checks frame-level invariants: >= 1 frame, strictly increasing timestamps,
// finite points, valid boxes and class ids, unique track ids per frame.
void ValidateSegment(const RunSegment& segment);

// Uniform sample of k whole segments without replacement, kept in their
// original order. Deterministic per seed.
std::vector<std::size_t> SubsampleIndices(std::size_t n, std::size_t k,
                                          std::uint64_t seed);
std::vector<RunSegment> SubsampleSegments(
    const std::vector<RunSegment>& segments, std::size_t k, std::uint64_t seed);

}  // namespace sceneflow

#endif  // SCENEFLOW_SCENE_H_

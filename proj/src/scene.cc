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

#include "sceneflow/scene.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include "sceneflow/error.h"

namespace sceneflow {

std::string_view ClassName(ObjectClass c) {
  switch (c) {
    case ObjectClass::kBackground: return "background";
    case ObjectClass::kVehicle: return "vehicle";
    case ObjectClass::kPedestrian: return "pedestrian";
    case ObjectClass::kCyclist: return "cyclist";
  }
  return "unknown";
}

std::optional<ObjectClass> ParseClassName(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i) {
    auto c = static_cast<ObjectClass>(i);
    if (ClassName(c) == name) return c;
  }
  return std::nullopt;
}

bool IsObjectClass(ObjectClass c) {
  return c == ObjectClass::kVehicle || c == ObjectClass::kPedestrian ||
         c == ObjectClass::kCyclist;
}

const ObjectLabel* Frame::FindTrack(std::uint64_t track_id) const {
  for (const auto& l : labels) {
    if (l.track_id == track_id) return &l;
  }
  return nullptr;
}

bool SameFrame(const Frame& a, const Frame& b) {
  return a.timestamp_us == b.timestamp_us &&
         a.ego_pose.ToRowMajor4x4() == b.ego_pose.ToRowMajor4x4() &&
         a.points == b.points && a.labels == b.labels;
}

bool RunSegment::operator==(const RunSegment& o) const {
  if (frames.size() != o.frames.size()) return false;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!SameFrame(frames[i], o.frames[i])) return false;
  }
  return true;
}

void ValidateSegment(const RunSegment& segment) {
  if (segment.frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "segment has no frames");
  }
  for (std::size_t i = 0; i < segment.frames.size(); ++i) {
    const Frame& f = segment.frames[i];
    if (i > 0 && f.timestamp_us <= segment.frames[i - 1].timestamp_us) {
      throw Error(ErrorCode::kTimestampOrder,
                  "frame " + std::to_string(i) + " timestamp does not increase");
    }
    for (const Point3& p : f.points) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
          !std::isfinite(p.f0) || !std::isfinite(p.f1)) {
        throw Error(ErrorCode::kNonFinite,
                    "frame " + std::to_string(i) + " has a non-finite point");
      }
    }
    std::unordered_set<std::uint64_t> seen;
    for (const ObjectLabel& l : f.labels) {
      if (!IsObjectClass(l.class_id)) {
        throw Error(ErrorCode::kInvalidArgument, "label has invalid class id");
      }
      if (!seen.insert(l.track_id).second) {
        throw Error(ErrorCode::kInvalidArgument,
                    "duplicate track id " + std::to_string(l.track_id));
      }
      ValidateBox(l.box);
    }
  }
}

std::vector<std::size_t> SubsampleIndices(std::size_t n, std::size_t k,
                                          std::uint64_t seed) {
  if (k > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot sample " + std::to_string(k) + " of " +
                    std::to_string(n) + " segments");
  }
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> picked;
  picked.reserve(k);
  std::mt19937_64 rng(seed);
  // Selection sampling over a forward range keeps the input order.
  std::sample(all.begin(), all.end(), std::back_inserter(picked), k, rng);
  return picked;
}

std::vector<RunSegment> SubsampleSegments(
    const std::vector<RunSegment>& segments, std::size_t k, std::uint64_t seed) {
  std::vector<RunSegment> out;
  for (std::size_t i : SubsampleIndices(segments.size(), k, seed)) {
    out.push_back(segments[i]);
  }
  return out;
}

}  // namespace sceneflow

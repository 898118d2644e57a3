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

#ifndef SCENEFLOW_ANNOTATOR_H_
#define SCENEFLOW_ANNOTATOR_H_

// Per-point flow labels bootstrapped from tracked boxes. For a point p0 of
// the current frame inside object box T0, the box pose one frame earlier,
// re-expressed in the current AV frame (T'-1), gives
//
//   T_delta = T'-1 * inverse(T0),   flow = (p0 - T_delta p0) / dt.
//
// Points outside every box are background with zero flow. Points on objects
// without a previous-frame label are marked invalid.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sceneflow/scene.h"

namespace sceneflow {

struct FlowLabel {
  Vec3 flow = Vec3::Zero();  // m/s, current AV frame
  ObjectClass class_id = ObjectClass::kBackground;
  bool valid = true;

  bool operator==(const FlowLabel&) const = default;
};

struct FlowAnnotation {
  std::int64_t timestamp_us = 0;
  std::vector<FlowLabel> points;

  bool operator==(const FlowAnnotation&) const = default;
};

struct AnnotationConfig {
  // When false, object motion is measured relative to the moving sensor
  // (the previous box pose is not re-expressed in the current AV frame).
  bool compensate_ego = true;
  double stationary_stat_threshold = 0.1;  // m/s, dataset statistics only
  std::optional<double> ground_removal;    // z above ground level, meters
  double ground_level = 0.0;
  double box_margin = 0.0;
};

void ValidateAnnotationConfig(const AnnotationConfig& cfg);

// Previous-frame points re-expressed in the current AV frame.
std::vector<Vec3> EgoCompensate(const Frame& prev, const Frame& curr);

// Maps a current-frame point of the object to where it was one frame
// earlier, in current AV coordinates. Throws kTrackMismatch when the labels
// belong to different tracks.
Transform3 ObjectDeltaTransform(const ObjectLabel& label_prev,
                                const ObjectLabel& label_curr,
                                const Transform3& ego_prev,
                                const Transform3& ego_curr,
                                bool compensate_ego = true);

FlowAnnotation AnnotateFrame(const Frame& prev, const Frame& curr,
                             const AnnotationConfig& cfg = {});

// Annotations for frames 1..n-1 of a segment, fanned out over `jobs` threads.
std::vector<FlowAnnotation> AnnotateSegment(const RunSegment& segment,
                                            const AnnotationConfig& cfg = {},
                                            int jobs = 1);

enum class AblationMode { kStationary, kIgnored };

// kStationary relabels matching points as zero-flow valid background;
// kIgnored marks them invalid. Background may not be ablated.
FlowAnnotation AblateLabels(const FlowAnnotation& ann,
                            const std::vector<ObjectClass>& classes,
                            AblationMode mode);

// Keeps exactly the points with z > ground_level + z_threshold.
Frame RemoveGround(const Frame& frame, double z_threshold,
                   double ground_level = 0.0);

struct DownsampledFrame {
  Frame frame;
  std::vector<std::size_t> source_index;  // kept point -> original index
};

// Uniform keep of round(fraction * N) points, original order preserved.
DownsampledFrame DownsamplePoints(const Frame& frame, double fraction,
                                  std::uint64_t seed);

}  // namespace sceneflow

#endif  // SCENEFLOW_ANNOTATOR_H_

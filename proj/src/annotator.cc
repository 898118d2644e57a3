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

#include "sceneflow/annotator.h"

#include <cmath>
#include <limits>

#include "sceneflow/error.h"
#include "sceneflow/parallel.h"

namespace sceneflow {
namespace {

struct BoxTest {
  const ObjectLabel* label;
  Transform3 av_to_box;
  Vec3 half;
  double reach2;  // squared bounding radius, cheap reject
};


}  // namespace

void ValidateAnnotationConfig(const AnnotationConfig& cfg) {
  if (!(cfg.stationary_stat_threshold >= 0.0) || !(cfg.box_margin >= 0.0)) {
    throw Error(ErrorCode::kConfig, "annotation thresholds must be >= 0");
  }
  if (cfg.ground_removal && !std::isfinite(*cfg.ground_removal)) {
    throw Error(ErrorCode::kConfig, "ground removal threshold must be finite");
  }
}

std::vector<Vec3> EgoCompensate(const Frame& prev, const Frame& curr) {
  const Transform3 prev_to_curr = Compose(Invert(curr.ego_pose), prev.ego_pose);
  std::vector<Vec3> out;
  out.reserve(prev.points.size());
  for (const Point3& p : prev.points) out.push_back(Apply(prev_to_curr, p.position()));
  return out;
}

Transform3 ObjectDeltaTransform(const ObjectLabel& label_prev,
                                const ObjectLabel& label_curr,
                                const Transform3& ego_prev,
                                const Transform3& ego_curr,
                                bool compensate_ego) {
  if (label_prev.track_id != label_curr.track_id) {
    throw Error(ErrorCode::kTrackMismatch,
                std::to_string(label_prev.track_id) + " vs " +
                    std::to_string(label_curr.track_id));
  }
  const Transform3 pose_curr = BoxPose(label_curr.box);
  Transform3 pose_prev = BoxPose(label_prev.box);
  if (compensate_ego) {
    pose_prev = Compose(Compose(Invert(ego_curr), ego_prev), pose_prev);
  }
  return Compose(pose_prev, Invert(pose_curr));
}

FlowAnnotation AnnotateFrame(const Frame& prev, const Frame& curr,
                             const AnnotationConfig& cfg) {
  ValidateAnnotationConfig(cfg);
  if (curr.timestamp_us <= prev.timestamp_us) {
    throw Error(ErrorCode::kTimestampOrder,
                "current timestamp must follow previous");
  }
  const double dt = static_cast<double>(curr.timestamp_us - prev.timestamp_us) * 1e-6;

  std::vector<BoxTest> boxes;
  std::vector<std::optional<Transform3>> deltas;
  boxes.reserve(curr.labels.size());
  for (const ObjectLabel& l : curr.labels) {
    const Vec3 half = 0.5 * l.box.dims + Vec3::Constant(cfg.box_margin);
    boxes.push_back({&l, Invert(BoxPose(l.box)), half, half.squaredNorm()});
    if (const ObjectLabel* before = prev.FindTrack(l.track_id)) {
      deltas.emplace_back(ObjectDeltaTransform(*before, l, prev.ego_pose,
                                               curr.ego_pose, cfg.compensate_ego));
    } else {
      deltas.emplace_back(std::nullopt);
    }
  }

  FlowAnnotation ann;
  ann.timestamp_us = curr.timestamp_us;
  ann.points.resize(curr.points.size());
  for (std::size_t i = 0; i < curr.points.size(); ++i) {
    const Vec3 p = curr.points[i].position();
    int owner = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const BoxTest& box = boxes[b];
      const double d2 = (p - box.label->box.center).squaredNorm();
      if (d2 > box.reach2) continue;
      const Vec3 local = Apply(box.av_to_box, p);
      if (std::abs(local.x()) > box.half.x() ||
          std::abs(local.y()) > box.half.y() ||
          std::abs(local.z()) > box.half.z()) {
        continue;
      }
      // Overlaps go to the nearest center, then the smaller track id.
      if (owner < 0 || d2 < best_d2 ||
          (d2 == best_d2 &&
           box.label->track_id < boxes[owner].label->track_id)) {
        owner = static_cast<int>(b);
        best_d2 = d2;
      }
    }
    FlowLabel& out = ann.points[i];
    if (owner < 0) continue;  // background, zero flow, valid
    out.class_id = boxes[owner].label->class_id;
    const auto& delta = deltas[owner];
    if (!delta) {
      out.valid = false;
      continue;
    }
    out.flow = (p - Apply(*delta, p)) / dt;
  }
  return ann;
}

std::vector<FlowAnnotation> AnnotateSegment(const RunSegment& segment,
                                            const AnnotationConfig& cfg,
                                            int jobs) {
  const std::size_t n = segment.frames.size();
  std::vector<FlowAnnotation> out(n > 0 ? n - 1 : 0);
  ParallelFor(out.size(), jobs, [&](std::size_t i) {
    out[i] = AnnotateFrame(segment.frames[i], segment.frames[i + 1], cfg);
  });
  return out;
}

FlowAnnotation AblateLabels(const FlowAnnotation& ann,
                            const std::vector<ObjectClass>& classes,
                            AblationMode mode) {
  bool ablate[kNumClasses] = {};
  for (ObjectClass c : classes) {
    if (!IsObjectClass(c)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "only object classes can be ablated");
    }
    ablate[static_cast<int>(c)] = true;
  }
  FlowAnnotation out = ann;
  for (FlowLabel& l : out.points) {
    if (!ablate[static_cast<int>(l.class_id)]) continue;
    if (mode == AblationMode::kStationary) {
      l = FlowLabel{};
    } else {
      l.valid = false;
    }
  }
  return out;
}

Frame RemoveGround(const Frame& frame, double z_threshold, double ground_level) {
  if (!std::isfinite(z_threshold)) {
    throw Error(ErrorCode::kInvalidArgument, "ground threshold must be finite");
  }
  Frame out = frame;
  out.points.clear();
  const double cut = ground_level + z_threshold;
  for (const Point3& p : frame.points) {
    if (p.z > cut) out.points.push_back(p);
  }
  return out;
}

DownsampledFrame DownsamplePoints(const Frame& frame, double fraction,
                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "fraction must be in (0, 1]");
  }
  const std::size_t n = frame.points.size();
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  DownsampledFrame out;
  out.source_index = SubsampleIndices(n, keep, seed);
  out.frame = frame;
  out.frame.points.clear();
  out.frame.points.reserve(keep);
  for (std::size_t i : out.source_index) out.frame.points.push_back(frame.points[i]);
  return out;
}

}  // namespace sceneflow

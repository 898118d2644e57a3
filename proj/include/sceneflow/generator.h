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

#ifndef SCENEFLOW_GENERATOR_H_
#define SCENEFLOW_GENERATOR_H_

// Synthetic scenes with analytically known motion. Objects and the ego
// vehicle move with constant world-frame velocity and constant yaw rate
// about their own centers, so every surface point has a closed-form
// trajectory. Ground and clutter points are world-static. All samples are
// drawn once per segment: each frame sees the same static points and the same
// body points on every object, from that frame's AV pose.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sceneflow/geom.h"
#include "sceneflow/scene.h"

namespace sceneflow {

struct ObjectSpec {
  ObjectClass class_id = ObjectClass::kVehicle;
  Vec3 dims = Vec3(4.5, 2.0, 1.6);
  Vec3 position = Vec3::Zero();  // box center at t = 0, world frame
  double heading = 0.0;
  Vec3 velocity = Vec3::Zero();  // m/s, world frame
  double yaw_rate = 0.0;         // rad/s about the box center
  int spawn_frame = 0;           // live on [spawn_frame, despawn_frame)
  int despawn_frame = 1 << 30;
  int surface_points = 100;
};

struct EgoSpec {
  Vec3 position = Vec3::Zero();
  double heading = 0.0;
  Vec3 velocity = Vec3::Zero();
  double yaw_rate = 0.0;
};

struct GroundSpec {
  double extent = 0.0;   // side of the square patch centered at the origin
  double density = 0.0;  // points per m^2
  double z = 0.0;
};

struct ClutterSpec {
  int count = 0;
  double extent = 0.0;
  double height = 3.0;  // clutter z spans (ground.z, ground.z + height]
};

struct SceneSpec {
  int duration_frames = 20;
  std::int64_t frame_period_us = 100000;
  std::vector<ObjectSpec> objects;
  EgoSpec ego;
  GroundSpec ground;
  ClutterSpec clutter;
  std::uint64_t seed = 0;
  // Round point and box payloads to float32 so a written segment reads back
  // bit-identical.
  bool float32_payload = true;
};

void ValidateSpec(const SceneSpec& spec);

std::string SceneSpecToText(const SceneSpec& spec);
SceneSpec SceneSpecFromText(std::string_view text);
SceneSpec LoadSceneSpec(const std::string& path);
std::uint64_t SpecHash(const SceneSpec& spec);

std::int64_t FrameTimestampUs(const SceneSpec& spec, int frame_index);
Transform3 EgoPoseAt(const EgoSpec& ego, double t_seconds);
Transform3 ObjectPoseAt(const ObjectSpec& object, double t_seconds);
bool ObjectLive(const ObjectSpec& object, int frame_index);

// Where a generated point came from: a static world sample (object < 0) or a
// body-frame offset on spec.objects[object].
struct PointSource {
  int object = -1;
  Vec3 body = Vec3::Zero();
};

// Static samples closer than this to any footprint an object occupies during
// the segment are redrawn, so no world-static point ever falls inside a label
// box and every frame carries the same static set.
inline constexpr double kStaticClearance = 0.2;

Frame GenerateFrame(const SceneSpec& spec, int frame_index,
                     std::vector<PointSource>* sources = nullptr);
RunSegment Generate(const SceneSpec& spec);

struct OracleFlow {
  Vec3 flow = Vec3::Zero();  // m/s, current AV frame
  ObjectClass class_id = ObjectClass::kBackground;
  bool valid = true;
};

// Secant velocity of every point of frame `frame_index`, computed directly
// from the continuous trajectories (never from labels).
std::vector<OracleFlow> OracleFlowForFrame(const SceneSpec& spec,
                                           int frame_index);

// Randomized street scene: a moving or parked ego vehicle, ground, static
// clutter and vehicles, pedestrians and cyclists with class-typical sizes
// and speeds. Objects are placed around the ego position at mid-segment and
// kept apart along their whole trajectories.
struct ClassMotion {
  int count = 0;
  Vec3 dims = Vec3::Ones();
  double speed_mean = 0.0;       // m/s, moving objects
  double speed_stddev = 0.0;
  double stationary_fraction = 0.0;
  int surface_points = 100;
};

struct UrbanSceneOptions {
  int duration_frames = 11;
  ClassMotion vehicles{4, Vec3(4.5, 2.0, 1.6), 5.6, 1.5, 0.25, 300};
  ClassMotion pedestrians{4, Vec3(0.8, 0.8, 1.8), 1.3, 0.3, 0.25, 80};
  ClassMotion cyclists{3, Vec3(1.8, 0.8, 1.7), 3.8, 0.8, 0.25, 120};
  double ego_speed_max = 8.0;  // uniform in [0, max]
  double ego_yaw_rate_max = 0.2;
  double placement_radius = 11.0;
  double ground_extent = 48.0;
  double ground_density = 3.0;
  int clutter_count = 400;
  double clutter_extent = 40.0;
  // Every object gets at least this much free space along its trajectory.
  double separation = 0.75;
};

SceneSpec SampleUrbanScene(const UrbanSceneOptions& options, std::uint64_t seed);

}  // namespace sceneflow

#endif  // SCENEFLOW_GENERATOR_H_

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

#include "sceneflow/generator.h"

#include <gtest/gtest.h>

#include <cmath>

#include "sceneflow/error.h"
#include "sceneflow/scene_io.h"

namespace sceneflow {
namespace {

SceneSpec StaticWorld() {
  SceneSpec s;
  s.duration_frames = 5;
  s.ground = {30.0, 0.5, 0.0};
  s.clutter = {50, 30.0, 3.0};
  s.seed = 3;
  return s;
}

SceneSpec Busy(std::uint64_t seed) {
  SceneSpec s = StaticWorld();
  s.duration_frames = 8;
  s.float32_payload = false;
  s.ego.velocity = Vec3(4.0, -1.0, 0.0);
  s.ego.yaw_rate = 0.3;
  s.ego.heading = 0.7;
  ObjectSpec car;
  car.position = Vec3(8, 3, 0.8);
  car.velocity = Vec3(-5, 1, 0);
  car.yaw_rate = 0.4;
  car.heading = 1.0;
  ObjectSpec ped;
  ped.class_id = ObjectClass::kPedestrian;
  ped.dims = Vec3(0.8, 0.8, 1.8);
  ped.position = Vec3(-6, -4, 0.9);
  ped.velocity = Vec3(1.2, 0.3, 0);
  ped.spawn_frame = 3;
  ped.despawn_frame = 6;
  s.objects = {car, ped};
  s.seed = seed;
  return s;
}

TEST(Generate, StaticWorldFramesAreIdentical) {
  const RunSegment seg = Generate(StaticWorld());
  for (std::size_t k = 1; k < seg.frames.size(); ++k) {
    EXPECT_EQ(seg.frames[k].points, seg.frames[0].points);
    EXPECT_EQ(seg.frames[k].timestamp_us, static_cast<std::int64_t>(k) * 100000);
  }
}

TEST(Generate, VehicleAdvancesHalfMeterPerFrame) {
  SceneSpec s = StaticWorld();
  ObjectSpec car;
  car.position = Vec3(0, 5, 0.8);
  car.velocity = Vec3(5, 0, 0);
  s.objects.push_back(car);
  const RunSegment seg = Generate(s);
  for (std::size_t k = 1; k < seg.frames.size(); ++k) {
    const Vec3 step = seg.frames[k].labels[0].box.center - seg.frames[k - 1].labels[0].box.center;
    EXPECT_NEAR(step.x(), 0.5, 1e-6);
    EXPECT_NEAR(step.y(), 0.0, 1e-6);
  }
}

TEST(Generate, DeterministicBytes) {
  EXPECT_EQ(EncodeSegment(Generate(Busy(5))), EncodeSegment(Generate(Busy(5))));
  EXPECT_NE(EncodeSegment(Generate(Busy(5))), EncodeSegment(Generate(Busy(6))));
}

TEST(Generate, SingleFrameMatchesSegment) {
  const SceneSpec s = Busy(1);
  const RunSegment seg = Generate(s);
  for (int k = 0; k < s.duration_frames; ++k) {
    EXPECT_TRUE(SameFrame(GenerateFrame(s, k), seg.frames[k]));
  }
}

TEST(Generate, PointCountConservation) {
  const SceneSpec s = Busy(2);
  const RunSegment seg = Generate(s);
  const std::size_t statics = static_cast<std::size_t>(
      std::llround(s.ground.density * s.ground.extent * s.ground.extent) + s.clutter.count);
  for (int k = 0; k < s.duration_frames; ++k) {
    std::size_t expected = statics;
    for (const ObjectSpec& o : s.objects)
      if (ObjectLive(o, k)) expected += o.surface_points;
    EXPECT_EQ(seg.frames[k].points.size(), expected);
    EXPECT_EQ(seg.frames[k].labels.size(), k >= 3 && k < 6 ? 2u : 1u);
  }
}

TEST(Generate, GroundIsWorldStatic) {
  const SceneSpec s = Busy(3);
  const RunSegment seg = Generate(s);
  const std::size_t ground =
      static_cast<std::size_t>(std::llround(s.ground.density * s.ground.extent * s.ground.extent));
  for (std::size_t i = 0; i < ground; ++i) {
    const Vec3 w0 = Apply(seg.frames[0].ego_pose, seg.frames[0].points[i].position());
    EXPECT_NEAR(w0.z(), 0.0, 1e-9);
    for (std::size_t k = 1; k < seg.frames.size(); ++k) {
      const Vec3 wk = Apply(seg.frames[k].ego_pose, seg.frames[k].points[i].position());
      EXPECT_LE((wk - w0).norm(), 1e-9);
    }
  }
}

TEST(Generate, ObjectPointsFollowPoseDelta) {
  const SceneSpec s = Busy(4);
  std::vector<PointSource> src0, src1;
  for (int k = 1; k < s.duration_frames; ++k) {
    const Frame prev = GenerateFrame(s, k - 1, &src0);
    const Frame curr = GenerateFrame(s, k, &src1);
    const double t0 = k * 0.1, t1 = (k - 1) * 0.1;
    for (std::size_t i = 0; i < curr.points.size(); ++i) {
      const PointSource& ps = src1[i];
      if (ps.object < 0 || !ObjectLive(s.objects[ps.object], k - 1)) continue;
      const ObjectSpec& o = s.objects[ps.object];
      // The object's frame-to-frame delta in world coordinates, carried to
      // the previous AV frame.
      const Transform3 delta = ObjectPoseAt(o, t1) * Invert(ObjectPoseAt(o, t0));
      const Vec3 world_now = Apply(curr.ego_pose, curr.points[i].position());
      const Vec3 prev_av = Apply(Invert(prev.ego_pose), Apply(delta, world_now));
      // The same body sample appears in the previous frame at that position.
      bool found = false;
      for (std::size_t j = 0; j < prev.points.size() && !found; ++j) {
        found = src0[j].object == ps.object && src0[j].body == ps.body &&
                (prev.points[j].position() - prev_av).norm() <= 1e-9;
      }
      EXPECT_TRUE(found) << "frame " << k << " point " << i;
    }
  }
}

TEST(Generate, PointsBelongOnlyToTheirOwnBox) {
  const SceneSpec s = Busy(5);
  std::vector<PointSource> src;
  for (int k = 0; k < s.duration_frames; ++k) {
    const Frame f = GenerateFrame(s, k, &src);
    for (std::size_t i = 0; i < f.points.size(); ++i) {
      for (const ObjectLabel& l : f.labels) {
        const bool own = src[i].object == static_cast<int>(l.track_id) - 1;
        if (own) {
          EXPECT_TRUE(Contains(l.box, f.points[i].position(), 1e-9));
        } else {
          EXPECT_FALSE(Contains(l.box, f.points[i].position(), kStaticClearance - 1e-9));
        }
      }
    }
  }
}

TEST(Generate, LaserFeaturesInUnitRange) {
  for (const Point3& p : Generate(Busy(6)).frames[0].points) {
    EXPECT_GE(p.f0, 0.0);
    EXPECT_LE(p.f0, 1.0);
    EXPECT_GE(p.f1, 0.0);
    EXPECT_LE(p.f1, 1.0);
  }
}

TEST(Oracle, StaticWorldIsExactlyZero) {
  SceneSpec s = StaticWorld();
  s.ego.velocity = Vec3(7, 2, 0);
  s.ego.yaw_rate = -0.5;
  for (int k = 1; k < s.duration_frames; ++k) {
    for (const OracleFlow& f : OracleFlowForFrame(s, k)) {
      EXPECT_EQ(f.flow, Vec3::Zero());
      EXPECT_TRUE(f.valid);
      EXPECT_EQ(f.class_id, ObjectClass::kBackground);
    }
  }
}

TEST(Oracle, RigidTranslation) {
  SceneSpec s = StaticWorld();
  s.float32_payload = false;
  ObjectSpec car;
  car.position = Vec3(3, 3, 0.8);
  car.velocity = Vec3(2, 0, 0);
  s.objects.push_back(car);
  const auto flows = OracleFlowForFrame(s, 2);
  for (const OracleFlow& f : flows) {
    if (f.class_id != ObjectClass::kVehicle) continue;
    EXPECT_NEAR(f.flow.x(), 2.0, 1e-9);
    EXPECT_NEAR(f.flow.y(), 0.0, 1e-9);
    EXPECT_NEAR(f.flow.z(), 0.0, 1e-9);
  }
}

TEST(Oracle, RotationAboutCenter) {
  // Body offset (1, 0, 0) at 1 rad/s: p_-1 = R(-0.1) p_0.
  const double dt = 0.1;
  const Vec3 p0(1, 0, 0);
  const Vec3 pm1 = Apply(Transform3::Yaw(-dt), p0);
  const Vec3 flow = (p0 - pm1) / dt;
  EXPECT_NEAR(flow.x(), 0.0500, 5e-5);
  EXPECT_NEAR(flow.y(), 0.9983, 5e-5);

  SceneSpec s = StaticWorld();
  s.float32_payload = false;
  s.ground.density = 0;
  s.clutter.count = 0;
  ObjectSpec spin;
  spin.dims = Vec3(2.02, 2.02, 2.0);
  spin.position = Vec3(0, 0, 1);
  spin.yaw_rate = 1.0;
  spin.surface_points = 400;
  s.objects.push_back(spin);
  std::vector<PointSource> src;
  GenerateFrame(s, 1, &src);
  const auto flows = OracleFlowForFrame(s, 1);
  for (std::size_t i = 0; i < flows.size(); ++i) {
    // Velocity of a rigidly rotating point, secant form.
    const Vec3 b = src[i].body;
    const Transform3 now = ObjectPoseAt(spin, 0.1), before = ObjectPoseAt(spin, 0.0);
    const Vec3 expected = (Apply(now, b) - Apply(before, b)) / dt;
    EXPECT_LE((flows[i].flow - expected).norm(), 1e-9);
  }
}

TEST(Oracle, SpawnedObjectsAreInvalid) {
  const SceneSpec s = Busy(7);
  const auto flows = OracleFlowForFrame(s, 3);
  std::size_t invalid = 0;
  for (const OracleFlow& f : flows) {
    if (!f.valid) {
      ++invalid;
      EXPECT_EQ(f.class_id, ObjectClass::kPedestrian);
    }
  }
  EXPECT_EQ(invalid, static_cast<std::size_t>(s.objects[1].surface_points));
  for (const OracleFlow& f : OracleFlowForFrame(s, 4)) EXPECT_TRUE(f.valid);
}

TEST(Oracle, NeedsPreviousFrame) {
  EXPECT_THROW(OracleFlowForFrame(StaticWorld(), 0), Error);
}

TEST(Spec, TextRoundTrip) {
  const SceneSpec s = Busy(8);
  const SceneSpec back = SceneSpecFromText(SceneSpecToText(s));
  EXPECT_EQ(SceneSpecToText(back), SceneSpecToText(s));
  EXPECT_EQ(SpecHash(back), SpecHash(s));
  EXPECT_EQ(EncodeSegment(Generate(back)), EncodeSegment(Generate(s)));
}

TEST(Spec, RejectsBadInput) {
  EXPECT_THROW(SceneSpecFromText("duration_frames = 0\n"), Error);
  EXPECT_THROW(SceneSpecFromText("bogus_key = 1\n"), Error);
  EXPECT_THROW(SceneSpecFromText("[object]\ndims = 1 0 1\n"), Error);
  EXPECT_THROW(SceneSpecFromText("[object]\nspawn = 4\ndespawn = 4\n"), Error);
  EXPECT_THROW(SceneSpecFromText("[ground]\ndensity = -1\n"), Error);
  SceneSpec s;
  s.objects.push_back(ObjectSpec{});
  s.objects.back().dims = Vec3(0, 1, 1);
  EXPECT_THROW(ValidateSpec(s), Error);
}

TEST(UrbanScene, DeterministicAndSeparated) {
  UrbanSceneOptions o;
  const SceneSpec a = SampleUrbanScene(o, 17), b = SampleUrbanScene(o, 17);
  EXPECT_EQ(SceneSpecToText(a), SceneSpecToText(b));
  EXPECT_NE(SceneSpecToText(a), SceneSpecToText(SampleUrbanScene(o, 18)));
  EXPECT_GE(a.objects.size(), 8u);
  // No two labels overlap in any frame.
  const RunSegment seg = Generate(a);
  for (const Frame& f : seg.frames) {
    for (const Point3& p : f.points) {
      int inside = 0;
      for (const ObjectLabel& l : f.labels) inside += Contains(l.box, p.position(), 1e-4);
      EXPECT_LE(inside, 1);
    }
  }
}

}  // namespace
}  // namespace sceneflow

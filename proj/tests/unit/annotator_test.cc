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

#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "sceneflow/error.h"
#include "sceneflow/flow_io.h"
#include "sceneflow/generator.h"

namespace sceneflow {
namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

ObjectLabel Label(std::uint64_t track, ObjectClass c, Vec3 center, Vec3 dims, double heading = 0) {
  ObjectLabel l;
  l.track_id = track;
  l.class_id = c;
  l.box.center = center;
  l.box.dims = dims;
  l.box.heading = heading;
  return l;
}

Frame MakeFrame(std::int64_t ts, std::vector<Vec3> points, std::vector<ObjectLabel> labels,
                const Transform3& pose = Transform3()) {
  Frame f;
  f.timestamp_us = ts;
  f.ego_pose = pose;
  for (const Vec3& p : points) f.points.push_back({p.x(), p.y(), p.z(), 0.5, 0.5});
  f.labels = std::move(labels);
  return f;
}

double Distance(const Transform3& a, const Transform3& b) {
  return (a.rotation() - b.rotation()).norm() + (a.translation() - b.translation()).norm();
}

TEST(EgoCompensate, IdenticalPosesLeavePointsUnchanged) {
  const Transform3 pose = Transform3::Yaw(0.4, Vec3(3, 1, 0));
  const Frame prev = MakeFrame(0, {Vec3(1, 2, 3), Vec3(-4, 0, 1)}, {}, pose);
  const Frame curr = MakeFrame(100000, {}, {}, pose);
  const auto out = EgoCompensate(prev, curr);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_LE((out[0] - Vec3(1, 2, 3)).norm(), 1e-12);
  EXPECT_LE((out[1] - Vec3(-4, 0, 1)).norm(), 1e-12);
}

TEST(EgoCompensate, EgoAdvanceShiftsPointsBack) {
  const Frame prev = MakeFrame(0, {Vec3::Zero()}, {});
  const Frame curr = MakeFrame(100000, {}, {}, Transform3::Translation(1, 0, 0));
  EXPECT_LE((EgoCompensate(prev, curr)[0] - Vec3(-1, 0, 0)).norm(), 1e-12);
}

TEST(EgoCompensate, WorldPositionPreserved) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 200; ++i) {
    const Transform3 a = Transform3::Yaw(u(rng), Vec3(u(rng), u(rng), u(rng)));
    const Transform3 b = Transform3::Yaw(u(rng), Vec3(u(rng), u(rng), u(rng)));
    const Vec3 p(u(rng), u(rng), u(rng));
    const Frame prev = MakeFrame(0, {p}, {}, a);
    const Frame curr = MakeFrame(1, {}, {}, b);
    EXPECT_LE((Apply(b, EgoCompensate(prev, curr)[0]) - Apply(a, p)).norm(), 1e-9);
  }
}

TEST(ObjectDelta, Examples) {
  const ObjectLabel l0 = Label(1, ObjectClass::kVehicle, Vec3(5, 0, 1), Vec3(4, 2, 2));
  const Transform3 id;
  EXPECT_LE(Distance(ObjectDeltaTransform(l0, l0, id, id), id), 1e-12);

  ObjectLabel moved = l0;
  moved.box.center.x() += 0.2;
  const Transform3 d = ObjectDeltaTransform(l0, moved, id, id);
  EXPECT_LE((d.translation() - Vec3(-0.2, 0, 0)).norm(), 1e-12);
  EXPECT_LE((d.rotation() - Mat3::Identity()).norm(), 1e-12);

  // Static object seen from an ego that advanced 1 m: the label is 1 m
  // closer in the current frame.
  ObjectLabel seen = l0;
  seen.box.center.x() -= 1.0;
  const Transform3 e = ObjectDeltaTransform(l0, seen, id, Transform3::Translation(1, 0, 0));
  EXPECT_LE(Distance(e, id), 1e-12);
  const Transform3 raw =
      ObjectDeltaTransform(l0, seen, id, Transform3::Translation(1, 0, 0), false);
  EXPECT_LE((raw.translation() - Vec3(1, 0, 0)).norm(), 1e-12);

  ObjectLabel other = l0;
  other.track_id = 2;
  EXPECT_EQ(CodeOf([&] { ObjectDeltaTransform(l0, other, id, id); }), ErrorCode::kTrackMismatch);
}

TEST(AnnotateFrame, StaticSceneIsAllZero) {
  const auto label = Label(1, ObjectClass::kVehicle, Vec3(0, 0, 0), Vec3(2, 2, 2));
  const Frame prev = MakeFrame(0, {Vec3(0.5, 0, 0), Vec3(5, 5, 0)}, {label});
  const Frame curr = MakeFrame(100000, {Vec3(0.5, 0, 0), Vec3(5, 5, 0)}, {label});
  const FlowAnnotation ann = AnnotateFrame(prev, curr);
  EXPECT_EQ(ann.timestamp_us, 100000);
  for (const FlowLabel& l : ann.points) {
    EXPECT_EQ(l.flow, Vec3::Zero());
    EXPECT_TRUE(l.valid);
  }
  EXPECT_EQ(ann.points[0].class_id, ObjectClass::kVehicle);
  EXPECT_EQ(ann.points[1].class_id, ObjectClass::kBackground);
}

TEST(AnnotateFrame, SecantFlowOfTranslatingVehicle) {
  const Frame prev = MakeFrame(0, {}, {Label(7, ObjectClass::kVehicle, Vec3(-0.2, 0, 0), Vec3(2, 2, 2))});
  const Frame curr = MakeFrame(100000, {Vec3(0.5, 0.3, 0)},
                               {Label(7, ObjectClass::kVehicle, Vec3(0, 0, 0), Vec3(2, 2, 2))});
  const FlowLabel l = AnnotateFrame(prev, curr).points[0];
  EXPECT_TRUE(l.valid);
  EXPECT_LE((l.flow - Vec3(2, 0, 0)).norm(), 1e-9);
}

TEST(AnnotateFrame, UsesActualTimestamps) {
  const Frame prev = MakeFrame(0, {}, {Label(7, ObjectClass::kVehicle, Vec3(-0.2, 0, 0), Vec3(2, 2, 2))});
  const Frame curr = MakeFrame(50000, {Vec3(0.5, 0.3, 0)},
                               {Label(7, ObjectClass::kVehicle, Vec3(0, 0, 0), Vec3(2, 2, 2))});
  EXPECT_LE((AnnotateFrame(prev, curr).points[0].flow - Vec3(4, 0, 0)).norm(), 1e-9);
}

TEST(AnnotateFrame, SpawnedObjectIsInvalid) {
  const Frame prev = MakeFrame(0, {}, {});
  const Frame curr = MakeFrame(100000, {Vec3(0, 0, 0), Vec3(9, 9, 0)},
                               {Label(3, ObjectClass::kCyclist, Vec3(0, 0, 0), Vec3(2, 1, 2))});
  const FlowAnnotation ann = AnnotateFrame(prev, curr);
  EXPECT_FALSE(ann.points[0].valid);
  EXPECT_EQ(ann.points[0].class_id, ObjectClass::kCyclist);
  EXPECT_TRUE(ann.points[1].valid);
  EXPECT_EQ(ann.points[1].class_id, ObjectClass::kBackground);
  EXPECT_EQ(ann.points[1].flow, Vec3::Zero());
}

TEST(AnnotateFrame, RejectsNonIncreasingTimestamps) {
  const Frame f = MakeFrame(100000, {}, {});
  EXPECT_EQ(CodeOf([&] { AnnotateFrame(f, f); }), ErrorCode::kTimestampOrder);
}

TEST(AnnotateFrame, OverlapGoesToNearestCenterThenSmallerTrack) {
  const auto a = Label(2, ObjectClass::kVehicle, Vec3(0, 0, 0), Vec3(4, 4, 4));
  const auto b = Label(1, ObjectClass::kPedestrian, Vec3(1.5, 0, 0), Vec3(4, 4, 4));
  const Frame prev = MakeFrame(0, {}, {a, b});
  const Frame curr = MakeFrame(100000, {Vec3(0.5, 0, 0), Vec3(1.0, 0, 0), Vec3(0.75, 0, 0)}, {a, b});
  const FlowAnnotation ann = AnnotateFrame(prev, curr);
  EXPECT_EQ(ann.points[0].class_id, ObjectClass::kVehicle);
  EXPECT_EQ(ann.points[1].class_id, ObjectClass::kPedestrian);
  EXPECT_EQ(ann.points[2].class_id, ObjectClass::kPedestrian);
}

TEST(AnnotateFrame, BoxMarginIsConfigurable) {
  const auto a = Label(1, ObjectClass::kVehicle, Vec3(0, 0, 0), Vec3(2, 2, 2));
  const Frame prev = MakeFrame(0, {}, {a});
  const Frame curr = MakeFrame(100000, {Vec3(1.05, 0, 0)}, {a});
  EXPECT_EQ(AnnotateFrame(prev, curr).points[0].class_id, ObjectClass::kBackground);
  AnnotationConfig cfg;
  cfg.box_margin = 0.1;
  EXPECT_EQ(AnnotateFrame(prev, curr, cfg).points[0].class_id, ObjectClass::kVehicle);
}

SceneSpec RandomSpec(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  SceneSpec s;
  s.duration_frames = 6;
  s.seed = seed;
  s.ground = {16, 0.3, 0};
  s.clutter = {20, 16, 2};
  s.ego.velocity = seed % 2 ? Vec3(6 * u(rng), 2 * u(rng), 0) : Vec3::Zero();
  s.ego.yaw_rate = seed % 3 ? 0.4 * u(rng) : 0.0;
  s.ego.heading = 3 * u(rng);
  const int n = 1 + static_cast<int>(seed % 3);
  for (int i = 0; i < n; ++i) {
    ObjectSpec o;
    o.class_id = static_cast<ObjectClass>(1 + (seed + i) % 3);
    o.dims = Vec3(1 + 3 * std::abs(u(rng)), 0.8 + std::abs(u(rng)), 1.5);
    o.position = Vec3(12 * i - 12, 6 * u(rng), 0.75);
    o.heading = 3 * u(rng);
    o.velocity = Vec3(4 * u(rng), 4 * u(rng), 0);
    o.yaw_rate = i % 2 ? 0.8 * u(rng) : 0.0;
    o.spawn_frame = (seed + i) % 4 == 0 ? 2 : 0;
    o.surface_points = 60;
    s.objects.push_back(o);
  }
  return s;
}

TEST(AnnotateFrame, MatchesOracleOnGeneratedSegments) {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const SceneSpec spec = RandomSpec(seed);
    const RunSegment seg = Generate(spec);
    const auto anns = AnnotateSegment(seg);
    ASSERT_EQ(anns.size(), seg.frames.size() - 1);
    for (int k = 1; k < spec.duration_frames; ++k) {
      const auto oracle = OracleFlowForFrame(spec, k);
      const FlowAnnotation& ann = anns[k - 1];
      ASSERT_EQ(ann.points.size(), oracle.size());
      for (std::size_t i = 0; i < oracle.size(); ++i) {
        EXPECT_EQ(ann.points[i].valid, oracle[i].valid);
        EXPECT_EQ(ann.points[i].class_id, oracle[i].class_id);
        if (oracle[i].valid) worst = std::max(worst, (ann.points[i].flow - oracle[i].flow).norm());
      }
    }
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(AnnotateFrame, StaticWorldHasExactlyZeroFlow) {
  SceneSpec spec = RandomSpec(4);
  spec.objects.clear();
  for (const FlowAnnotation& ann : AnnotateSegment(Generate(spec))) {
    for (const FlowLabel& l : ann.points) {
      EXPECT_TRUE(l.valid);
      EXPECT_EQ(l.flow, Vec3::Zero());
    }
  }
}

// World-frame flow of every point; point order does not depend on the ego.
std::vector<Vec3> WorldFlows(const SceneSpec& spec) {
  const RunSegment seg = Generate(spec);
  const auto anns = AnnotateSegment(seg);
  std::vector<Vec3> out;
  for (std::size_t k = 0; k < anns.size(); ++k) {
    const Mat3 r = seg.frames[k + 1].ego_pose.rotation();
    for (const FlowLabel& l : anns[k].points) out.push_back(r * l.flow);
  }
  return out;
}

TEST(AnnotateFrame, InvariantToEgoTrajectory) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    SceneSpec a = RandomSpec(seed);
    a.float32_payload = false;
    for (ObjectSpec& o : a.objects) o.spawn_frame = 0;
    SceneSpec b = a;
    b.ego.velocity = Vec3(-3, 5, 0);
    b.ego.yaw_rate = -0.3;
    b.ego.heading = 2.0;
    b.ego.position = Vec3(4, -2, 0);
    const auto fa = WorldFlows(a), fb = WorldFlows(b);
    ASSERT_EQ(fa.size(), fb.size());
    for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_LE((fa[i] - fb[i]).norm(), 1e-6);
  }
}

TEST(AnnotateFrame, InvariantToGlobalRigidMotion) {
  const Transform3 g = Transform3::Yaw(1.1, Vec3(30, -12, 0));
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    SceneSpec a = RandomSpec(seed);
    a.float32_payload = false;
    a.ground.density = 0;
    a.clutter.count = 0;
    SceneSpec b = a;
    b.ego.position = Apply(g, a.ego.position);
    b.ego.heading = a.ego.heading + 1.1;
    b.ego.velocity = g.rotation() * a.ego.velocity;
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
      b.objects[i].position = Apply(g, a.objects[i].position);
      b.objects[i].heading = a.objects[i].heading + 1.1;
      b.objects[i].velocity = g.rotation() * a.objects[i].velocity;
    }
    const auto aa = AnnotateSegment(Generate(a)), ab = AnnotateSegment(Generate(b));
    for (std::size_t k = 0; k < aa.size(); ++k) {
      ASSERT_EQ(aa[k].points.size(), ab[k].points.size());
      for (std::size_t i = 0; i < aa[k].points.size(); ++i) {
        EXPECT_LE((aa[k].points[i].flow - ab[k].points[i].flow).norm(), 1e-6);
        EXPECT_EQ(aa[k].points[i].valid, ab[k].points[i].valid);
      }
    }
  }
}

TEST(AnnotateSegment, ThreadCountDoesNotChangeOutput) {
  const RunSegment seg = Generate(RandomSpec(9));
  EXPECT_EQ(AnnotateSegment(seg, {}, 1), AnnotateSegment(seg, {}, 4));
}

FlowAnnotation Mixed() {
  FlowAnnotation a;
  a.timestamp_us = 5;
  a.points = {{Vec3(3, 0, 0), ObjectClass::kCyclist, true},
              {Vec3(1, 1, 0), ObjectClass::kPedestrian, true},
              {Vec3(5, 0, 1), ObjectClass::kVehicle, true},
              {Vec3::Zero(), ObjectClass::kBackground, true},
              {Vec3::Zero(), ObjectClass::kCyclist, false}};
  return a;
}

TEST(Ablate, Examples) {
  const FlowAnnotation a = Mixed();
  EXPECT_EQ(AblateLabels(a, {}, AblationMode::kStationary), a);
  const FlowAnnotation s = AblateLabels(a, {ObjectClass::kCyclist}, AblationMode::kStationary);
  EXPECT_EQ(s.points[0], (FlowLabel{Vec3::Zero(), ObjectClass::kBackground, true}));
  EXPECT_EQ(s.points[2], a.points[2]);
  const FlowAnnotation ig = AblateLabels(a, {ObjectClass::kPedestrian}, AblationMode::kIgnored);
  EXPECT_FALSE(ig.points[1].valid);
  EXPECT_EQ(ig.points[2], a.points[2]);
  EXPECT_EQ(CodeOf([&] { AblateLabels(a, {ObjectClass::kBackground}, AblationMode::kIgnored); }),
            ErrorCode::kInvalidArgument);
}

TEST(Ablate, IdempotentAndCommutesOnDisjointSets) {
  const FlowAnnotation a = Mixed();
  for (AblationMode m : {AblationMode::kStationary, AblationMode::kIgnored}) {
    const auto once = AblateLabels(a, {ObjectClass::kVehicle}, m);
    EXPECT_EQ(AblateLabels(once, {ObjectClass::kVehicle}, m), once);
    const auto xy = AblateLabels(once, {ObjectClass::kCyclist}, m);
    const auto yx = AblateLabels(AblateLabels(a, {ObjectClass::kCyclist}, m),
                                 {ObjectClass::kVehicle}, m);
    EXPECT_EQ(xy, yx);
  }
}

TEST(RemoveGround, Examples) {
  const Frame f = MakeFrame(0, {Vec3(0, 0, 0), Vec3(1, 0, 0.2), Vec3(2, 0, 0.21), Vec3(3, 0, 1.5)},
                            {});
  EXPECT_EQ(RemoveGround(f, -1e9).points, f.points);
  const Frame g = RemoveGround(f, 0.2);
  ASSERT_EQ(g.points.size(), 2u);
  EXPECT_EQ(g.points[0].x, 2.0);
  EXPECT_EQ(g.points[1].x, 3.0);
  EXPECT_EQ(RemoveGround(f, 0.2, 1.0).points.size(), 1u);
}

TEST(Downsample, Examples) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 100; ++i) pts.push_back(Vec3(i, 0, 0));
  const Frame f = MakeFrame(0, pts, {Label(1, ObjectClass::kVehicle, Vec3::Zero(), Vec3::Ones())});
  EXPECT_EQ(DownsamplePoints(f, 1.0, 1).frame.points, f.points);
  const DownsampledFrame half = DownsamplePoints(f, 0.5, 1);
  EXPECT_EQ(half.frame.points.size(), 50u);
  EXPECT_EQ(half.frame.labels, f.labels);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(half.frame.points[i], f.points[half.source_index[i]]);
    if (i) EXPECT_LT(half.source_index[i - 1], half.source_index[i]);
  }
  EXPECT_EQ(DownsamplePoints(f, 0.5, 1).source_index, half.source_index);
  EXPECT_NE(DownsamplePoints(f, 0.5, 2).source_index, half.source_index);
  EXPECT_THROW(DownsamplePoints(f, 0.0, 1), Error);
  EXPECT_THROW(DownsamplePoints(f, 1.5, 1), Error);
}

TEST(FlowIo, LabelFileRoundTrip) {
  const std::vector<FlowAnnotation> frames = AnnotateSegment(Generate(RandomSpec(5)));
  const std::string bytes = EncodeFlowLabels(frames);
  EXPECT_EQ(bytes.substr(0, 4), "SFFL");
  const auto back = DecodeFlowLabels(bytes);
  ASSERT_EQ(back.size(), frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    ASSERT_EQ(back[k].points.size(), frames[k].points.size());
    for (std::size_t i = 0; i < frames[k].points.size(); ++i) {
      EXPECT_EQ(back[k].points[i].valid, frames[k].points[i].valid);
      EXPECT_EQ(back[k].points[i].class_id, frames[k].points[i].class_id);
      EXPECT_LE((back[k].points[i].flow - frames[k].points[i].flow).norm(), 1e-5);
    }
  }
  EXPECT_EQ(EncodeFlowLabels(back), bytes);
  EXPECT_EQ(CodeOf([&] { DecodeFlowLabels(bytes.substr(0, bytes.size() - 1)); }),
            ErrorCode::kTruncated);
  EXPECT_EQ(CodeOf([&] { DecodeFlowLabels(bytes + "z"); }), ErrorCode::kTruncated);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(CodeOf([&] { DecodeFlowLabels(bad); }), ErrorCode::kBadMagic);
}

TEST(FlowIo, ExportMarksInvalidPoints) {
  const std::vector<FlowAnnotation> frames = {Mixed()};
  const std::string bytes = EncodeExport(frames);
  EXPECT_EQ(bytes.substr(0, 4), "SFEX");
  const auto back = DecodeExport(bytes);
  ASSERT_EQ(back[0].points.size(), 5u);
  EXPECT_FALSE(back[0].points[4].valid);
  EXPECT_EQ(back[0].points[0], frames[0].points[0]);
  EXPECT_EQ(back[0].points[3], frames[0].points[3]);
}

}  // namespace
}  // namespace sceneflow

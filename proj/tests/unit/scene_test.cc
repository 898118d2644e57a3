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

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>

#include "sceneflow/binary_io.h"
#include "sceneflow/error.h"
#include "sceneflow/generator.h"
#include "sceneflow/scene.h"
#include "sceneflow/scene_io.h"

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

SceneSpec SmallSpec() {
  SceneSpec s;
  s.duration_frames = 20;
  s.ground = {20.0, 0.5, 0.0};
  s.clutter = {30, 20.0, 3.0};
  s.ego.velocity = Vec3(2.0, 0.5, 0.0);
  s.ego.yaw_rate = 0.05;
  ObjectSpec car;
  car.position = Vec3(6, 2, 0.8);
  car.velocity = Vec3(3, 0, 0);
  car.yaw_rate = 0.1;
  car.surface_points = 50;
  s.objects.push_back(car);
  s.seed = 11;
  return s;
}

TEST(ClassNames, RoundTrip) {
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cls = static_cast<ObjectClass>(c);
    EXPECT_EQ(ParseClassName(ClassName(cls)), cls);
  }
  EXPECT_FALSE(ParseClassName("truck").has_value());
  EXPECT_FALSE(IsObjectClass(ObjectClass::kBackground));
  EXPECT_TRUE(IsObjectClass(ObjectClass::kCyclist));
}

TEST(SegmentIo, GeneratedSegmentRoundTrips) {
  const RunSegment seg = Generate(SmallSpec());
  ASSERT_EQ(seg.frames.size(), 20u);
  const RunSegment back = DecodeSegment(EncodeSegment(seg));
  EXPECT_TRUE(back == seg);
  EXPECT_EQ(EncodeSegment(back), EncodeSegment(seg));
}

TEST(SegmentIo, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "sceneflow_scene_test.sfrs";
  const RunSegment seg = Generate(SmallSpec());
  WriteSegment(seg, path.string());
  EXPECT_TRUE(ReadSegment(path.string()) == seg);
  std::filesystem::remove(path);
  EXPECT_EQ(CodeOf([&] { ReadSegment(path.string()); }), ErrorCode::kIo);
}

TEST(SegmentIo, HeaderLayout) {
  const std::string bytes = EncodeSegment(Generate(SmallSpec()));
  EXPECT_EQ(bytes.substr(0, 4), "SFRS");
  std::uint32_t version = 0, frames = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&frames, bytes.data() + 8, 4);
  EXPECT_EQ(version, 1u);
  EXPECT_EQ(frames, 20u);
}

TEST(SegmentIo, DistinctErrorCodes) {
  const std::string good = EncodeSegment(Generate(SmallSpec()));
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(CodeOf([&] { DecodeSegment(bad_magic); }), ErrorCode::kBadMagic);

  std::string bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(CodeOf([&] { DecodeSegment(bad_version); }), ErrorCode::kVersionMismatch);

  const std::string truncated = good.substr(0, good.size() / 2);
  EXPECT_EQ(CodeOf([&] { DecodeSegment(truncated); }), ErrorCode::kTruncated);

  // First point's x sits after the header, timestamp, pose and point count.
  std::string nan_point = good;
  const std::size_t x_offset = 12 + 8 + 16 * 8 + 4;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan_point.data() + x_offset, &nan, 4);
  EXPECT_EQ(CodeOf([&] { DecodeSegment(nan_point); }), ErrorCode::kNonFinite);

  EXPECT_EQ(CodeOf([&] { DecodeSegment(good + "x"); }), ErrorCode::kTruncated);
}

TEST(SegmentIo, EveryTruncationIsRejected) {
  SceneSpec spec = SmallSpec();
  spec.duration_frames = 2;
  spec.ground.density = 0.02;
  spec.clutter.count = 3;
  spec.objects[0].surface_points = 3;
  const std::string good = EncodeSegment(Generate(spec));
  for (std::size_t n = 0; n < good.size(); ++n) {
    EXPECT_THROW(DecodeSegment(std::string_view(good).substr(0, n)), Error) << n;
  }
}

TEST(Segment, Validation) {
  RunSegment empty;
  EXPECT_THROW(ValidateSegment(empty), Error);
  RunSegment seg = Generate(SmallSpec());
  EXPECT_NO_THROW(ValidateSegment(seg));
  RunSegment backwards = seg;
  backwards.frames[1].timestamp_us = backwards.frames[0].timestamp_us;
  EXPECT_EQ(CodeOf([&] { ValidateSegment(backwards); }), ErrorCode::kTimestampOrder);
  RunSegment dup = seg;
  dup.frames[0].labels.push_back(dup.frames[0].labels[0]);
  EXPECT_THROW(ValidateSegment(dup), Error);
  RunSegment nan = seg;
  nan.frames[0].points[0].x = std::numeric_limits<double>::infinity();
  EXPECT_THROW(ValidateSegment(nan), Error);
}

TEST(Segment, FindTrack) {
  const RunSegment seg = Generate(SmallSpec());
  ASSERT_NE(seg.frames[0].FindTrack(1), nullptr);
  EXPECT_EQ(seg.frames[0].FindTrack(1)->class_id, ObjectClass::kVehicle);
  EXPECT_EQ(seg.frames[0].FindTrack(2), nullptr);
}

TEST(Subsample, Examples) {
  EXPECT_EQ(SubsampleIndices(5, 5, 1), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_TRUE(SubsampleIndices(5, 0, 1).empty());
  EXPECT_EQ(SubsampleIndices(100, 10, 42), SubsampleIndices(100, 10, 42));
  EXPECT_THROW(SubsampleIndices(3, 4, 1), Error);
}

TEST(Subsample, SortedDistinctAndSeedDependent) {
  bool differs = false;
  const auto base = SubsampleIndices(100, 10, 0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto pick = SubsampleIndices(100, 10, seed);
    ASSERT_EQ(pick.size(), 10u);
    for (std::size_t i = 1; i < pick.size(); ++i) EXPECT_LT(pick[i - 1], pick[i]);
    differs = differs || pick != base;
  }
  EXPECT_TRUE(differs);
}

TEST(Subsample, WholeSegments) {
  std::vector<RunSegment> segs;
  for (int i = 0; i < 6; ++i) {
    SceneSpec s = SmallSpec();
    s.seed = i;
    s.duration_frames = 2;
    segs.push_back(Generate(s));
  }
  const auto picked = SubsampleSegments(segs, 3, 9);
  const auto idx = SubsampleIndices(6, 3, 9);
  ASSERT_EQ(picked.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(picked[i] == segs[idx[i]]);
}

}  // namespace
}  // namespace sceneflow

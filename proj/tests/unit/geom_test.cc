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

#include "sceneflow/geom.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sceneflow/error.h"

namespace sceneflow {
namespace {

constexpr double kPi = std::numbers::pi;

void ExpectNear(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x(), b.x(), tol);
  EXPECT_NEAR(a.y(), b.y(), tol);
  EXPECT_NEAR(a.z(), b.z(), tol);
}

void ExpectIdentity(const Transform3& t, double tol) {
  EXPECT_LE((t.rotation() - Mat3::Identity()).cwiseAbs().maxCoeff(), tol);
  EXPECT_LE(t.translation().cwiseAbs().maxCoeff(), tol);
}

Transform3 RandomTransform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_real_distribution<double> a(-kPi, kPi);
  return Transform3::Yaw(a(rng), Vec3(u(rng), u(rng), u(rng)));
}

TEST(Compose, IdentityOfIdentities) {
  ExpectIdentity(Compose(Transform3::Identity(), Transform3::Identity()), 0.0);
}

TEST(Compose, TranslationsAdd) {
  const Transform3 t = Compose(Transform3::Translation(1, 0, 0), Transform3::Translation(0, 2, 0));
  ExpectNear(t.translation(), Vec3(1, 2, 0), 0.0);
}

TEST(Compose, YawAfterTranslationMovesOrigin) {
  const Transform3 t = Compose(Transform3::Yaw(kPi / 2), Transform3::Translation(1, 0, 0));
  ExpectNear(Apply(t, Vec3::Zero()), Vec3(0, 1, 0), 1e-12);
}

TEST(Compose, AppliesRightOperandFirst) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Transform3 a = RandomTransform(rng), b = RandomTransform(rng);
    const Vec3 p(1.5, -2.0, 0.25);
    ExpectNear(Apply(a * b, p), Apply(a, Apply(b, p)), 1e-9);
  }
}

TEST(Invert, Examples) {
  ExpectIdentity(Invert(Transform3::Identity()), 0.0);
  ExpectNear(Invert(Transform3::Translation(3, 0, 0)).translation(), Vec3(-3, 0, 0), 0.0);
  ExpectNear(Apply(Invert(Transform3::Yaw(0.1)), Vec3(1, 0, 0)),
             Vec3(std::cos(0.1), -std::sin(0.1), 0), 1e-15);
}

TEST(Invert, ComposeWithInverseIsIdentity) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const Transform3 t = RandomTransform(rng);
    ExpectIdentity(Compose(t, Invert(t)), 1e-9);
    ExpectIdentity(Compose(Invert(t), t), 1e-9);
  }
}

TEST(Apply, Examples) {
  ExpectNear(Apply(Transform3::Identity(), Vec3(1, 2, 3)), Vec3(1, 2, 3), 0.0);
  ExpectNear(Apply(Transform3::Translation(-1, 0, 0), Vec3::Zero()), Vec3(-1, 0, 0), 0.0);
  ExpectNear(Apply(Transform3::Yaw(0.1), Vec3(1, 0, 0)), Vec3(0.995004, 0.0998334, 0), 1e-6);
}

TEST(Apply, RotationOnlyIgnoresTranslation) {
  const Transform3 t = Transform3::Yaw(kPi / 2, Vec3(5, 5, 5));
  ExpectNear(ApplyRotation(t, Vec3(1, 0, 0)), Vec3(0, 1, 0), 1e-15);
}

TEST(Transform3, YawRotationIsOrthonormal) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Transform3 t = RandomTransform(rng);
    const Mat3& r = t.rotation();
    EXPECT_LE((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
  }
}

TEST(Transform3, RejectsNonRotation) {
  Mat3 m = Mat3::Identity();
  m(0, 0) = 2.0;
  EXPECT_THROW(Transform3(m, Vec3::Zero()), Error);
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1.0;
  EXPECT_THROW(Transform3(reflect, Vec3::Zero()), Error);
}

TEST(Transform3, RowMajorRoundTrip) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const Transform3 t = RandomTransform(rng);
    const Transform3 back = Transform3::FromRowMajor4x4(t.ToRowMajor4x4());
    EXPECT_EQ(back.rotation(), t.rotation());
    EXPECT_EQ(back.translation(), t.translation());
  }
  auto m = Transform3::Translation(1, 2, 3).ToRowMajor4x4();
  EXPECT_EQ(m[3], 1.0);
  EXPECT_EQ(m[7], 2.0);
  EXPECT_EQ(m[11], 3.0);
  EXPECT_EQ(m[15], 1.0);
}

TEST(Transform3, YawRecoversHeading) {
  for (double h : {-3.0, -1.0, 0.0, 0.5, 3.1}) EXPECT_NEAR(Transform3::Yaw(h).yaw(), h, 1e-12);
}

TEST(Properties, YawPreservesDistanceToCenter) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50, 50);
  std::uniform_real_distribution<double> a(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 c(u(rng), u(rng), u(rng)), p(u(rng), u(rng), u(rng));
    const Transform3 t = Transform3::Yaw(a(rng), c);
    EXPECT_NEAR((Apply(t, p) - c).norm(), p.norm(), 1e-9);
  }
}

TEST(Properties, ComposeIsAssociative) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 1000; ++i) {
    const Transform3 a = RandomTransform(rng), b = RandomTransform(rng), c = RandomTransform(rng);
    const Transform3 l = (a * b) * c, r = a * (b * c);
    EXPECT_LE((l.rotation() - r.rotation()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((l.translation() - r.translation()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(WrapAngle, RangeIsHalfOpen) {
  EXPECT_DOUBLE_EQ(WrapAngle(kPi), kPi);
  EXPECT_DOUBLE_EQ(WrapAngle(-kPi), kPi);
  EXPECT_NEAR(WrapAngle(3 * kPi), kPi, 1e-12);
  EXPECT_NEAR(WrapAngle(0.5 + 4 * kPi), 0.5, 1e-12);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 1000; ++i) {
    const double w = WrapAngle(u(rng));
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
  }
}

TEST(Box, PoseExamples) {
  ExpectIdentity(BoxPose(Box3{Vec3::Zero(), Vec3::Ones(), 0.0}), 0.0);
  ExpectNear(BoxPose(Box3{Vec3(1, 2, 0), Vec3::Ones(), 0.0}).translation(), Vec3(1, 2, 0), 0.0);
  ExpectNear(Apply(BoxPose(Box3{Vec3::Zero(), Vec3::Ones(), kPi / 2}), Vec3(1, 0, 0)),
             Vec3(0, 1, 0), 1e-15);
}

TEST(Box, Validation) {
  EXPECT_NO_THROW(ValidateBox(Box3{}));
  EXPECT_THROW(ValidateBox(Box3{Vec3::Zero(), Vec3(1, 0, 1), 0.0}), Error);
  EXPECT_THROW(ValidateBox(Box3{Vec3::Zero(), Vec3::Ones(), -kPi}), Error);
  EXPECT_THROW(ValidateBox(Box3{Vec3(NAN, 0, 0), Vec3::Ones(), 0.0}), Error);
}

TEST(Contains, Examples) {
  const Box3 cube{Vec3::Zero(), Vec3::Ones(), 0.0};
  EXPECT_TRUE(Contains(cube, Vec3::Zero()));
  EXPECT_FALSE(Contains(cube, Vec3(0.51, 0, 0)));
  EXPECT_TRUE(Contains(cube, Vec3(0.5, 0, 0)));
  EXPECT_TRUE(Contains(cube, Vec3(0.51, 0, 0), 0.02));
  EXPECT_TRUE(Contains(Box3{Vec3::Zero(), Vec3::Ones(), kPi / 2}, Vec3(0, 0.49, 0)));
}

TEST(Contains, RotatedBoxUsesBoxFrame) {
  const Box3 box{Vec3::Zero(), Vec3(4, 1, 1), kPi / 2};
  EXPECT_TRUE(Contains(box, Vec3(0, 1.9, 0)));
  EXPECT_FALSE(Contains(box, Vec3(1.9, 0, 0)));
}

TEST(Properties, ContainsInvariantUnderRigidMotion) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_real_distribution<double> d(0.5, 4);
  std::uniform_real_distribution<double> a(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const Box3 box{Vec3(u(rng), u(rng), u(rng)), Vec3(d(rng), d(rng), d(rng)), WrapAngle(a(rng))};
    const Vec3 p(u(rng), u(rng), u(rng));
    const Transform3 g = Transform3::Yaw(a(rng), Vec3(u(rng), u(rng), u(rng)));
    const Transform3 moved_pose = g * BoxPose(box);
    const Box3 moved{moved_pose.translation(), box.dims, WrapAngle(moved_pose.yaw())};
    // Skip points within rounding distance of a face.
    const Vec3 local = Apply(Invert(BoxPose(box)), p);
    const Vec3 slack = (local.cwiseAbs() - box.dims / 2).cwiseAbs();
    if (slack.minCoeff() < 1e-9) continue;
    EXPECT_EQ(Contains(box, p), Contains(moved, Apply(g, p)));
  }
}

}  // namespace
}  // namespace sceneflow

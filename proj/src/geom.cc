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

#include <cmath>
#include <numbers>
#include <string>

#include "sceneflow/error.h"

namespace sceneflow {

Transform3::Transform3(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  const double drift = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(drift <= 1e-6) || !(std::abs(rotation.determinant() - 1.0) <= 1e-6) ||
      !translation.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "transform rotation is not a proper rotation");
  }
}

Transform3 Transform3::Translation(double x, double y, double z) {
  return Transform3(Mat3::Identity(), Vec3(x, y, z));
}

Transform3 Transform3::Yaw(double theta, const Vec3& translation) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat3 r;
  r << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return Transform3(r, translation);
}

std::array<double, 16> Transform3::ToRowMajor4x4() const {
  std::array<double, 16> m{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m[i * 4 + j] = rotation_(i, j);
    m[i * 4 + 3] = translation_(i);
  }
  m[15] = 1.0;
  return m;
}

Transform3 Transform3::FromRowMajor4x4(const std::array<double, 16>& m) {
  Mat3 r;
  Vec3 t;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = m[i * 4 + j];
    t(i) = m[i * 4 + 3];
  }
  return Transform3(r, t);
}

double Transform3::yaw() const {
  return std::atan2(rotation_(1, 0), rotation_(0, 0));
}

Transform3 Compose(const Transform3& a, const Transform3& b) {
  return Transform3(a.rotation() * b.rotation(),
                    a.rotation() * b.translation() + a.translation());
}

Transform3 Invert(const Transform3& t) {
  const Mat3 rt = t.rotation().transpose();
  return Transform3(rt, -(rt * t.translation()));
}

Vec3 Apply(const Transform3& t, const Vec3& p) {
  return t.rotation() * p + t.translation();
}

Vec3 ApplyRotation(const Transform3& t, const Vec3& v) {
  return t.rotation() * v;
}

double WrapAngle(double theta) {
  constexpr double kPi = std::numbers::pi;
  double w = std::remainder(theta, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

void ValidateBox(const Box3& box) {
  if (!box.center.allFinite() || !box.dims.allFinite() ||
      !std::isfinite(box.heading)) {
    throw Error(ErrorCode::kInvalidArgument, "box has non-finite values");
  }
  if ((box.dims.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "box dims must be positive");
  }
  if (!(box.heading > -std::numbers::pi && box.heading <= std::numbers::pi)) {
    throw Error(ErrorCode::kInvalidArgument,
                "box heading outside (-pi, pi]: " + std::to_string(box.heading));
  }
}

Transform3 BoxPose(const Box3& box) {
  return Transform3::Yaw(box.heading, box.center);
}

bool Contains(const Box3& box, const Vec3& p, double margin) {
  const Vec3 local = Apply(Invert(BoxPose(box)), p);
  const Vec3 half = 0.5 * box.dims + Vec3::Constant(margin);
  return std::abs(local.x()) <= half.x() && std::abs(local.y()) <= half.y() &&
         std::abs(local.z()) <= half.z();
}

}  // namespace sceneflow

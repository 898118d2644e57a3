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

#ifndef SCENEFLOW_GEOM_H_
#define SCENEFLOW_GEOM_H_

#include <array>

#include <Eigen/Core>
#include <Eigen/LU>

namespace sceneflow {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Rigid transform p -> rotation * p + translation. Rotations produced by this
// library are always about z, but any proper rotation read from a file is
// carried through unchanged.
class Transform3 {
 public:
  Transform3() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  Transform3(const Mat3& rotation, const Vec3& translation);

  static Transform3 Identity() { return {}; }
  static Transform3 Translation(double x, double y, double z);
  static Transform3 Yaw(double theta, const Vec3& translation = Vec3::Zero());

  // Row-major 4x4 homogeneous encoding used by the binary file formats.
  std::array<double, 16> ToRowMajor4x4() const;
  static Transform3 FromRowMajor4x4(const std::array<double, 16>& m);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  // Heading of the rotated x axis, atan2(r10, r00).
  double yaw() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

// (a o b)(p) == a(b(p)).
Transform3 Compose(const Transform3& a, const Transform3& b);
Transform3 Invert(const Transform3& t);
Vec3 Apply(const Transform3& t, const Vec3& p);
// Rotation only; used for direction vectors such as velocities.
Vec3 ApplyRotation(const Transform3& t, const Vec3& v);

inline Transform3 operator*(const Transform3& a, const Transform3& b) {
  return Compose(a, b);
}

// LiDAR return. Coordinates in meters, f0/f1 are the two laser features.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double f0 = 0.0;
  double f1 = 0.0;

  Vec3 position() const { return {x, y, z}; }
  bool operator==(const Point3&) const = default;
};

// Oriented box with yaw-only heading. dims = (length, width, height) along
// the box's local x, y, z axes.
struct Box3 {
  Vec3 center = Vec3::Zero();
  Vec3 dims = Vec3::Ones();
  double heading = 0.0;

  bool operator==(const Box3& o) const {
    return center == o.center && dims == o.dims && heading == o.heading;
  }
};

// Wraps an angle to (-pi, pi].
double WrapAngle(double theta);

// Throws kInvalidArgument unless dims > 0, heading in (-pi, pi] and all
// values finite.
void ValidateBox(const Box3& box);

Transform3 BoxPose(const Box3& box);

// True iff p, expressed in the box frame, lies within dims/2 + margin on
// every axis (closed bounds).
bool Contains(const Box3& box, const Vec3& p, double margin = 0.0);

}  // namespace sceneflow

#endif  // SCENEFLOW_GEOM_H_

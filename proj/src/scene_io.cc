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

#include "sceneflow/scene_io.h"

#include <fstream>
#include <sstream>

#include "sceneflow/binary_io.h"

namespace sceneflow {

std::string ReadBinaryFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed: " + path);
  return ss.str();
}

void WriteBinaryFile(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

std::string EncodeSegment(const RunSegment& segment) {
  ByteWriter w;
  w.PutBytes(kSegmentMagic);
  w.Put<std::uint32_t>(kSegmentVersion);
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(segment.frames.size()));
  for (const Frame& f : segment.frames) {
    w.Put<std::int64_t>(f.timestamp_us);
    for (double v : f.ego_pose.ToRowMajor4x4()) w.Put<double>(v);
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(f.points.size()));
    for (const Point3& p : f.points) {
      w.Put<float>(static_cast<float>(p.x));
      w.Put<float>(static_cast<float>(p.y));
      w.Put<float>(static_cast<float>(p.z));
      w.Put<float>(static_cast<float>(p.f0));
      w.Put<float>(static_cast<float>(p.f1));
    }
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(f.labels.size()));
    for (const ObjectLabel& l : f.labels) {
      w.Put<std::uint64_t>(l.track_id);
      w.Put<std::uint8_t>(static_cast<std::uint8_t>(l.class_id));
      const Box3& b = l.box;
      for (double v : {b.center.x(), b.center.y(), b.center.z(), b.dims.x(),
                       b.dims.y(), b.dims.z(), b.heading}) {
        w.Put<float>(static_cast<float>(v));
      }
    }
  }
  return w.Take();
}

RunSegment DecodeSegment(std::string_view bytes) {
  ByteReader r(bytes);
  r.ExpectMagic(kSegmentMagic);
  r.ExpectVersion(kSegmentVersion);
  const auto frame_count = r.Get<std::uint32_t>();
  RunSegment seg;
  for (std::uint32_t i = 0; i < frame_count; ++i) {
    Frame f;
    f.timestamp_us = r.Get<std::int64_t>();
    std::array<double, 16> m;
    for (double& v : m) v = r.GetFinite<double>();
    f.ego_pose = Transform3::FromRowMajor4x4(m);
    const auto n_points = r.Get<std::uint32_t>();
    r.NeedElements(n_points, 5 * sizeof(float));
    f.points.resize(n_points);
    for (Point3& p : f.points) {
      p.x = r.GetFinite<float>();
      p.y = r.GetFinite<float>();
      p.z = r.GetFinite<float>();
      p.f0 = r.GetFinite<float>();
      p.f1 = r.GetFinite<float>();
    }
    const auto n_labels = r.Get<std::uint32_t>();
    r.NeedElements(n_labels, 8 + 1 + 7 * sizeof(float));
    f.labels.resize(n_labels);
    for (ObjectLabel& l : f.labels) {
      l.track_id = r.Get<std::uint64_t>();
      const auto cls = r.Get<std::uint8_t>();
      if (!IsObjectClass(static_cast<ObjectClass>(cls))) {
        throw Error(ErrorCode::kInvalidArgument,
                    "label class id " + std::to_string(cls) + " is invalid");
      }
      l.class_id = static_cast<ObjectClass>(cls);
      double v[7];
      for (double& x : v) x = r.GetFinite<float>();
      l.box.center = Vec3(v[0], v[1], v[2]);
      l.box.dims = Vec3(v[3], v[4], v[5]);
      l.box.heading = v[6];
    }
    seg.frames.push_back(std::move(f));
  }
  if (!r.done()) {
    throw Error(ErrorCode::kTruncated, "trailing bytes after last frame");
  }
  ValidateSegment(seg);
  return seg;
}

void WriteSegment(const RunSegment& segment, const std::string& path) {
  WriteBinaryFile(path, EncodeSegment(segment));
}

RunSegment ReadSegment(const std::string& path) {
  return DecodeSegment(ReadBinaryFile(path));
}

}  // namespace sceneflow

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

#include "sceneflow/flow_io.h"

#include <cmath>

#include "sceneflow/binary_io.h"

namespace sceneflow {
namespace {

ObjectClass CheckedClass(int raw) {
  if (raw < 0 || raw >= kNumClasses) {
    throw Error(ErrorCode::kInvalidArgument,
                "class id " + std::to_string(raw) + " is invalid");
  }
  return static_cast<ObjectClass>(raw);
}

}  // namespace

std::string EncodeFlowLabels(const std::vector<FlowAnnotation>& frames) {
  ByteWriter w;
  w.PutBytes(kFlowMagic);
  w.Put<std::uint32_t>(kFlowVersion);
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(frames.size()));
  for (const FlowAnnotation& f : frames) {
    w.Put<std::int64_t>(f.timestamp_us);
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(f.points.size()));
    for (const FlowLabel& l : f.points) {
      w.Put<float>(static_cast<float>(l.flow.x()));
      w.Put<float>(static_cast<float>(l.flow.y()));
      w.Put<float>(static_cast<float>(l.flow.z()));
      w.Put<std::uint8_t>(static_cast<std::uint8_t>(l.class_id));
      w.Put<std::uint8_t>(l.valid ? 1 : 0);
    }
  }
  return w.Take();
}

std::vector<FlowAnnotation> DecodeFlowLabels(std::string_view bytes) {
  ByteReader r(bytes);
  r.ExpectMagic(kFlowMagic);
  r.ExpectVersion(kFlowVersion);
  const auto count = r.Get<std::uint32_t>();
  std::vector<FlowAnnotation> frames;
  for (std::uint32_t i = 0; i < count; ++i) {
    FlowAnnotation f;
    f.timestamp_us = r.Get<std::int64_t>();
    const auto n = r.Get<std::uint32_t>();
    r.NeedElements(n, 3 * sizeof(float) + 2);
    f.points.resize(n);
    for (FlowLabel& l : f.points) {
      const double x = r.Get<float>(), y = r.Get<float>(), z = r.Get<float>();
      l.flow = Vec3(x, y, z);
      l.class_id = CheckedClass(r.Get<std::uint8_t>());
      const auto valid = r.Get<std::uint8_t>();
      if (valid > 1) throw Error(ErrorCode::kInvalidArgument, "bad valid flag");
      l.valid = valid == 1;
      if (l.valid && !l.flow.allFinite()) {
        throw Error(ErrorCode::kNonFinite, "valid point with non-finite flow");
      }
    }
    frames.push_back(std::move(f));
  }
  if (!r.done()) {
    throw Error(ErrorCode::kTruncated, "trailing bytes after last frame");
  }
  return frames;
}

void WriteFlowLabels(const std::vector<FlowAnnotation>& frames,
                     const std::string& path) {
  WriteBinaryFile(path, EncodeFlowLabels(frames));
}

std::vector<FlowAnnotation> ReadFlowLabels(const std::string& path) {
  return DecodeFlowLabels(ReadBinaryFile(path));
}

std::string EncodeExport(const std::vector<FlowAnnotation>& frames) {
  ByteWriter w;
  w.PutBytes(kExportMagic);
  w.Put<std::uint32_t>(kFlowVersion);
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(frames.size()));
  for (const FlowAnnotation& f : frames) {
    w.Put<std::int64_t>(f.timestamp_us);
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(f.points.size()));
    for (const FlowLabel& l : f.points) {
      const Vec3 v = l.valid ? l.flow : Vec3::Zero();
      w.Put<float>(static_cast<float>(v.x()));
      w.Put<float>(static_cast<float>(v.y()));
      w.Put<float>(static_cast<float>(v.z()));
      w.Put<float>(l.valid ? static_cast<float>(l.class_id) : kExportInvalidClass);
    }
  }
  return w.Take();
}

std::vector<FlowAnnotation> DecodeExport(std::string_view bytes) {
  ByteReader r(bytes);
  r.ExpectMagic(kExportMagic);
  r.ExpectVersion(kFlowVersion);
  const auto count = r.Get<std::uint32_t>();
  std::vector<FlowAnnotation> frames;
  for (std::uint32_t i = 0; i < count; ++i) {
    FlowAnnotation f;
    f.timestamp_us = r.Get<std::int64_t>();
    const auto n = r.Get<std::uint32_t>();
    r.NeedElements(n, 4 * sizeof(float));
    f.points.resize(n);
    for (FlowLabel& l : f.points) {
      const double x = r.GetFinite<float>(), y = r.GetFinite<float>(),
                   z = r.GetFinite<float>();
      const float cls = r.GetFinite<float>();
      if (cls == kExportInvalidClass) {
        l = FlowLabel{Vec3::Zero(), ObjectClass::kBackground, false};
        continue;
      }
      if (cls != std::floor(cls)) {
        throw Error(ErrorCode::kInvalidArgument, "fractional class channel");
      }
      l.flow = Vec3(x, y, z);
      l.class_id = CheckedClass(static_cast<int>(cls));
      l.valid = true;
    }
    frames.push_back(std::move(f));
  }
  if (!r.done()) {
    throw Error(ErrorCode::kTruncated, "trailing bytes after last frame");
  }
  return frames;
}

}  // namespace sceneflow

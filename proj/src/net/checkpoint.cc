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

#include "sceneflow/binary_io.h"
#include "sceneflow/error.h"
#include "sceneflow/net/model.h"

namespace sceneflow::net {
namespace {

constexpr std::string_view kMagic = "SFCK";
constexpr std::uint32_t kVersion = 1;

}  // namespace

std::string EncodeCheckpoint(const FlowNetModel<float>& model) {
  ByteWriter w;
  w.PutBytes(kMagic);
  w.Put<std::uint32_t>(kVersion);
  const std::string cfg = NetConfigToText(model.config());
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(cfg.size()));
  w.PutBytes(cfg);
  const auto& params = model.parameters();
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const Parameter<float>& p : params) {
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(p.name.size()));
    w.PutBytes(p.name);
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(p.value.shape.size()));
    for (int d : p.value.shape) w.Put<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (float v : p.value.data) w.Put<float>(v);
  }
  return w.Take();
}

FlowNetModel<float> DecodeCheckpoint(std::string_view bytes) {
  ByteReader r(bytes);
  r.ExpectMagic(kMagic);
  r.ExpectVersion(kVersion);
  const auto cfg_len = r.Get<std::uint32_t>();
  r.NeedElements(cfg_len, 1);
  NetConfig cfg;
  try {
    cfg = NetConfigFromText(r.GetBytes(cfg_len));
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("checkpoint config: ") + e.what());
  }
  FlowNetModel<float> model(cfg);
  auto& params = model.parameters();
  const auto count = r.Get<std::uint32_t>();
  if (count != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "checkpoint holds " + std::to_string(count) +
                                               " tensors, architecture has " +
                                               std::to_string(params.size()));
  }
  for (Parameter<float>& p : params) {
    const auto name_len = r.Get<std::uint32_t>();
    r.NeedElements(name_len, 1);
    const std::string_view name = r.GetBytes(name_len);
    if (name != p.name) {
      throw Error(ErrorCode::kShapeMismatch,
                  "tensor '" + std::string(name) + "' where '" + p.name + "' was expected");
    }
    const auto rank = r.Get<std::uint32_t>();
    r.NeedElements(rank, 4);
    std::vector<int> shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(static_cast<int>(r.Get<std::uint32_t>()));
    if (shape != p.value.shape) {
      throw Error(ErrorCode::kShapeMismatch, "tensor '" + p.name + "' has the wrong shape");
    }
    r.NeedElements(p.value.size(), sizeof(float));
    for (float& v : p.value.data) v = r.GetFinite<float>();
  }
  if (!r.done()) throw Error(ErrorCode::kTruncated, "trailing bytes after checkpoint");
  return model;
}

void WriteCheckpoint(const FlowNetModel<float>& model, const std::string& path) {
  WriteBinaryFile(path, EncodeCheckpoint(model));
}

FlowNetModel<float> ReadCheckpoint(const std::string& path) {
  return DecodeCheckpoint(ReadBinaryFile(path));
}

}  // namespace sceneflow::net

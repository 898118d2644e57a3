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

#ifndef SCENEFLOW_BINARY_IO_H_
#define SCENEFLOW_BINARY_IO_H_

// Little-endian primitives shared by the SFRS, SFFL, SFEX and SFCK formats.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>

#include "sceneflow/error.h"

namespace sceneflow {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void Put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void PutBytes(std::string_view bytes) { out_.append(bytes); }

  const std::string& bytes() const { return out_; }
  std::string Take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T Get() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  // Float read that rejects NaN/Inf.
  template <typename T>
    requires std::is_floating_point_v<T>
  T GetFinite() {
    const T v = Get<T>();
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFinite,
                  "non-finite value at byte " + std::to_string(pos_ - sizeof(T)));
    }
    return v;
  }

  std::string_view GetBytes(std::size_t n) {
    Need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void ExpectMagic(std::string_view magic) {
    if (data_.size() < magic.size() ||
        data_.substr(pos_, magic.size()) != magic) {
      throw Error(ErrorCode::kBadMagic,
                  "expected magic '" + std::string(magic) + "'");
    }
    pos_ += magic.size();
  }

  void ExpectVersion(std::uint32_t version) {
    const auto v = Get<std::uint32_t>();
    if (v != version) {
      throw Error(ErrorCode::kVersionMismatch,
                  "version " + std::to_string(v) + ", expected " +
                      std::to_string(version));
    }
  }

  // Guards element counts read from the stream before allocating.
  void NeedElements(std::uint64_t count, std::size_t element_size) {
    if (count > remaining() / element_size) {
      throw Error(ErrorCode::kTruncated,
                  "declared " + std::to_string(count) +
                      " elements exceed remaining bytes");
    }
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void Need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw Error(ErrorCode::kTruncated,
                  "need " + std::to_string(n) + " bytes at offset " +
                      std::to_string(pos_));
    }
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string ReadBinaryFile(const std::string& path);
void WriteBinaryFile(const std::string& path, std::string_view bytes);

}  // namespace sceneflow

#endif  // SCENEFLOW_BINARY_IO_H_

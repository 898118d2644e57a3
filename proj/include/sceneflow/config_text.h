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

#ifndef SCENEFLOW_CONFIG_TEXT_H_
#define SCENEFLOW_CONFIG_TEXT_H_

// Flat key/value text with repeatable [sections]:
//
//   # comment
//   top_level_key = value
//   [section]
//   key = value
//
// Values are raw strings; vectors are whitespace separated numbers.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sceneflow/geom.h"

namespace sceneflow {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigSection {
  std::string name;  // empty for the leading top-level block
  int line = 0;
  std::vector<ConfigEntry> entries;
};

struct ConfigDocument {
  std::vector<ConfigSection> sections;  // sections[0] is the top-level block
};

ConfigDocument ParseConfigText(std::string_view text);
std::string ReadTextFile(const std::string& path);

// Typed access to one section. Every key must be consumed before Finish(),
// which rejects leftovers so typos surface as config errors.
class SectionReader {
 public:
  explicit SectionReader(const ConfigSection& section);

  bool Has(std::string_view key) const;
  std::optional<std::string> Take(std::string_view key);

  double GetDouble(std::string_view key, double fallback);
  std::int64_t GetInt(std::string_view key, std::int64_t fallback);
  std::uint64_t GetUint(std::string_view key, std::uint64_t fallback);
  bool GetBool(std::string_view key, bool fallback);
  std::string GetString(std::string_view key, const std::string& fallback);
  Vec3 GetVec3(std::string_view key, const Vec3& fallback);
  std::vector<double> GetDoubleList(std::string_view key,
                                    const std::vector<double>& fallback);

  void Finish() const;

 private:
  [[noreturn]] void Fail(const ConfigEntry& e, const std::string& why) const;

  const ConfigSection& section_;
  std::vector<bool> used_;
};

double ParseDouble(std::string_view text);
std::int64_t ParseInt(std::string_view text);

// Shortest round-trip decimal rendering of a double.
std::string FormatDouble(double v);

}  // namespace sceneflow

#endif  // SCENEFLOW_CONFIG_TEXT_H_

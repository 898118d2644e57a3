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

#include "sceneflow/config_text.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "sceneflow/error.h"

namespace sceneflow {
namespace {

std::string_view Trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> SplitWs(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

double ParseDouble(std::string_view text) {
  text = Trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kConfig, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::int64_t ParseInt(std::string_view text) {
  text = Trim(text);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kConfig,
                "not an integer: '" + std::string(text) + "'");
  }
  return v;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

ConfigDocument ParseConfigText(std::string_view text) {
  ConfigDocument doc;
  doc.sections.push_back(ConfigSection{"", 0, {}});
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) {
      raw = raw.substr(0, hash);
    }
    const std::string_view line = Trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw Error(ErrorCode::kConfig,
                    "line " + std::to_string(line_no) + ": bad section header");
      }
      doc.sections.push_back(ConfigSection{
          std::string(Trim(line.substr(1, line.size() - 2))), line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kConfig,
                  "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = Trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::kConfig,
                  "line " + std::to_string(line_no) + ": empty key");
    }
    auto& entries = doc.sections.back().entries;
    for (const auto& e : entries) {
      if (e.key == key) {
        throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) +
                                            ": duplicate key '" +
                                            std::string(key) + "'");
      }
    }
    entries.push_back(ConfigEntry{std::string(key),
                                  std::string(Trim(line.substr(eq + 1))),
                                  line_no});
  }
  return doc;
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SectionReader::SectionReader(const ConfigSection& section)
    : section_(section), used_(section.entries.size(), false) {}

bool SectionReader::Has(std::string_view key) const {
  for (const auto& e : section_.entries) {
    if (e.key == key) return true;
  }
  return false;
}

std::optional<std::string> SectionReader::Take(std::string_view key) {
  for (std::size_t i = 0; i < section_.entries.size(); ++i) {
    if (section_.entries[i].key == key) {
      used_[i] = true;
      return section_.entries[i].value;
    }
  }
  return std::nullopt;
}

void SectionReader::Fail(const ConfigEntry& e, const std::string& why) const {
  throw Error(ErrorCode::kConfig, "line " + std::to_string(e.line) + ": key '" +
                                      e.key + "': " + why);
}

namespace {
const ConfigEntry* FindEntry(const ConfigSection& s, std::string_view key) {
  for (const auto& e : s.entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}
}  // namespace

double SectionReader::GetDouble(std::string_view key, double fallback) {
  auto v = Take(key);
  if (!v) return fallback;
  try {
    return ParseDouble(*v);
  } catch (const Error& err) {
    Fail(*FindEntry(section_, key), err.what());
  }
}

std::int64_t SectionReader::GetInt(std::string_view key, std::int64_t fallback) {
  auto v = Take(key);
  if (!v) return fallback;
  try {
    return ParseInt(*v);
  } catch (const Error& err) {
    Fail(*FindEntry(section_, key), err.what());
  }
}

std::uint64_t SectionReader::GetUint(std::string_view key,
                                     std::uint64_t fallback) {
  auto v = Take(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    Fail(*FindEntry(section_, key), "not an unsigned integer");
  }
  return out;
}

bool SectionReader::GetBool(std::string_view key, bool fallback) {
  auto v = Take(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  Fail(*FindEntry(section_, key), "not a boolean");
}

std::string SectionReader::GetString(std::string_view key,
                                     const std::string& fallback) {
  auto v = Take(key);
  return v ? *v : fallback;
}

Vec3 SectionReader::GetVec3(std::string_view key, const Vec3& fallback) {
  auto list = GetDoubleList(key, {fallback.x(), fallback.y(), fallback.z()});
  if (list.size() != 3) Fail(*FindEntry(section_, key), "expected 3 numbers");
  return {list[0], list[1], list[2]};
}

std::vector<double> SectionReader::GetDoubleList(
    std::string_view key, const std::vector<double>& fallback) {
  auto v = Take(key);
  if (!v) return fallback;
  std::vector<double> out;
  try {
    for (auto tok : SplitWs(*v)) {
      // Allow "a, b" as well as "a b".
      if (!tok.empty() && tok.back() == ',') tok.remove_suffix(1);
      if (!tok.empty()) out.push_back(ParseDouble(tok));
    }
  } catch (const Error& err) {
    Fail(*FindEntry(section_, key), err.what());
  }
  return out;
}

void SectionReader::Finish() const {
  for (std::size_t i = 0; i < used_.size(); ++i) {
    if (!used_[i]) {
      const std::string where =
          section_.name.empty() ? "top level" : "[" + section_.name + "]";
      Fail(section_.entries[i], "unknown key in " + where);
    }
  }
}

}  // namespace sceneflow

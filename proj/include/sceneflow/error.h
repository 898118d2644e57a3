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

#ifndef SCENEFLOW_ERROR_H_
#define SCENEFLOW_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace sceneflow {

// Every failure raised by the library carries one of these codes. The CLI
// maps them onto process exit codes.
enum class ErrorCode {
  kInvalidArgument,
  kConfig,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kNonFinite,
  kIo,
  kTrackMismatch,
  kTimestampOrder,
  kShapeMismatch,
  kNoValidPoints,
  kDivergence,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sceneflow

#endif  // SCENEFLOW_ERROR_H_

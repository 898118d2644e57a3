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

#include "sceneflow/error.h"

namespace sceneflow {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kTruncated: return "truncated payload";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kTrackMismatch: return "track id mismatch";
    case ErrorCode::kTimestampOrder: return "non-increasing timestamps";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kNoValidPoints: return "no valid points";
    case ErrorCode::kDivergence: return "divergence";
  }
  return "unknown";
}

}  // namespace sceneflow

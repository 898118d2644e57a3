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

#ifndef SCENEFLOW_BENCH_H_
#define SCENEFLOW_BENCH_H_

// Forward-latency scaling over point-cloud size.

#include <cstdint>
#include <string>
#include <vector>

#include "sceneflow/geom.h"
#include "sceneflow/net/model.h"

namespace sceneflow {

struct BenchOptions {
  std::vector<std::size_t> sizes = {32'000, 100'000, 255'000, 1'000'000};
  int warmup = 10;
  int iters = 90;
  std::uint64_t seed = 0;
};

void ValidateBenchOptions(const BenchOptions& o);

struct LatencyRow {
  std::size_t points = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  int iterations = 0;
};

struct BenchResult {
  std::vector<LatencyRow> rows;  // strictly increasing in points
  std::string fingerprint;
};

struct ScalingSummary {
  double ratio = 0.0;             // latency at largest / smallest size
  double ns_per_point = 0.0;      // least-squares slope
  double intercept_ms = 0.0;
};

// CPU model, compiler and kernel table; embedded in every result.
std::string EnvironmentFingerprint();

// Uniform synthetic cloud of `n` points inside `grid`, features in [0, 1].
std::vector<Point3> BenchCloud(std::size_t n, const GridConfig& grid, std::uint64_t seed);

// Times Predict (pillarization, forward and unpillar, batch size 1) on a
// synthetic pair per size. Cloud generation is outside the timed region.
BenchResult RunLatency(const net::FlowNetModel<float>& model, const BenchOptions& opts);

ScalingSummary Summarize(const BenchResult& r);

// size,mean_ms,std_ms,iters preceded by a "# " fingerprint line.
std::string BenchToCsv(const BenchResult& r);
BenchResult BenchFromCsv(std::string_view csv);
std::string BenchToSvg(const BenchResult& r);

}  // namespace sceneflow

#endif  // SCENEFLOW_BENCH_H_

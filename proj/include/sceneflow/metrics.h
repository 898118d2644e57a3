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

#ifndef SCENEFLOW_METRICS_H_
#define SCENEFLOW_METRICS_H_

// Per-class flow error, moving/stationary breakdowns, binary moving-point
// precision/recall and dataset statistics.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sceneflow/annotator.h"

namespace sceneflow {

struct MetricsConfig {
  double moving_threshold = 0.5;  // m/s, evaluation buckets
  double stat_threshold = 0.1;    // m/s, dataset statistics
  std::vector<double> error_thresholds = {0.1, 1.0};

  bool operator==(const MetricsConfig&) const = default;
};

void ValidateMetricsConfig(const MetricsConfig& cfg);

enum class Bucket { kAll = 0, kMoving = 1, kStationary = 2 };
inline constexpr int kNumBuckets = 3;
const char* BucketName(Bucket b);

struct BucketStats {
  std::size_t count = 0;
  double error_sum = 0.0;
  std::vector<std::size_t> below;  // per error threshold, error < threshold

  double mean() const { return count ? error_sum / static_cast<double>(count) : 0.0; }
  double fraction(std::size_t k) const {
    return count ? static_cast<double>(below[k]) / static_cast<double>(count) : 0.0;
  }
};

// Binary moving classification counts. Precision or recall is empty when
// its denominator is zero.
struct MovingCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::optional<double> precision() const;
  std::optional<double> recall() const;
  void Merge(const MovingCounts& o);
};

struct FlowPredictionView {
  std::span<const Vec3> flow;
  std::span<const std::uint8_t> predicted;  // empty means every point
};

struct MetricsReport {
  MetricsConfig config;
  // [class][bucket]; background is stationary by construction.
  std::array<std::array<BucketStats, kNumBuckets>, kNumClasses> cells;
  std::array<BucketStats, kNumBuckets> overall;
  MovingCounts moving;                                 // all scored points
  std::array<MovingCounts, kNumClasses> moving_by_class;  // by annotated class
  std::size_t unpredicted = 0;  // valid points without a prediction
  std::size_t invalid = 0;

  const BucketStats& at(ObjectClass c, Bucket b) const {
    return cells[static_cast<int>(c)][static_cast<int>(b)];
  }
  std::size_t scored() const { return overall[0].count; }
};

// Accumulates frames into one report; frames must be added in a fixed order
// for bitwise reproducible sums.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(const MetricsConfig& cfg = {});
  void Add(const FlowPredictionView& pred, const FlowAnnotation& ann);
  void Merge(const MetricsAccumulator& other);
  // Throws kNoValidPoints when nothing was scored.
  MetricsReport Report() const;

 private:
  MetricsReport r_;
};

MetricsReport Evaluate(const FlowPredictionView& pred, const FlowAnnotation& ann,
                       const MetricsConfig& cfg = {});

// Moving iff |flow| >= moving_threshold, for annotation and prediction.
// Considers valid points with a prediction; `only` restricts to one class.
MovingCounts BinaryMovingCounts(const FlowPredictionView& pred, const FlowAnnotation& ann,
                                const MetricsConfig& cfg = {},
                                std::optional<ObjectClass> only = std::nullopt);

// One row per (class, bucket): vehicle, pedestrian and cyclist with all /
// moving / stationary, background with all, then overall all / moving /
// stationary.
std::string ReportToCsv(const MetricsReport& r);
std::string ReportToText(const MetricsReport& r);

inline constexpr double kHistogramBinWidth = 0.25;  // m/s
inline constexpr double kHistogramMax = 20.0;
inline constexpr int kHistogramBins = 80;

struct ClassStats {
  std::size_t points = 0;
  std::size_t moving = 0;      // |flow| >= stat_threshold
  std::size_t stationary = 0;
  double moving_speed_sum = 0.0;
  std::array<std::size_t, kHistogramBins> histogram{};
  std::size_t histogram_overflow = 0;  // speeds >= kHistogramMax

  double moving_fraction() const { return points ? double(moving) / double(points) : 0.0; }
  double stationary_fraction() const {
    return points ? double(stationary) / double(points) : 0.0;
  }
  double moving_speed_mean() const { return moving ? moving_speed_sum / double(moving) : 0.0; }
};

struct DatasetStats {
  std::array<ClassStats, kNumClasses> classes;
};

// Valid points only. Throws kNoValidPoints when there are none.
DatasetStats ComputeDatasetStats(std::span<const FlowAnnotation> annotations,
                                 const MetricsConfig& cfg = {});

// Summary rows per class, then one row per (class, histogram bin) with a
// nonzero count.
std::string DatasetStatsToCsv(const DatasetStats& s);

}  // namespace sceneflow

#endif  // SCENEFLOW_METRICS_H_

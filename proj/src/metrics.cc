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

#include "sceneflow/metrics.h"

#include <cmath>
#include <cstdio>

#include "sceneflow/config_text.h"
#include "sceneflow/error.h"

namespace sceneflow {

void ValidateMetricsConfig(const MetricsConfig& cfg) {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok(cfg.moving_threshold) || !ok(cfg.stat_threshold)) {
    throw Error(ErrorCode::kConfig, "metric thresholds must be finite and >= 0");
  }
  for (double t : cfg.error_thresholds) {
    if (!ok(t)) throw Error(ErrorCode::kConfig, "error thresholds must be finite and >= 0");
  }
}

const char* BucketName(Bucket b) {
  switch (b) {
    case Bucket::kAll: return "all";
    case Bucket::kMoving: return "moving";
    case Bucket::kStationary: return "stationary";
  }
  return "?";
}

std::optional<double> MovingCounts::precision() const {
  if (tp + fp == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

std::optional<double> MovingCounts::recall() const {
  if (tp + fn == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

void MovingCounts::Merge(const MovingCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
}

namespace {

void CheckAligned(const FlowPredictionView& pred, const FlowAnnotation& ann) {
  if (pred.flow.size() != ann.points.size() ||
      (!pred.predicted.empty() && pred.predicted.size() != ann.points.size())) {
    throw Error(ErrorCode::kShapeMismatch, "predictions are not aligned with the annotation");
  }
}

void Record(BucketStats& s, double err, const std::vector<double>& thresholds) {
  if (s.below.size() != thresholds.size()) s.below.assign(thresholds.size(), 0);
  ++s.count;
  s.error_sum += err;
  for (std::size_t k = 0; k < thresholds.size(); ++k)
    if (err < thresholds[k]) ++s.below[k];
}

void MergeStats(BucketStats& a, const BucketStats& b) {
  if (a.below.size() < b.below.size()) a.below.resize(b.below.size(), 0);
  a.count += b.count;
  a.error_sum += b.error_sum;
  for (std::size_t k = 0; k < b.below.size(); ++k) a.below[k] += b.below[k];
}

void Classify(MovingCounts& c, bool truth, bool predicted) {
  if (truth && predicted) {
    ++c.tp;
  } else if (predicted) {
    ++c.fp;
  } else if (truth) {
    ++c.fn;
  } else {
    ++c.tn;
  }
}

}  // namespace

MetricsAccumulator::MetricsAccumulator(const MetricsConfig& cfg) {
  ValidateMetricsConfig(cfg);
  r_.config = cfg;
  auto init = [&](BucketStats& s) { s.below.assign(cfg.error_thresholds.size(), 0); };
  for (auto& row : r_.cells)
    for (auto& s : row) init(s);
  for (auto& s : r_.overall) init(s);
}

void MetricsAccumulator::Add(const FlowPredictionView& pred, const FlowAnnotation& ann) {
  CheckAligned(pred, ann);
  const MetricsConfig& cfg = r_.config;
  for (std::size_t i = 0; i < ann.points.size(); ++i) {
    const FlowLabel& l = ann.points[i];
    if (!l.valid) {
      ++r_.invalid;
      continue;
    }
    if (!pred.predicted.empty() && !pred.predicted[i]) {
      ++r_.unpredicted;
      continue;
    }
    const double err = (pred.flow[i] - l.flow).norm();
    const bool moving = l.flow.norm() >= cfg.moving_threshold;
    const int c = static_cast<int>(l.class_id);
    const int b = moving ? static_cast<int>(Bucket::kMoving) : static_cast<int>(Bucket::kStationary);
    Record(r_.cells[c][0], err, cfg.error_thresholds);
    Record(r_.cells[c][b], err, cfg.error_thresholds);
    Record(r_.overall[0], err, cfg.error_thresholds);
    Record(r_.overall[b], err, cfg.error_thresholds);
    const bool pred_moving = pred.flow[i].norm() >= cfg.moving_threshold;
    Classify(r_.moving, moving, pred_moving);
    Classify(r_.moving_by_class[c], moving, pred_moving);
  }
}

void MetricsAccumulator::Merge(const MetricsAccumulator& other) {
  const MetricsReport& o = other.r_;
  for (int c = 0; c < kNumClasses; ++c)
    for (int b = 0; b < kNumBuckets; ++b) MergeStats(r_.cells[c][b], o.cells[c][b]);
  for (int b = 0; b < kNumBuckets; ++b) MergeStats(r_.overall[b], o.overall[b]);
  r_.moving.Merge(o.moving);
  for (int c = 0; c < kNumClasses; ++c) r_.moving_by_class[c].Merge(o.moving_by_class[c]);
  r_.unpredicted += o.unpredicted;
  r_.invalid += o.invalid;
}

MetricsReport MetricsAccumulator::Report() const {
  if (r_.overall[0].count == 0) throw Error(ErrorCode::kNoValidPoints, "no scorable points");
  return r_;
}

MetricsReport Evaluate(const FlowPredictionView& pred, const FlowAnnotation& ann,
                       const MetricsConfig& cfg) {
  MetricsAccumulator acc(cfg);
  acc.Add(pred, ann);
  return acc.Report();
}

MovingCounts BinaryMovingCounts(const FlowPredictionView& pred, const FlowAnnotation& ann,
                                const MetricsConfig& cfg, std::optional<ObjectClass> only) {
  CheckAligned(pred, ann);
  MovingCounts c;
  for (std::size_t i = 0; i < ann.points.size(); ++i) {
    const FlowLabel& l = ann.points[i];
    if (!l.valid || (!pred.predicted.empty() && !pred.predicted[i])) continue;
    if (only && l.class_id != *only) continue;
    Classify(c, l.flow.norm() >= cfg.moving_threshold,
             pred.flow[i].norm() >= cfg.moving_threshold);
  }
  return c;
}

namespace {

struct Row {
  std::string label;
  Bucket bucket;
  const BucketStats* stats;
};

std::vector<Row> ReportRows(const MetricsReport& r) {
  std::vector<Row> rows;
  for (ObjectClass c : {ObjectClass::kVehicle, ObjectClass::kPedestrian, ObjectClass::kCyclist})
    for (Bucket b : {Bucket::kAll, Bucket::kMoving, Bucket::kStationary})
      rows.push_back({std::string(ClassName(c)), b, &r.at(c, b)});
  rows.push_back({std::string(ClassName(ObjectClass::kBackground)), Bucket::kAll,
                  &r.at(ObjectClass::kBackground, Bucket::kAll)});
  for (Bucket b : {Bucket::kAll, Bucket::kMoving, Bucket::kStationary})
    rows.push_back({"overall", b, &r.overall[static_cast<int>(b)]});
  return rows;
}

std::string Opt(const std::optional<double>& v) { return v ? FormatDouble(*v) : "n/a"; }

}  // namespace

std::string ReportToCsv(const MetricsReport& r) {
  std::string s = "class,bucket,count,mean_error";
  for (double t : r.config.error_thresholds) s += ",frac_below_" + FormatDouble(t);
  s += "\n";
  for (const Row& row : ReportRows(r)) {
    s += row.label + "," + BucketName(row.bucket) + "," + std::to_string(row.stats->count) + "," +
         FormatDouble(row.stats->mean());
    for (std::size_t k = 0; k < r.config.error_thresholds.size(); ++k)
      s += "," + FormatDouble(row.stats->fraction(k));
    s += "\n";
  }
  return s;
}

std::string ReportToText(const MetricsReport& r) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-11s %-10s %9s %10s", "class", "bucket", "points", "mean m/s");
  s += buf;
  for (double t : r.config.error_thresholds) {
    std::snprintf(buf, sizeof buf, " %9s", ("<" + FormatDouble(t)).c_str());
    s += buf;
  }
  s += "\n";
  for (const Row& row : ReportRows(r)) {
    std::snprintf(buf, sizeof buf, "%-11s %-10s %9zu %10.4f", row.label.c_str(),
                  BucketName(row.bucket), row.stats->count, row.stats->mean());
    s += buf;
    for (std::size_t k = 0; k < r.config.error_thresholds.size(); ++k) {
      std::snprintf(buf, sizeof buf, " %8.2f%%", 100.0 * row.stats->fraction(k));
      s += buf;
    }
    s += "\n";
  }
  s += "moving precision " + Opt(r.moving.precision()) + ", recall " + Opt(r.moving.recall()) +
       " (threshold " + FormatDouble(r.config.moving_threshold) + " m/s)\n";
  s += "unpredicted " + std::to_string(r.unpredicted) + ", invalid " + std::to_string(r.invalid) +
       "\n";
  return s;
}

DatasetStats ComputeDatasetStats(std::span<const FlowAnnotation> annotations,
                                 const MetricsConfig& cfg) {
  ValidateMetricsConfig(cfg);
  DatasetStats s;
  std::size_t valid = 0;
  for (const FlowAnnotation& a : annotations) {
    for (const FlowLabel& l : a.points) {
      if (!l.valid) continue;
      ++valid;
      ClassStats& c = s.classes[static_cast<int>(l.class_id)];
      ++c.points;
      const double speed = l.flow.norm();
      if (speed < cfg.stat_threshold) {
        ++c.stationary;
        continue;
      }
      ++c.moving;
      c.moving_speed_sum += speed;
      if (speed >= kHistogramMax) {
        ++c.histogram_overflow;
      } else {
        ++c.histogram[static_cast<int>(speed / kHistogramBinWidth)];
      }
    }
  }
  if (valid == 0) throw Error(ErrorCode::kNoValidPoints, "no valid points for statistics");
  return s;
}

std::string DatasetStatsToCsv(const DatasetStats& s) {
  std::string out = "class,points,moving_fraction,stationary_fraction,moving_speed_mean,overflow\n";
  for (int c = 0; c < kNumClasses; ++c) {
    const ClassStats& k = s.classes[c];
    out += std::string(ClassName(static_cast<ObjectClass>(c))) + "," + std::to_string(k.points) +
           "," + FormatDouble(k.moving_fraction()) + "," + FormatDouble(k.stationary_fraction()) +
           "," + FormatDouble(k.moving_speed_mean()) + "," + std::to_string(k.histogram_overflow) +
           "\n";
  }
  out += "class,bin_low,bin_high,count\n";
  for (int c = 0; c < kNumClasses; ++c) {
    const ClassStats& k = s.classes[c];
    for (int b = 0; b < kHistogramBins; ++b) {
      if (k.histogram[b] == 0) continue;
      out += std::string(ClassName(static_cast<ObjectClass>(c))) + "," +
             FormatDouble(b * kHistogramBinWidth) + "," +
             FormatDouble((b + 1) * kHistogramBinWidth) + "," + std::to_string(k.histogram[b]) +
             "\n";
    }
  }
  return out;
}

}  // namespace sceneflow

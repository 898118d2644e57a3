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

#include "sceneflow/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "sceneflow/config_text.h"
#include "sceneflow/error.h"
#include "sceneflow/simd/kernels.h"

namespace sceneflow {

void ValidateBenchOptions(const BenchOptions& o) {
  if (o.sizes.empty()) throw Error(ErrorCode::kInvalidArgument, "no benchmark sizes");
  for (std::size_t i = 0; i < o.sizes.size(); ++i) {
    if (o.sizes[i] == 0) throw Error(ErrorCode::kInvalidArgument, "benchmark size must be >= 1");
    if (i > 0 && o.sizes[i] <= o.sizes[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "benchmark sizes must be strictly increasing");
    }
  }
  if (o.warmup < 0) throw Error(ErrorCode::kInvalidArgument, "warmup must be >= 0");
  if (o.iters < 1) throw Error(ErrorCode::kInvalidArgument, "iters must be >= 1");
}

std::string EnvironmentFingerprint() {
  std::string cpu = "unknown-cpu";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);) {
    if (line.rfind("model name", 0) == 0) {
      const std::size_t colon = line.find(':');
      if (colon != std::string::npos) cpu = line.substr(colon + 2);
      break;
    }
  }
  std::ostringstream os;
  os << "cpu=" << cpu << "; compiler=" <<
#if defined(__clang__)
      "clang "
#elif defined(__GNUC__)
      "gcc "
#endif
     << __VERSION__ << "; build=" <<
#ifdef NDEBUG
      "release"
#else
      "debug"
#endif
     << "; kernels=" << simd::ActiveKernelsF32().name;
  return os.str();
}

std::vector<Point3> BenchCloud(std::size_t n, const GridConfig& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double half = 0.5 * grid.extent;
  std::uniform_real_distribution<double> xy(-half, half), z(grid.z_min, grid.z_max), f(0.0, 1.0);
  std::vector<Point3> pts(n);
  for (Point3& p : pts) {
    p.x = xy(rng);
    p.y = xy(rng);
    p.z = z(rng);
    p.f0 = f(rng);
    p.f1 = f(rng);
  }
  return pts;
}

BenchResult RunLatency(const net::FlowNetModel<float>& model, const BenchOptions& opts) {
  ValidateBenchOptions(opts);
  BenchResult out;
  out.fingerprint = EnvironmentFingerprint();
  const GridConfig& grid = model.config().grid;
  for (std::size_t k = 0; k < opts.sizes.size(); ++k) {
    const std::size_t n = opts.sizes[k];
    const std::vector<Point3> prev = BenchCloud(n, grid, opts.seed * 2 + 2 * k);
    const std::vector<Point3> curr = BenchCloud(n, grid, opts.seed * 2 + 2 * k + 1);
    const net::FramePair pair{prev, curr};
    for (int i = 0; i < opts.warmup; ++i) (void)net::Predict(model, pair);
    std::vector<double> ms(opts.iters);
    for (int i = 0; i < opts.iters; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      const net::FlowPrediction p = net::Predict(model, pair);
      const auto t1 = std::chrono::steady_clock::now();
      ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    LatencyRow row;
    row.points = n;
    row.iterations = opts.iters;
    double sum = 0.0;
    for (double v : ms) sum += v;
    row.mean_ms = sum / opts.iters;
    double sq = 0.0;
    for (double v : ms) sq += (v - row.mean_ms) * (v - row.mean_ms);
    row.std_ms = opts.iters > 1 ? std::sqrt(sq / (opts.iters - 1)) : 0.0;
    out.rows.push_back(row);
  }
  return out;
}

ScalingSummary Summarize(const BenchResult& r) {
  if (r.rows.size() < 2) throw Error(ErrorCode::kInvalidArgument, "scaling needs at least two sizes");
  ScalingSummary s;
  s.ratio = r.rows.back().mean_ms / r.rows.front().mean_ms;
  double mx = 0.0, my = 0.0;
  for (const LatencyRow& row : r.rows) {
    mx += static_cast<double>(row.points);
    my += row.mean_ms;
  }
  mx /= r.rows.size();
  my /= r.rows.size();
  double sxy = 0.0, sxx = 0.0;
  for (const LatencyRow& row : r.rows) {
    const double dx = static_cast<double>(row.points) - mx;
    sxy += dx * (row.mean_ms - my);
    sxx += dx * dx;
  }
  const double slope_ms = sxx > 0.0 ? sxy / sxx : 0.0;
  s.ns_per_point = slope_ms * 1e6;
  s.intercept_ms = my - slope_ms * mx;
  return s;
}

std::string BenchToCsv(const BenchResult& r) {
  std::string out = "# " + r.fingerprint + "\nsize,mean_ms,std_ms,iters\n";
  for (const LatencyRow& row : r.rows) {
    out += std::to_string(row.points) + "," + FormatDouble(row.mean_ms) + "," +
           FormatDouble(row.std_ms) + "," + std::to_string(row.iterations) + "\n";
  }
  return out;
}

BenchResult BenchFromCsv(std::string_view csv) {
  BenchResult r;
  std::istringstream in{std::string(csv)};
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      r.fingerprint = line.substr(2);
      continue;
    }
    if (!header) {
      if (line != "size,mean_ms,std_ms,iters") {
        throw Error(ErrorCode::kConfig, "unexpected benchmark CSV header: " + line);
      }
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 4) throw Error(ErrorCode::kConfig, "benchmark CSV row needs 4 fields: " + line);
    LatencyRow row;
    row.points = static_cast<std::size_t>(ParseInt(f[0]));
    row.mean_ms = ParseDouble(f[1]);
    row.std_ms = ParseDouble(f[2]);
    row.iterations = static_cast<int>(ParseInt(f[3]));
    r.rows.push_back(row);
  }
  if (!header) throw Error(ErrorCode::kConfig, "benchmark CSV has no header");
  return r;
}

namespace {

std::string Fmt(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << v;
  return os.str();
}

}  // namespace

std::string BenchToSvg(const BenchResult& r) {
  constexpr double kW = 480, kH = 320, kL = 64, kR = 16, kT = 24, kB = 48;
  double max_x = 1.0, max_y = 1.0;
  for (const LatencyRow& row : r.rows) {
    max_x = std::max(max_x, static_cast<double>(row.points));
    max_y = std::max(max_y, row.mean_ms + row.std_ms);
  }
  auto px = [&](double x) { return kL + (kW - kL - kR) * x / max_x; };
  auto py = [&](double y) { return kH - kB - (kH - kT - kB) * y / max_y; };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<line x1=\"" << kL << "\" y1=\"" << py(0) << "\" x2=\"" << kW - kR << "\" y2=\"" << py(0)
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << kL << "\" y1=\"" << py(0) << "\" x2=\"" << kL << "\" y2=\"" << kT
     << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << (kW + kL) / 2 << "\" y=\"" << kH - 12
     << "\" text-anchor=\"middle\">points</text>\n"
     << "<text x=\"14\" y=\"" << (kH - kB + kT) / 2 << "\" transform=\"rotate(-90 14 "
     << (kH - kB + kT) / 2 << ")\" text-anchor=\"middle\">latency (ms)</text>\n"
     << "<text x=\"" << kL - 4 << "\" y=\"" << py(max_y) + 4 << "\" text-anchor=\"end\">"
     << Fmt(max_y) << "</text>\n"
     << "<text x=\"" << kL - 4 << "\" y=\"" << py(0) + 4 << "\" text-anchor=\"end\">0</text>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    os << (i ? " " : "") << px(static_cast<double>(r.rows[i].points)) << ","
       << py(r.rows[i].mean_ms);
  }
  os << "\"/>\n";
  for (const LatencyRow& row : r.rows) {
    const double x = px(static_cast<double>(row.points));
    os << "<line x1=\"" << x << "\" y1=\"" << py(row.mean_ms - row.std_ms) << "\" x2=\"" << x
       << "\" y2=\"" << py(row.mean_ms + row.std_ms) << "\" stroke=\"steelblue\"/>\n"
       << "<circle cx=\"" << x << "\" cy=\"" << py(row.mean_ms)
       << "\" r=\"3\" fill=\"steelblue\"/>\n"
       << "<text x=\"" << x << "\" y=\"" << kH - kB + 14 << "\" text-anchor=\"middle\">"
       << row.points / 1000 << "K</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace sceneflow

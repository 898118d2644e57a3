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

#include "sceneflow/pillar_grid.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "sceneflow/error.h"
#include "sceneflow/simd/kernels.h"

namespace sceneflow {

void ValidateGrid(const GridConfig& g) {
  if (!(g.extent > 0.0) || g.cells < 1 || !(g.z_min < g.z_max)) {
    throw Error(ErrorCode::kConfig,
                "grid needs extent > 0, cells >= 1 and z_min < z_max");
  }
}

std::optional<CellIndex> PillarIndex(const Point3& p, const GridConfig& g) {
  if (!(p.z >= g.z_min && p.z <= g.z_max)) return std::nullopt;
  const double half = 0.5 * g.extent;
  const double size = g.cell_size();
  const double fx = std::floor((p.x + half) / size);
  const double fy = std::floor((p.y + half) / size);
  if (!(fx >= 0.0 && fx < g.cells && fy >= 0.0 && fy < g.cells)) {
    return std::nullopt;
  }
  return CellIndex{static_cast<int>(fy), static_cast<int>(fx)};
}

PillarAssignment EncodePoints(std::span<const Point3> points,
                              const GridConfig& g) {
  ValidateGrid(g);
  PillarAssignment a;
  a.grid = g;
  const std::size_t n = points.size();
  a.cell.assign(n, -1);
  a.encoding.assign(n, PointEncoding{});
  const double half = 0.5 * g.extent;
  const double size = g.cell_size();
  const double cz = 0.5 * (g.z_min + g.z_max);
  std::vector<std::int32_t> counts(g.num_cells() + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Point3& p = points[i];
    const auto idx = PillarIndex(p, g);
    if (!idx) continue;
    const std::int32_t flat = idx->row * g.cells + idx->col;
    a.cell[i] = flat;
    ++counts[flat + 1];
    const double cx = -half + (idx->col + 0.5) * size;
    const double cy = -half + (idx->row + 0.5) * size;
    a.encoding[i] = {static_cast<float>(cx),         static_cast<float>(cy),
                     static_cast<float>(cz),         static_cast<float>(p.x - cx),
                     static_cast<float>(p.y - cy),   static_cast<float>(p.z - cz),
                     static_cast<float>(p.f0),       static_cast<float>(p.f1)};
  }
  // Counting sort by cell keeps this linear in N; pillars are then ordered
  // internally by raw coordinates.
  for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
  a.order.resize(static_cast<std::size_t>(counts.back()));
  std::vector<std::int32_t> cursor(counts.begin(), counts.end() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (a.cell[i] >= 0) a.order[cursor[a.cell[i]]++] = static_cast<std::int32_t>(i);
  }
  auto key = [&](std::int32_t i) {
    const Point3& p = points[i];
    return std::tie(p.x, p.y, p.z, p.f0, p.f1);
  };
  std::size_t begin = 0;
  while (begin < a.order.size()) {
    std::size_t end = begin + 1;
    while (end < a.order.size() && a.cell[a.order[end]] == a.cell[a.order[begin]]) ++end;
    if (end - begin > 1) {
      std::stable_sort(a.order.begin() + begin, a.order.begin() + end,
                       [&](std::int32_t l, std::int32_t r) { return key(l) < key(r); });
    }
    begin = end;
  }
  return a;
}

template <typename T>
GridTensor<T> ScatterSum(std::span<const T> features, int depth,
                         const PillarAssignment& a) {
  if (depth < 1 || features.size() != a.size() * static_cast<std::size_t>(depth)) {
    throw Error(ErrorCode::kShapeMismatch,
                "features hold " + std::to_string(features.size()) +
                    " values for " + std::to_string(a.size()) + " points");
  }
  GridTensor<T> grid;
  grid.rows = grid.cols = a.grid.cells;
  grid.depth = depth;
  grid.values.assign(a.grid.num_cells() * depth, T(0));
  simd::Kernels<T>().scatter_add_rows(features.data(), depth, a.cell.data(),
                                      a.order.data(), a.order.size(),
                                      grid.values.data());
  return grid;
}

template <typename T>
std::vector<T> Gather(const GridTensor<T>& grid, const PillarAssignment& a) {
  if (grid.rows != a.grid.cells || grid.cols != a.grid.cells ||
      grid.values.size() != a.grid.num_cells() * grid.depth) {
    throw Error(ErrorCode::kShapeMismatch, "grid does not match assignment");
  }
  std::vector<T> out(a.size() * grid.depth);
  simd::Kernels<T>().gather_rows(grid.values.data(), grid.depth, a.cell.data(),
                                 a.size(), out.data());
  return out;
}

std::vector<std::int32_t> PillarOccupancy(const PillarAssignment& a) {
  std::vector<std::int32_t> counts(a.grid.num_cells(), 0);
  for (std::int32_t c : a.cell) {
    if (c >= 0) ++counts[c];
  }
  return counts;
}

template GridTensor<float> ScatterSum(std::span<const float>, int,
                                      const PillarAssignment&);
template GridTensor<double> ScatterSum(std::span<const double>, int,
                                       const PillarAssignment&);
template std::vector<float> Gather(const GridTensor<float>&,
                                   const PillarAssignment&);
template std::vector<double> Gather(const GridTensor<double>&,
                                    const PillarAssignment&);

}  // namespace sceneflow

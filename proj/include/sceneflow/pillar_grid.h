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

#ifndef SCENEFLOW_PILLAR_GRID_H_
#define SCENEFLOW_PILLAR_GRID_H_

// Dynamic voxelization over a square x-y grid centered on the AV. Columns
// index x, rows index y; cells are half-open so every in-range point lands
// in exactly one pillar. Each pillar spans the whole z range.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sceneflow/geom.h"

namespace sceneflow {

struct GridConfig {
  double extent = 170.0;  // meters per side
  int cells = 512;        // per side
  double z_min = -3.0;
  double z_max = 3.0;

  double cell_size() const { return extent / cells; }
  std::size_t num_cells() const {
    return static_cast<std::size_t>(cells) * static_cast<std::size_t>(cells);
  }
  bool operator==(const GridConfig&) const = default;
};

void ValidateGrid(const GridConfig& g);

struct CellIndex {
  int row = 0;
  int col = 0;
  bool operator==(const CellIndex&) const = default;
};

std::optional<CellIndex> PillarIndex(const Point3& p, const GridConfig& g);

// (c_x, c_y, c_z, d_x, d_y, d_z, f0, f1)
inline constexpr int kEncodingDim = 8;
using PointEncoding = std::array<float, kEncodingDim>;

struct PillarAssignment {
  // Flat cell id row * cells + col, or -1 when the point is out of range.
  std::vector<std::int32_t> cell;
  // Zero-filled for unassigned points.
  std::vector<PointEncoding> encoding;
  // Assigned point indices sorted by cell, then by raw coordinates. Sums
  // taken in this order are bitwise reproducible and do not depend on the
  // input permutation.
  std::vector<std::int32_t> order;
  GridConfig grid;

  std::size_t size() const { return cell.size(); }
  std::size_t assigned() const { return order.size(); }
};

PillarAssignment EncodePoints(std::span<const Point3> points,
                              const GridConfig& g);

// rows x cols x depth, row-major with depth fastest.
template <typename T>
struct GridTensor {
  int rows = 0;
  int cols = 0;
  int depth = 0;
  std::vector<T> values;

  T* cell(std::size_t flat) { return values.data() + flat * depth; }
  const T* cell(std::size_t flat) const { return values.data() + flat * depth; }
};

// Sum of each pillar's point features. `features` is N x depth, row-aligned
// with the assignment.
template <typename T>
GridTensor<T> ScatterSum(std::span<const T> features, int depth,
                         const PillarAssignment& a);

// Per-point copy of its pillar's feature row; unassigned points get zeros
// and are flagged by assignment.cell[i] < 0.
template <typename T>
std::vector<T> Gather(const GridTensor<T>& grid, const PillarAssignment& a);

// Per-cell point counts.
std::vector<std::int32_t> PillarOccupancy(const PillarAssignment& a);

}  // namespace sceneflow

#endif  // SCENEFLOW_PILLAR_GRID_H_

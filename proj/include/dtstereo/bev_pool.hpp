/* Copyright 2026 The dtstereo Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef DTSTEREO_BEV_POOL_HPP_
#define DTSTEREO_BEV_POOL_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dtstereo/geometry.hpp"

namespace dts {

// Pseudo-LiDAR point lifted from one (pixel, depth bin) pair.
struct PseudoPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::int32_t pixel_id = 0;
  std::int32_t bin_id = 0;
};

inline constexpr std::int32_t kOutsideGrid = -1;

// BEV grid geometry. Cell (ix, iy) covers
// [origin_x + ix*cell_size, +cell_size) x [origin_y + iy*cell_size, +cell_size)
// and has flat index ix * ny + iy.
struct BevGridSpec {
  int nx = 1;
  int ny = 1;
  double cell_size = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  int channels = 1;

  void validate() const;
  std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }
  // Flat cell index or kOutsideGrid.
  std::int32_t cell_of(double x, double y) const;
};

struct BevGrid {
  BevGridSpec spec;
  std::vector<double> values;  // nx x ny x C

  explicit BevGrid(const BevGridSpec& s) : spec(s), values(s.cells() * s.channels, 0.0) {}
  double at(int ix, int iy, int c) const {
    return values[(static_cast<std::size_t>(ix) * spec.ny + iy) * spec.channels + c];
  }
};

// P points (pixels) x B bins of depth mass, P x C context, P x B cell indices.
struct PoolInputs {
  int points = 0;
  int bins = 0;
  int channels = 0;
  std::vector<float> depth_probs;
  std::vector<float> context;
  std::vector<std::int32_t> cells;

  void validate(const BevGridSpec& spec) const;
};

struct PoolStats {
  std::size_t accumulated = 0;
  std::size_t dropped = 0;  // out-of-grid (pixel, bin) pairs
};

enum class AccumulationMode {
  // Contributions are summed per cell in a canonical value order, so any
  // permutation of the input points gives bit-identical output.
  kDeterministic,
  // Each worker accumulates its share of points into a private grid; the
  // private grids are reduced afterwards. Summation order depends on the
  // partition.
  kParallel,
};

struct PoolOptions {
  AccumulationMode mode = AccumulationMode::kParallel;
  int threads = 1;
  // Upper bound on the materialized point-feature buffer of pool_v1. Larger
  // inputs are materialized and scattered in point chunks.
  std::size_t v1_buffer_bytes = std::size_t{256} << 20;
};

// Back-projects every (pixel, bin) of `cam` into the frame `target_pose`
// (target-to-global). Point index = pixel * B + bin.
std::vector<PseudoPoint> lift_points(const CameraModel& cam, const std::vector<double>& bins,
                                     const RigidTransform& target_pose);

std::vector<std::int32_t> cells_of_points(const std::vector<PseudoPoint>& points,
                                          const BevGridSpec& grid);

std::vector<std::int32_t> compute_point_cells(const CameraModel& cam,
                                              const std::vector<double>& bins,
                                              const BevGridSpec& grid,
                                              const RigidTransform& target_pose);

// Materializes f[p, b, :] = depth_probs[p, b] * context[p, :] and scatters it.
BevGrid pool_v1(const PoolInputs& in, const BevGridSpec& grid, const PoolOptions& opt = {},
                PoolStats* stats = nullptr);

// Gathers depth mass and context per (point, bin), multiplies and accumulates
// directly into the cell; no point-feature buffer exists.
BevGrid pool_v2(const PoolInputs& in, const BevGridSpec& grid, const PoolOptions& opt = {},
                PoolStats* stats = nullptr);

struct PoolBenchSize {
  int points = 0;
  int bins = 0;
  int channels = 0;
  int nx = 0;
  int ny = 0;
};

struct PoolBenchRow {
  std::string variant;
  PoolBenchSize size;
  double median_ns = 0.0;
  double p90_ns = 0.0;
  double checksum = 0.0;  // sum over the pooled grid
};

// Random inputs with a fixed seed; roughly 10% of pairs fall outside the grid.
PoolInputs random_pool_inputs(const PoolBenchSize& size, std::uint64_t seed);

// Warm-up then `repetitions` timed runs per (variant, size).
std::vector<PoolBenchRow> bench_pool(const std::vector<PoolBenchSize>& sizes, int repetitions,
                                     int warmup, const PoolOptions& opt, std::uint64_t seed);

}  // namespace dts

#endif  // DTSTEREO_BEV_POOL_HPP_

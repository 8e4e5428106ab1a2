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
#include "dtstereo/bev_pool.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include <omp.h>

#include "dtstereo/errors.hpp"

namespace dts {

void BevGridSpec::validate() const {
  if (nx < 1 || ny < 1) throw ConfigError("bev grid: nx and ny must be >= 1");
  if (!(cell_size > 0.0)) throw ConfigError("bev grid: cell_size must be positive");
  if (channels < 1) throw ConfigError("bev grid: channels must be >= 1");
}

std::int32_t BevGridSpec::cell_of(double x, double y) const {
  const double fx = std::floor((x - origin_x) / cell_size);
  const double fy = std::floor((y - origin_y) / cell_size);
  if (!(fx >= 0.0 && fx < nx && fy >= 0.0 && fy < ny)) return kOutsideGrid;
  return static_cast<std::int32_t>(fx) * ny + static_cast<std::int32_t>(fy);
}

void PoolInputs::validate(const BevGridSpec& spec) const {
  spec.validate();
  const std::size_t pairs = static_cast<std::size_t>(points) * bins;
  if (points < 0 || bins < 1 || channels < 1) throw ConfigError("pool inputs: bad shape");
  if (depth_probs.size() != pairs || cells.size() != pairs ||
      context.size() != static_cast<std::size_t>(points) * channels) {
    throw ConfigError("pool inputs: storage does not match shape");
  }
  if (channels != spec.channels) throw ConfigError("pool inputs: channel count differs from grid");
  const auto max_cell = static_cast<std::int64_t>(spec.cells());
  for (auto c : cells) {
    if (c != kOutsideGrid && (c < 0 || c >= max_cell)) {
      throw ConfigError("pool inputs: cell index outside the grid");
    }
  }
}

std::vector<PseudoPoint> lift_points(const CameraModel& cam, const std::vector<double>& bins,
                                     const RigidTransform& target_pose) {
  const RigidTransform cam_to_target = compose(target_pose.inverse(), cam.pose);
  const auto& k = cam.intrinsics;
  std::vector<PseudoPoint> pts;
  pts.reserve(static_cast<std::size_t>(k.width) * k.height * bins.size());
  for (int row = 0; row < k.height; ++row) {
    for (int col = 0; col < k.width; ++col) {
      const auto pixel = static_cast<std::int32_t>(row * k.width + col);
      for (std::size_t b = 0; b < bins.size(); ++b) {
        const Vec3 p = cam_to_target.apply(back_project(k, col, row, bins[b]));
        pts.push_back({p.x(), p.y(), p.z(), pixel, static_cast<std::int32_t>(b)});
      }
    }
  }
  return pts;
}

std::vector<std::int32_t> cells_of_points(const std::vector<PseudoPoint>& points,
                                          const BevGridSpec& grid) {
  std::vector<std::int32_t> cells(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) cells[i] = grid.cell_of(points[i].x, points[i].y);
  return cells;
}

std::vector<std::int32_t> compute_point_cells(const CameraModel& cam,
                                              const std::vector<double>& bins,
                                              const BevGridSpec& grid,
                                              const RigidTransform& target_pose) {
  grid.validate();
  return cells_of_points(lift_points(cam, bins, target_pose), grid);
}

namespace {

// (point * B + bin) pairs in canonical order: by cell, then by the values they
// contribute. Duplicated values are interchangeable, so the resulting summation
// order does not depend on input order.
std::vector<std::size_t> canonical_order(const PoolInputs& in) {
  std::vector<std::size_t> order;
  order.reserve(in.cells.size());
  for (std::size_t i = 0; i < in.cells.size(); ++i) {
    if (in.cells[i] != kOutsideGrid) order.push_back(i);
  }
  const int c = in.channels;
  const int b = in.bins;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (in.cells[x] != in.cells[y]) return in.cells[x] < in.cells[y];
    if (in.depth_probs[x] != in.depth_probs[y]) return in.depth_probs[x] < in.depth_probs[y];
    const float* cx = in.context.data() + (x / b) * c;
    const float* cy = in.context.data() + (y / b) * c;
    return std::lexicographical_compare(cx, cx + c, cy, cy + c);
  });
  return order;
}

std::size_t count_dropped(const PoolInputs& in) {
  return static_cast<std::size_t>(std::count(in.cells.begin(), in.cells.end(), kOutsideGrid));
}

void finish_stats(const PoolInputs& in, PoolStats* stats) {
  if (!stats) return;
  stats->dropped = count_dropped(in);
  stats->accumulated = in.cells.size() - stats->dropped;
}

int worker_count(const PoolOptions& opt) { return std::max(1, opt.threads); }

// Private per-worker grids reduced in worker order.
template <typename Body>
void accumulate_partitioned(const PoolInputs& in, BevGrid& out, int workers, Body&& body) {
  const std::size_t stride = out.values.size();
  std::vector<double> privates(stride * (workers - 1), 0.0);
#pragma omp parallel num_threads(workers)
  {
    const int t = omp_get_thread_num();
    const int nt = omp_get_num_threads();
    double* acc = t == 0 ? out.values.data() : privates.data() + stride * (t - 1);
    const int begin = static_cast<int>(static_cast<long long>(in.points) * t / nt);
    const int end = static_cast<int>(static_cast<long long>(in.points) * (t + 1) / nt);
    body(begin, end, acc);
  }
  for (int t = 1; t < workers; ++t) {
    const double* src = privates.data() + stride * (t - 1);
    for (std::size_t i = 0; i < stride; ++i) out.values[i] += src[i];
  }
}

}  // namespace

BevGrid pool_v1(const PoolInputs& in, const BevGridSpec& grid, const PoolOptions& opt,
                PoolStats* stats) {
  in.validate(grid);
  BevGrid out(grid);
  const int c = in.channels;
  const int b = in.bins;
  const std::size_t row_bytes = sizeof(float) * c;

  if (opt.mode == AccumulationMode::kDeterministic) {
    const auto order = canonical_order(in);
    const std::size_t chunk = std::max<std::size_t>(1, opt.v1_buffer_bytes / row_bytes);
    std::vector<float> features(std::min(chunk, order.size()) * c);
    for (std::size_t start = 0; start < order.size(); start += chunk) {
      const std::size_t stop = std::min(order.size(), start + chunk);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t pair = order[k];
        const float prob = in.depth_probs[pair];
        const float* ctx = in.context.data() + (pair / b) * c;
        float* f = features.data() + (k - start) * c;
        for (int ch = 0; ch < c; ++ch) f[ch] = prob * ctx[ch];
      }
      for (std::size_t k = start; k < stop; ++k) {
        double* cell = out.values.data() + static_cast<std::size_t>(in.cells[order[k]]) * c;
        const float* f = features.data() + (k - start) * c;
        for (int ch = 0; ch < c; ++ch) cell[ch] += f[ch];
      }
    }
    finish_stats(in, stats);
    return out;
  }

  const int workers = worker_count(opt);
  const std::size_t point_bytes = row_bytes * b;
  const int chunk_points = static_cast<int>(
      std::max<std::size_t>(1, opt.v1_buffer_bytes / (point_bytes * workers)));
  accumulate_partitioned(in, out, workers, [&](int begin, int end, double* acc) {
    std::vector<float> features(static_cast<std::size_t>(std::min(chunk_points, end - begin)) *
                                b * c);
    for (int start = begin; start < end; start += chunk_points) {
      const int stop = std::min(end, start + chunk_points);
      // Outer product of depth mass and context for every point in the chunk.
      for (int p = start; p < stop; ++p) {
        const float* ctx = in.context.data() + static_cast<std::size_t>(p) * c;
        for (int bin = 0; bin < b; ++bin) {
          const float prob = in.depth_probs[static_cast<std::size_t>(p) * b + bin];
          float* f = features.data() + (static_cast<std::size_t>(p - start) * b + bin) * c;
          for (int ch = 0; ch < c; ++ch) f[ch] = prob * ctx[ch];
        }
      }
      for (int p = start; p < stop; ++p) {
        for (int bin = 0; bin < b; ++bin) {
          const std::int32_t cell = in.cells[static_cast<std::size_t>(p) * b + bin];
          if (cell == kOutsideGrid) continue;
          const float* f = features.data() + (static_cast<std::size_t>(p - start) * b + bin) * c;
          double* dst = acc + static_cast<std::size_t>(cell) * c;
          for (int ch = 0; ch < c; ++ch) dst[ch] += f[ch];
        }
      }
    }
  });
  finish_stats(in, stats);
  return out;
}

BevGrid pool_v2(const PoolInputs& in, const BevGridSpec& grid, const PoolOptions& opt,
                PoolStats* stats) {
  in.validate(grid);
  BevGrid out(grid);
  const int c = in.channels;
  const int b = in.bins;

  if (opt.mode == AccumulationMode::kDeterministic) {
    for (const std::size_t pair : canonical_order(in)) {
      const float prob = in.depth_probs[pair];
      const float* ctx = in.context.data() + (pair / b) * c;
      double* dst = out.values.data() + static_cast<std::size_t>(in.cells[pair]) * c;
      for (int ch = 0; ch < c; ++ch) dst[ch] += static_cast<float>(prob * ctx[ch]);
    }
    finish_stats(in, stats);
    return out;
  }

  accumulate_partitioned(in, out, worker_count(opt), [&](int begin, int end, double* acc) {
    for (int p = begin; p < end; ++p) {
      const float* ctx = in.context.data() + static_cast<std::size_t>(p) * c;
      for (int bin = 0; bin < b; ++bin) {
        const std::size_t pair = static_cast<std::size_t>(p) * b + bin;
        const std::int32_t cell = in.cells[pair];
        if (cell == kOutsideGrid) continue;
        const float prob = in.depth_probs[pair];
        double* dst = acc + static_cast<std::size_t>(cell) * c;
        for (int ch = 0; ch < c; ++ch) dst[ch] += static_cast<float>(prob * ctx[ch]);
      }
    }
  });
  finish_stats(in, stats);
  return out;
}

PoolInputs random_pool_inputs(const PoolBenchSize& size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  std::uniform_real_distribution<float> signed_unit(-1.0f, 1.0f);
  std::uniform_int_distribution<std::int32_t> cell(0, size.nx * size.ny - 1);
  PoolInputs in;
  in.points = size.points;
  in.bins = size.bins;
  in.channels = size.channels;
  const std::size_t pairs = static_cast<std::size_t>(size.points) * size.bins;
  in.depth_probs.resize(pairs);
  in.cells.resize(pairs);
  in.context.resize(static_cast<std::size_t>(size.points) * size.channels);
  for (int p = 0; p < size.points; ++p) {
    float sum = 0.0f;
    float* row = in.depth_probs.data() + static_cast<std::size_t>(p) * size.bins;
    for (int b = 0; b < size.bins; ++b) sum += (row[b] = unit(rng));
    for (int b = 0; b < size.bins; ++b) row[b] /= sum * 1.0001f;
  }
  for (auto& x : in.context) x = signed_unit(rng);
  for (auto& c : in.cells) c = unit(rng) < 0.1f ? kOutsideGrid : cell(rng);
  return in;
}

std::vector<PoolBenchRow> bench_pool(const std::vector<PoolBenchSize>& sizes, int repetitions,
                                     int warmup, const PoolOptions& opt, std::uint64_t seed) {
  if (sizes.empty()) throw ConfigError("bench_pool: no sizes");
  if (repetitions < 1 || warmup < 0) throw ConfigError("bench_pool: bad repetition counts");
  std::vector<PoolBenchRow> rows;
  for (const auto& size : sizes) {
    const PoolInputs in = random_pool_inputs(size, seed);
    BevGridSpec spec;
    spec.nx = size.nx;
    spec.ny = size.ny;
    spec.channels = size.channels;
    using Kernel = BevGrid (*)(const PoolInputs&, const BevGridSpec&, const PoolOptions&,
                               PoolStats*);
    const std::pair<const char*, Kernel> variants[] = {{"v1", &pool_v1}, {"v2", &pool_v2}};
    for (const auto& [name, kernel] : variants) {
      double checksum = 0.0;
      for (int i = 0; i < warmup; ++i) kernel(in, spec, opt, nullptr);
      std::vector<double> ns;
      for (int i = 0; i < repetitions; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const BevGrid g = kernel(in, spec, opt, nullptr);
        const auto t1 = std::chrono::steady_clock::now();
        ns.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
        if (i == 0) checksum = std::accumulate(g.values.begin(), g.values.end(), 0.0);
      }
      std::sort(ns.begin(), ns.end());
      auto quantile = [&](double q) {
        const std::size_t idx = static_cast<std::size_t>(std::ceil(q * ns.size())) - 1;
        return ns[std::min(idx, ns.size() - 1)];
      };
      const double median = ns.size() % 2 ? ns[ns.size() / 2]
                                          : 0.5 * (ns[ns.size() / 2 - 1] + ns[ns.size() / 2]);
      rows.push_back({name, size, median, quantile(0.9), checksum});
    }
  }
  return rows;
}

}  // namespace dts

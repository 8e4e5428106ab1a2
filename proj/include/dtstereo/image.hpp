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
#ifndef DTSTEREO_IMAGE_HPP_
#define DTSTEREO_IMAGE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dts {

// Row-major H x W scalar grid.
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Grid() = default;
  Grid(int h, int w, double fill = 0.0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  std::size_t size() const { return data.size(); }
  double& operator()(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
  double operator()(int row, int col) const {
    return data[static_cast<std::size_t>(row) * width + col];
  }
  bool same_shape(const Grid& o) const { return height == o.height && width == o.width; }
};

// Row-major H x W x D grid; the innermost axis is contiguous per pixel.
struct Volume {
  int height = 0;
  int width = 0;
  int depth = 0;
  std::vector<double> data;

  Volume() = default;
  Volume(int h, int w, int d, double fill = 0.0)
      : height(h), width(w), depth(d), data(static_cast<std::size_t>(h) * w * d, fill) {}

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::span<double> at(std::size_t pixel) {
    return {data.data() + pixel * depth, static_cast<std::size_t>(depth)};
  }
  std::span<const double> at(std::size_t pixel) const {
    return {data.data() + pixel * depth, static_cast<std::size_t>(depth)};
  }
};

// Dense H x W x C features with a per-pixel validity mask.
struct FeatureMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> values;
  std::vector<std::uint8_t> valid;

  FeatureMap() = default;
  FeatureMap(int h, int w, int c);

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  std::span<float> at(int row, int col) {
    return {values.data() + (static_cast<std::size_t>(row) * width + col) * channels,
            static_cast<std::size_t>(channels)};
  }
  std::span<const float> at(int row, int col) const {
    return {values.data() + (static_cast<std::size_t>(row) * width + col) * channels,
            static_cast<std::size_t>(channels)};
  }
  bool is_valid(int row, int col) const {
    return valid[static_cast<std::size_t>(row) * width + col] != 0;
  }

  // Throws ConfigError on shape problems or non-finite values at valid pixels.
  void validate() const;
};

// Per-pixel sampling offsets (pixels) added to warped coordinates.
struct OffsetField {
  Grid du;
  Grid dv;

  static OffsetField zeros(int h, int w) { return {Grid(h, w), Grid(h, w)}; }
  double max_magnitude() const;
};

// Bilinear interpolation at continuous pixel coordinates (u = column, v = row).
// Returns false when the footprint leaves [0, W-1] x [0, H-1] or touches an
// invalid pixel with nonzero weight; `out` is then unspecified.
bool bilinear_sample(const FeatureMap& feat, double u, double v, std::span<float> out);
std::optional<std::vector<float>> bilinear_sample(const FeatureMap& feat, double u, double v);

// Scalar variant. Pixels whose value is not finite count as invalid.
std::optional<double> bilinear_sample(const Grid& grid, double u, double v);

}  // namespace dts

#endif  // DTSTEREO_IMAGE_HPP_

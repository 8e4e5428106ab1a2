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
#include "dtstereo/image.hpp"

#include <algorithm>
#include <cmath>

#include "dtstereo/errors.hpp"

namespace dts {

FeatureMap::FeatureMap(int h, int w, int c)
    : height(h),
      width(w),
      channels(c),
      values(static_cast<std::size_t>(h) * w * c, 0.0f),
      valid(static_cast<std::size_t>(h) * w, 1) {}

void FeatureMap::validate() const {
  if (height < 1 || width < 1 || channels < 1) throw ConfigError("feature map: empty shape");
  if (values.size() != pixels() * channels || valid.size() != pixels()) {
    throw ConfigError("feature map: storage does not match shape");
  }
  for (std::size_t p = 0; p < pixels(); ++p) {
    if (!valid[p]) continue;
    for (int c = 0; c < channels; ++c) {
      if (!std::isfinite(values[p * channels + c])) {
        throw ConfigError("feature map: non-finite value at a valid pixel");
      }
    }
  }
}

double OffsetField::max_magnitude() const {
  double m = 0.0;
  for (std::size_t i = 0; i < du.size(); ++i) m = std::max(m, std::hypot(du.data[i], dv.data[i]));
  return m;
}

namespace {

struct Footprint {
  int col[2];
  int row[2];
  double weight[4];  // (r0,c0) (r0,c1) (r1,c0) (r1,c1)
};

// Coordinates within this distance outside the image snap onto its border.
constexpr double kEdgeSlack = 1e-9;

double snap(double x, double hi) {
  if (x < 0.0 && x >= -kEdgeSlack) return 0.0;
  if (x > hi && x <= hi + kEdgeSlack) return hi;
  return x;
}

std::optional<Footprint> footprint(int height, int width, double u, double v) {
  u = snap(u, width - 1);
  v = snap(v, height - 1);
  if (!(u >= 0.0 && u <= width - 1) || !(v >= 0.0 && v <= height - 1)) return std::nullopt;
  const int c0 = std::min(static_cast<int>(std::floor(u)), std::max(width - 2, 0));
  const int r0 = std::min(static_cast<int>(std::floor(v)), std::max(height - 2, 0));
  const double fu = u - c0;
  const double fv = v - r0;
  Footprint f;
  f.col[0] = c0;
  f.col[1] = std::min(c0 + 1, width - 1);
  f.row[0] = r0;
  f.row[1] = std::min(r0 + 1, height - 1);
  f.weight[0] = (1.0 - fu) * (1.0 - fv);
  f.weight[1] = fu * (1.0 - fv);
  f.weight[2] = (1.0 - fu) * fv;
  f.weight[3] = fu * fv;
  return f;
}

}  // namespace

bool bilinear_sample(const FeatureMap& feat, double u, double v, std::span<float> out) {
  const auto fp = footprint(feat.height, feat.width, u, v);
  if (!fp) return false;
  const float* taps[4] = {nullptr, nullptr, nullptr, nullptr};
  for (int k = 0; k < 4; ++k) {
    if (fp->weight[k] == 0.0) continue;
    const int row = fp->row[k / 2];
    const int col = fp->col[k % 2];
    if (!feat.is_valid(row, col)) return false;
    taps[k] = feat.at(row, col).data();
  }
  for (int c = 0; c < feat.channels; ++c) {
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      if (taps[k]) acc += fp->weight[k] * taps[k][c];
    }
    out[c] = static_cast<float>(acc);
  }
  return true;
}

std::optional<std::vector<float>> bilinear_sample(const FeatureMap& feat, double u, double v) {
  std::vector<float> out(feat.channels);
  if (!bilinear_sample(feat, u, v, out)) return std::nullopt;
  return out;
}

std::optional<double> bilinear_sample(const Grid& grid, double u, double v) {
  const auto fp = footprint(grid.height, grid.width, u, v);
  if (!fp) return std::nullopt;
  double acc = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double w = fp->weight[k];
    if (w == 0.0) continue;
    const double x = grid(fp->row[k / 2], fp->col[k % 2]);
    if (!std::isfinite(x)) return std::nullopt;
    acc += w * x;
  }
  return acc;
}

}  // namespace dts

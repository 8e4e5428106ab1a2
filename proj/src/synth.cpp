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
#include "dtstereo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "dtstereo/errors.hpp"

namespace dts {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag, double t) {
  std::uint64_t bits = 0;
  static_assert(sizeof(bits) == sizeof(t));
  std::memcpy(&bits, &t, sizeof(t));
  return splitmix(splitmix(seed ^ splitmix(tag)) ^ bits);
}

void require(bool ok, const char* msg) {
  if (!ok) throw ConfigError(msg);
}

// Ray parameter of the nearest entry into an oriented box, if any.
std::optional<double> hit_box(const Landmark& b, const Vec3& origin, const Vec3& dir) {
  const Mat3 r = rotation_z(-b.yaw);
  const Vec3 o = r * (origin - b.center);
  const Vec3 d = r * dir;
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double h = 0.5 * b.size[a];
    if (std::abs(d[a]) < 1e-12) {
      if (std::abs(o[a]) > h) return std::nullopt;
      continue;
    }
    double ta = (-h - o[a]) / d[a];
    double tb = (h - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 <= 0.0) return std::nullopt;  // camera inside the box
  return t0;
}

Landmark object_at(const MovingObject& obj, double t) {
  Landmark b = obj.box;
  b.center += obj.velocity * t;
  return b;
}

}  // namespace

void SceneConfig::validate() const {
  require(width >= 2 && height >= 2, "scene: image must be at least 2x2");
  require(focal > 0.0, "scene: focal must be positive");
  require(channels >= 2 && channels % 2 == 0, "scene: channels must be even and >= 2");
  require(frames >= 1, "scene: frames must be >= 1");
  require(frame_dt > 0.0, "scene: frame_dt must be positive");
  require(camera_height > 0.0, "scene: camera_height must be positive");
  require(object_lane > 2.0, "scene: object_lane must be > 2 m");
  require(wall_distance >= object_lane + 4.0, "scene: wall must lie >= 4 m behind the object lane");
  require(landmarks >= 0 && objects >= 0, "scene: counts must be non-negative");
  require(freq_min > 0.0 && freq_max >= freq_min, "scene: bad frequency range");
  require(feature_amplitude > 0.0, "scene: feature_amplitude must be positive");
  require(feature_noise >= 0.0 && mono_noise >= 0.0 && mono_noise_rel >= 0.0,
          "scene: noise must be non-negative");
  require(depth_min > 0.0 && depth_max > depth_min, "scene: bad depth range");
}

Scene make_scene(const SceneConfig& cfg) {
  cfg.validate();
  Scene s;
  s.cfg = cfg;
  std::mt19937_64 rng(splitmix(cfg.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int pairs = cfg.channels / 2;
  for (int i = 0; i < pairs; ++i) {
    Vec3 d(gauss(rng), gauss(rng), gauss(rng));
    s.directions.push_back(d.normalized());
    const double f = pairs == 1 ? 0.0 : static_cast<double>(i) / (pairs - 1);
    s.frequencies.push_back(cfg.freq_min * std::pow(cfg.freq_max / cfg.freq_min, f));
    s.phases.push_back(2.0 * std::numbers::pi * unit(rng));
  }

  const double t_ref = frame_time(s, cfg.frames - 1);
  const double x_lo = -10.0;
  const double x_hi = cfg.ego_speed * t_ref + 10.0;
  const double lane_y = cfg.object_lane;
  for (int i = 0; i < cfg.landmarks; ++i) {
    Landmark b;
    b.size = Vec3(0.8 + 2.2 * unit(rng), 0.8 + 2.2 * unit(rng), 1.0 + 3.0 * unit(rng));
    b.center = Vec3(x_lo + (x_hi - x_lo) * unit(rng),
                    lane_y + 2.5 + (cfg.wall_distance - lane_y - 4.0) * unit(rng), 0.5 * b.size.z());
    b.yaw = std::numbers::pi * (unit(rng) - 0.5);
    s.landmarks.push_back(b);
  }
  for (int k = 0; k < cfg.objects; ++k) {
    MovingObject o;
    o.box.size = Vec3(4.5, 1.9, 1.6);
    o.velocity = Vec3(cfg.object_speed, 0.0, 0.0);
    const double x_ref = cfg.ego_speed * t_ref + 6.0 * (unit(rng) - 0.5) + 7.0 * k;
    o.box.center = Vec3(x_ref - cfg.object_speed * t_ref, lane_y, 0.8);
    o.code_offset = Vec3(1000.0 * (k + 1) + 37.0 * unit(rng), 500.0 * unit(rng), 250.0);
    s.objects.push_back(o);
  }
  return s;
}

double frame_time(const Scene& scene, int frame) { return frame * scene.cfg.frame_dt; }

CameraModel camera_at(const Scene& scene, double t) {
  const auto& c = scene.cfg;
  CameraModel cam;
  cam.intrinsics = {c.focal, c.focal, 0.5 * (c.width - 1), 0.5 * (c.height - 1), c.width, c.height};
  const double yaw = c.camera_yaw;
  const Vec3 forward(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 down(0.0, 0.0, -1.0);
  const Vec3 right = down.cross(forward);
  cam.pose.rotation.col(0) = right;
  cam.pose.rotation.col(1) = down;
  cam.pose.rotation.col(2) = forward;
  cam.pose.translation = Vec3(c.ego_speed * t, 0.0, c.camera_height);
  return cam;
}

void encode_point(const Scene& scene, const Vec3& p, std::span<float> out) {
  const std::size_t pairs = scene.directions.size();
  for (std::size_t i = 0; i < pairs; ++i) {
    const double a = scene.frequencies[i] * scene.directions[i].dot(p) + scene.phases[i];
    out[2 * i] = static_cast<float>(scene.cfg.feature_amplitude * std::sin(a));
    out[2 * i + 1] = static_cast<float>(scene.cfg.feature_amplitude * std::cos(a));
  }
}

RenderedFrame render(const Scene& scene, const CameraModel& cam, double t,
                     const SourceView* source) {
  const auto& c = scene.cfg;
  const int h = c.height, w = c.width;
  RenderedFrame f;
  f.record.timestamp = t;
  f.record.camera = cam;
  f.record.features = FeatureMap(h, w, c.channels);
  f.record.mono_mu = Grid(h, w);
  f.record.mono_sigma = Grid(h, w);
  f.gt_depth = Grid(h, w);
  f.surface.assign(static_cast<std::size_t>(h) * w, -1);
  f.gt_offsets = OffsetField::zeros(h, w);

  std::vector<Landmark> objects;
  for (const auto& o : scene.objects) objects.push_back(object_at(o, t));

  std::mt19937_64 feat_rng(stream_seed(c.seed, 1, t));
  std::mt19937_64 mono_rng(stream_seed(c.seed, 2, t));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Vec3 origin = cam.pose.translation;
  const double mid = 0.5 * (c.depth_min + c.depth_max);

  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const std::size_t p = static_cast<std::size_t>(row) * w + col;
      const Vec3 dir = cam.pose.rotation * back_project(cam.intrinsics, col, row, 1.0);
      double best = std::numeric_limits<double>::infinity();
      int surface = -1;
      if (dir.z() < 0.0) {
        best = -origin.z() / dir.z();
        surface = 0;
      }
      if (dir.y() > 0.0) {
        const double tw = (c.wall_distance - origin.y()) / dir.y();
        if (tw > 0.0 && tw < best) best = tw, surface = 0;
      }
      for (const auto& b : scene.landmarks) {
        if (auto th = hit_box(b, origin, dir); th && *th < best) best = *th, surface = 0;
      }
      for (std::size_t k = 0; k < objects.size(); ++k) {
        if (auto th = hit_box(objects[k], origin, dir); th && *th < best) {
          best = *th;
          surface = static_cast<int>(k) + 1;
        }
      }
      const double noise_draw = gauss(mono_rng);
      if (surface < 0 || best < c.depth_min || best > c.depth_max) {
        f.record.features.valid[p] = 0;
        f.record.mono_mu.data[p] = mid;
        f.record.mono_sigma.data[p] = 1.0;
        for (int ch = 0; ch < c.channels; ++ch) gauss(feat_rng);
        continue;
      }
      const Vec3 hit = origin + best * dir;
      auto out = f.record.features.at(row, col);
      if (surface == 0) {
        encode_point(scene, hit, out);
      } else {
        const auto& obj = scene.objects[static_cast<std::size_t>(surface - 1)];
        const Landmark& b = objects[static_cast<std::size_t>(surface - 1)];
        encode_point(scene, rotation_z(-b.yaw) * (hit - b.center) + obj.code_offset, out);
        if (source) {
          const Vec3 moved = hit + obj.velocity * (source->t - t);
          const auto truth = project(source->camera.intrinsics,
                                     source->camera.pose.inverse().apply(moved));
          const auto fixed = project(source->camera.intrinsics,
                                     source->camera.pose.inverse().apply(hit));
          if (truth && fixed) {
            f.gt_offsets.du.data[p] = truth->u - fixed->u;
            f.gt_offsets.dv.data[p] = truth->v - fixed->v;
          }
        }
      }
      for (int ch = 0; ch < c.channels; ++ch) {
        out[ch] += static_cast<float>(c.feature_noise * gauss(feat_rng));
      }
      f.record.features.valid[p] = 1;
      f.surface[p] = surface;
      f.gt_depth.data[p] = best;
      const double s = c.mono_noise + c.mono_noise_rel * best;
      f.record.mono_mu.data[p] = std::max(best + s * noise_draw, 0.5);
      f.record.mono_sigma.data[p] = std::max(s * s, 1e-4);
    }
  }
  return f;
}

std::vector<RenderedFrame> render_sequence(const Scene& scene) {
  std::vector<RenderedFrame> out;
  for (int i = 0; i < scene.cfg.frames; ++i) {
    const double t = frame_time(scene, i);
    const CameraModel cam = camera_at(scene, t);
    if (i > 0) {
      const double ts = frame_time(scene, i - 1);
      const SourceView src{camera_at(scene, ts), ts};
      out.push_back(render(scene, cam, t, &src));
    } else {
      out.push_back(render(scene, cam, t));
    }
  }
  return out;
}

namespace {

struct ClassShape {
  double dx, dy;
};
constexpr ClassShape kShapes[] = {{4.5, 1.9}, {0.7, 0.7}, {11.0, 2.9}};  // car, pedestrian, bus

bool overlaps_any(const RotatedBox& b, const std::vector<RotatedBox>& placed, double margin) {
  RotatedBox g = b;
  g.dx += margin;
  g.dy += margin;
  for (const auto& o : placed) {
    RotatedBox h = o;
    h.dx += margin;
    h.dy += margin;
    if (rotated_iou(g, h) > 0.0) return true;
  }
  return false;
}

}  // namespace

NmsCorpus make_random_nms_corpus(std::uint64_t seed, int n) {
  if (n < 0) throw ConfigError("nms corpus: n must be non-negative");
  NmsCorpus c;
  std::mt19937_64 rng(splitmix(seed ^ 0x6e6d73ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double extent = 10.0 + 3.0 * std::sqrt(static_cast<double>(n));
  int attempts = 0;
  while (static_cast<int>(c.boxes.size()) < n && attempts < 100 * n + 100) {
    ++attempts;
    const double pick = unit(rng);
    const int cls = pick < 0.45 ? 0 : (pick < 0.9 ? 1 : 2);
    RotatedBox t;
    t.class_id = cls;
    t.dx = kShapes[cls].dx;
    t.dy = kShapes[cls].dy;
    t.theta = std::numbers::pi * (2.0 * unit(rng) - 1.0);
    if (cls == 1 && !c.truth.empty() && unit(rng) < 0.6) {
      // crowd: next to an existing pedestrian
      const RotatedBox* anchor = nullptr;
      for (int tries = 0; tries < 8 && !anchor; ++tries) {
        const auto& cand = c.truth[static_cast<std::size_t>(unit(rng) * c.truth.size())];
        if (cand.class_id == 1) anchor = &cand;
      }
      if (!anchor) continue;
      const double ang = 2.0 * std::numbers::pi * unit(rng);
      const double dist = 0.8 + 0.4 * unit(rng);
      t.cx = anchor->cx + dist * std::cos(ang);
      t.cy = anchor->cy + dist * std::sin(ang);
    } else {
      t.cx = extent * (2.0 * unit(rng) - 1.0);
      t.cy = extent * (2.0 * unit(rng) - 1.0);
    }
    if (overlaps_any(t, c.truth, 0.1)) continue;
    t.score = 1.0;
    c.truth.push_back(t);
    const int dets = 1 + static_cast<int>(unit(rng) * 3.0);
    const double top = 0.5 + 0.5 * unit(rng);
    for (int d = 0; d < dets && static_cast<int>(c.boxes.size()) < n; ++d) {
      RotatedBox b = t;
      b.cx += 0.05 * t.dx * gauss(rng) * (d > 0);
      b.cy += 0.05 * t.dy * gauss(rng) * (d > 0);
      b.dx *= 1.0 + 0.03 * gauss(rng) * (d > 0);
      b.dy *= 1.0 + 0.03 * gauss(rng) * (d > 0);
      b.theta += 0.03 * gauss(rng) * (d > 0);
      b.score = d == 0 ? top : top * (0.3 + 0.6 * unit(rng));
      c.boxes.push_back(b);
    }
  }
  return c;
}

std::vector<RotatedBox> make_nms_corpus(std::uint64_t seed, int n, const std::string& layout) {
  if (layout == "fig-left-overlap") {
    return {{0.0, 0.0, 4.5, 0.75, 0.0, 0.9, 0}, {0.5, 0.0, 4.5, 0.75, 0.0, 0.8, 0}};
  }
  if (layout == "fig-left-parallel") {
    return {{0.0, 0.0, 4.5, 0.75, 0.0, 0.9, 0}, {0.0, 0.5, 4.5, 0.75, 0.0, 0.8, 0}};
  }
  if (layout == "fig-right-adjacent-small") {
    return {{0.0, 0.0, 0.6, 0.6, 0.0, 0.9, 0}, {0.8, 0.0, 0.6, 0.6, 0.0, 0.8, 0}};
  }
  if (layout == "random") return make_random_nms_corpus(seed, n).boxes;
  throw ConfigError("nms corpus: unknown layout '" + layout + "'");
}

}  // namespace dts

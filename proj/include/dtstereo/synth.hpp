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
#ifndef DTSTEREO_SYNTH_HPP_
#define DTSTEREO_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dtstereo/fusion.hpp"
#include "dtstereo/geometry.hpp"
#include "dtstereo/image.hpp"
#include "dtstereo/nms.hpp"

namespace dts {

struct SceneConfig {
  std::uint64_t seed = 42;
  int width = 176;
  int height = 64;
  double focal = 110.0;
  int channels = 24;
  int frames = 4;
  double frame_dt = 0.5;      // seconds
  double ego_speed = 4.0;     // m/s along global +x
  double camera_height = 1.6;
  double camera_yaw = 1.5707963267948966;  // 0 looks along +x, pi/2 along +y
  double wall_distance = 16.0;             // backdrop plane y = wall_distance
  int landmarks = 10;
  int objects = 0;
  double object_speed = 1.0;  // m/s along +x
  double object_lane = 9.0;   // object centers at y = object_lane
  // Random Fourier encoding: frequencies log-spaced in [min, max] rad/m.
  double freq_min = 0.4;
  double freq_max = 4.0;
  double feature_amplitude = 5.0;  // per sin/cos channel
  double feature_noise = 0.0;  // std per channel
  double mono_noise = 0.4;     // std in meters
  double mono_noise_rel = 0.0; // extra std proportional to depth
  double depth_min = 2.0;      // rendered depths outside are invalid
  double depth_max = 58.0;

  void validate() const;
};

struct Landmark {
  Vec3 center;  // box center, world
  Vec3 size;    // full extents along local x, y, z
  double yaw = 0.0;
};

struct MovingObject {
  Landmark box;  // pose at t = 0
  Vec3 velocity;
  Vec3 code_offset;  // shifts the encoding so objects never match the background
};

struct Scene {
  SceneConfig cfg;
  std::vector<Landmark> landmarks;
  std::vector<MovingObject> objects;
  std::vector<Vec3> directions;  // encoding directions, unit
  std::vector<double> frequencies;
  std::vector<double> phases;
};

Scene make_scene(const SceneConfig& cfg);

double frame_time(const Scene& scene, int frame);
CameraModel camera_at(const Scene& scene, double t);

// Feature encoding of a point in encoding space.
void encode_point(const Scene& scene, const Vec3& p, std::span<float> out);

struct SourceView {
  CameraModel camera;
  double t = 0.0;
};

struct RenderedFrame {
  FrameRecord record;
  Grid gt_depth;               // 0 where nothing valid was hit
  std::vector<int> surface;    // -1 none, 0 static, k + 1 moving object k
  OffsetField gt_offsets;      // true source position minus static warp
};

// Ray casts the scene at time t. With `source`, gt_offsets describes where
// object points actually appear in that view.
RenderedFrame render(const Scene& scene, const CameraModel& cam, double t,
                     const SourceView* source = nullptr);

// Frames 0 .. cfg.frames - 1, oldest first.
std::vector<RenderedFrame> render_sequence(const Scene& scene);

// NMS corpora. Layouts: "fig-left-overlap", "fig-left-parallel",
// "fig-right-adjacent-small" (fixed pairs, n ignored) and "random"
// (n boxes of mixed classes). Unknown layouts throw ConfigError.
std::vector<RotatedBox> make_nms_corpus(std::uint64_t seed, int n, const std::string& layout);

// Random layout together with its underlying objects, for recall checks.
struct NmsCorpus {
  std::vector<RotatedBox> boxes;
  std::vector<RotatedBox> truth;
};
NmsCorpus make_random_nms_corpus(std::uint64_t seed, int n);

}  // namespace dts

#endif  // DTSTEREO_SYNTH_HPP_

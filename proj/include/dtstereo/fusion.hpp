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
#ifndef DTSTEREO_FUSION_HPP_
#define DTSTEREO_FUSION_HPP_

#include <optional>
#include <string>
#include <vector>

#include "dtstereo/bev_pool.hpp"
#include "dtstereo/geometry.hpp"
#include "dtstereo/image.hpp"
#include "dtstereo/stereo.hpp"

namespace dts {

struct FrameRecord {
  double timestamp = 0.0;
  CameraModel camera;  // camera-to-global
  FeatureMap features;
  Grid mono_mu;
  Grid mono_sigma;
};

// Frames are indexed oldest (0) to newest (n - 1).
struct FusionGroup {
  int reference = 0;         // newest frame of the group
  std::vector<int> sources;  // remaining frames, newest first
};

struct FusionPlan {
  std::vector<FusionGroup> groups;  // newest group first
  int interval = 0;
  int missing_groups = 0;  // groups that did not fit; fused as zero grids
};

enum class MissingGroupPolicy { kError, kPadZero };

// Splits n_frames into n_frames / group_size groups of adjacent frames,
// newest first, with `interval` skipped frames between consecutive groups.
FusionPlan make_plan(int n_frames, int group_size, int interval,
                     MissingGroupPolicy policy = MissingGroupPolicy::kError);

// BEV frame attached to a camera: x along the optical axis, y to the left,
// z up (camera -y). Returned as BEV-to-global.
RigidTransform bev_pose(const CameraModel& cam);

// P_cur = T_global2cur * T_prev2global * P_prev; ids are preserved.
std::vector<PseudoPoint> align_points(std::vector<PseudoPoint> points,
                                      const RigidTransform& prev_to_global,
                                      const RigidTransform& global_to_cur);

// Pool inputs for one reference frame whose points are already lifted.
PoolInputs make_pool_inputs(const DepthDistribution& depth, const FeatureMap& context,
                            const std::vector<PseudoPoint>& points, const BevGridSpec& grid);

struct FusionResult {
  BevGrid bev;                     // channels = C * (groups + missing)
  std::vector<BevGrid> per_group;  // newest first, padded groups included
  std::vector<Grid> depths;        // expected fused depth per computed group
};

// Runs the depth pipeline inside every group (reference against its newest
// source), lifts the fused depth into pseudo points, aligns older groups into
// the newest reference's BEV frame and pools each group with pool_v2. `grid`
// describes one group's grid; its channel count must match the features.
FusionResult fuse_sequence(const std::vector<FrameRecord>& frames, const FusionPlan& plan,
                           const StereoConfig& cfg, const BevGridSpec& grid,
                           const PoolOptions& pool = {});

// Sequence manifest: a JSON document listing frames oldest first; every
// array is stored as a flat binary file next to the manifest.
struct ManifestFrame {
  FrameRecord record;
  std::optional<Grid> gt_depth;
  std::optional<OffsetField> gt_offsets;
  std::optional<Grid> surface;  // -1 none, 0 static, k + 1 object k
};

void write_manifest(const std::string& dir, const std::vector<ManifestFrame>& frames,
                    const nlohmann::json& extra = nlohmann::json::object());
std::vector<ManifestFrame> load_manifest(const std::string& path);

}  // namespace dts

#endif  // DTSTEREO_FUSION_HPP_

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
#include "dtstereo/fusion.hpp"

#include <cstdio>
#include <filesystem>

#include "dtstereo/errors.hpp"
#include "dtstereo/io.hpp"

namespace dts {

FusionPlan make_plan(int n_frames, int group_size, int interval, MissingGroupPolicy policy) {
  if (group_size < 2) throw ConfigError("make_plan: group_size must be >= 2");
  if (interval < 0) throw ConfigError("make_plan: interval must be >= 0");
  if (n_frames < group_size) throw ConfigError("make_plan: fewer frames than one group");
  FusionPlan plan;
  plan.interval = interval;
  const int expected = n_frames / group_size;
  for (int g = 0; g < expected; ++g) {
    const int newest = n_frames - 1 - g * (group_size + interval);
    if (newest - group_size + 1 < 0) {
      if (policy == MissingGroupPolicy::kError) {
        throw ConfigError("make_plan: interval leaves room for only " +
                          std::to_string(plan.groups.size()) + " of " + std::to_string(expected) +
                          " groups");
      }
      plan.missing_groups = expected - g;
      break;
    }
    FusionGroup group;
    group.reference = newest;
    for (int k = 1; k < group_size; ++k) group.sources.push_back(newest - k);
    plan.groups.push_back(std::move(group));
  }
  return plan;
}

RigidTransform bev_pose(const CameraModel& cam) {
  RigidTransform camera_from_bev;
  camera_from_bev.rotation << 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0;
  return compose(cam.pose, camera_from_bev);
}

std::vector<PseudoPoint> align_points(std::vector<PseudoPoint> points,
                                      const RigidTransform& prev_to_global,
                                      const RigidTransform& global_to_cur) {
  const RigidTransform t = compose(global_to_cur, prev_to_global);
  for (auto& p : points) {
    const Vec3 q = t.apply(Vec3(p.x, p.y, p.z));
    p.x = q.x();
    p.y = q.y();
    p.z = q.z();
  }
  return points;
}

PoolInputs make_pool_inputs(const DepthDistribution& depth, const FeatureMap& context,
                            const std::vector<PseudoPoint>& points, const BevGridSpec& grid) {
  const int bins = static_cast<int>(depth.bins.size());
  if (depth.probs.height != context.height || depth.probs.width != context.width) {
    throw ConfigError("make_pool_inputs: depth and context shapes differ");
  }
  PoolInputs in;
  in.points = static_cast<int>(context.pixels());
  in.bins = bins;
  in.channels = context.channels;
  if (points.size() != static_cast<std::size_t>(in.points) * bins) {
    throw ConfigError("make_pool_inputs: point count does not match pixels x bins");
  }
  in.depth_probs.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const bool valid = context.valid[static_cast<std::size_t>(points[i].pixel_id)] != 0;
    in.depth_probs[i] = valid ? static_cast<float>(depth.probs.data[i]) : 0.0f;
  }
  in.context = context.values;
  in.cells = cells_of_points(points, grid);
  return in;
}

FusionResult fuse_sequence(const std::vector<FrameRecord>& frames, const FusionPlan& plan,
                           const StereoConfig& cfg, const BevGridSpec& grid,
                           const PoolOptions& pool) {
  grid.validate();
  if (plan.groups.empty()) throw ConfigError("fuse_sequence: empty plan");
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (!(frames[i].timestamp > frames[i - 1].timestamp)) {
      throw ConfigError("fuse_sequence: timestamps must increase strictly");
    }
  }
  for (const auto& g : plan.groups) {
    if (g.reference < 0 || g.reference >= static_cast<int>(frames.size()) || g.sources.empty()) {
      throw ConfigError("fuse_sequence: plan does not match the frames");
    }
    for (int s : g.sources) {
      if (s < 0 || s >= static_cast<int>(frames.size())) {
        throw ConfigError("fuse_sequence: plan does not match the frames");
      }
    }
  }
  const FrameRecord& current = frames[plan.groups.front().reference];
  if (current.features.channels != grid.channels) {
    throw ConfigError("fuse_sequence: grid channels must equal feature channels");
  }
  const RigidTransform global_to_cur = bev_pose(current.camera).inverse();
  const std::vector<double> bins = cfg.bin_centers();

  FusionResult result{BevGrid([&] {
                        BevGridSpec s = grid;
                        s.channels = grid.channels * static_cast<int>(plan.groups.size() +
                                                                      plan.missing_groups);
                        return s;
                      }()),
                      {},
                      {}};
  for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
    const auto& group = plan.groups[gi];
    const FrameRecord& ref = frames[group.reference];
    const FrameRecord& src = frames[group.sources.front()];
    const DepthPipelineResult depth = run_depth_pipeline(
        {ref.features, src.features, ref.camera, src.camera, ref.mono_mu, ref.mono_sigma,
         src.mono_mu, nullptr},
        cfg);
    const RigidTransform prev_to_global = bev_pose(ref.camera);
    auto points = lift_points(ref.camera, bins, prev_to_global);
    if (gi > 0) points = align_points(std::move(points), prev_to_global, global_to_cur);
    result.per_group.push_back(pool_v2(make_pool_inputs(depth.fused, ref.features, points, grid),
                                       grid, pool));
    result.depths.push_back(expected_depth(depth.fused));
  }
  for (int m = 0; m < plan.missing_groups; ++m) result.per_group.emplace_back(grid);

  const int c = grid.channels;
  const int total = result.bev.spec.channels;
  for (std::size_t g = 0; g < result.per_group.size(); ++g) {
    const auto& src = result.per_group[g].values;
    for (std::size_t cell = 0; cell < grid.cells(); ++cell) {
      for (int ch = 0; ch < c; ++ch) {
        result.bev.values[cell * total + g * c + ch] = src[cell * c + ch];
      }
    }
  }
  return result;
}

namespace {

std::string frame_file(int i, const char* what) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frame_%03d_%s.dtsb", i, what);
  return buf;
}

}  // namespace

void write_manifest(const std::string& dir, const std::vector<ManifestFrame>& frames,
                    const nlohmann::json& extra) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
  nlohmann::json doc = extra;
  doc["format"] = "dtstereo-manifest";
  doc["version"] = 1;
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    const int idx = static_cast<int>(i);
    auto put = [&](const char* key, const FlatArray& a) {
      const std::string name = frame_file(idx, key);
      write_flat((fs::path(dir) / name).string(), a);
      return name;
    };
    nlohmann::json e;
    e["timestamp"] = f.record.timestamp;
    e["camera"] = to_json(f.record.camera);
    e["features"] = put("features", to_flat(f.record.features));
    e["mask"] = put("mask", mask_to_flat(f.record.features.height, f.record.features.width,
                                         f.record.features.valid));
    e["mono_mu"] = put("mono_mu", to_flat(f.record.mono_mu));
    e["mono_sigma"] = put("mono_sigma", to_flat(f.record.mono_sigma));
    if (f.gt_depth) e["gt_depth"] = put("gt_depth", to_flat(*f.gt_depth));
    if (f.gt_offsets) {
      e["gt_offset_u"] = put("gt_offset_u", to_flat(f.gt_offsets->du));
      e["gt_offset_v"] = put("gt_offset_v", to_flat(f.gt_offsets->dv));
    }
    if (f.surface) e["surface"] = put("surface", to_flat(*f.surface));
    list.push_back(std::move(e));
  }
  doc["frames"] = std::move(list);
  write_json((fs::path(dir) / "manifest.json").string(), doc);
}

std::vector<ManifestFrame> load_manifest(const std::string& path) {
  namespace fs = std::filesystem;
  const nlohmann::json doc = read_json(path);
  const fs::path base = fs::path(path).parent_path();
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != "dtstereo-manifest") {
    throw DataError("manifest " + path + ": not a dtstereo manifest");
  }
  if (!doc.contains("frames") || !doc["frames"].is_array()) {
    throw DataError("manifest " + path + ": missing frames array");
  }
  std::vector<ManifestFrame> out;
  try {
    for (const auto& e : doc["frames"]) {
      auto get = [&](const char* key) { return read_flat((base / e.at(key).get<std::string>()).string()); };
      ManifestFrame f;
      f.record.timestamp = e.at("timestamp").get<double>();
      f.record.camera = camera_from_json(e.at("camera"));
      f.record.features = features_from_flat(get("features"), get("mask"));
      f.record.mono_mu = grid_from_flat(get("mono_mu"));
      f.record.mono_sigma = grid_from_flat(get("mono_sigma"));
      if (e.contains("gt_depth")) f.gt_depth = grid_from_flat(get("gt_depth"));
      if (e.contains("gt_offset_u")) {
        f.gt_offsets = OffsetField{grid_from_flat(get("gt_offset_u")),
                                   grid_from_flat(get("gt_offset_v"))};
      }
      if (e.contains("surface")) f.surface = grid_from_flat(get("surface"));
      out.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw DataError("manifest " + path + ": " + ex.what());
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (!(out[i].record.timestamp > out[i - 1].record.timestamp)) {
      throw DataError("manifest " + path + ": timestamps must increase strictly");
    }
  }
  return out;
}

}  // namespace dts

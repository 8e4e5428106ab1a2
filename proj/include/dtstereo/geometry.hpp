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
#ifndef DTSTEREO_GEOMETRY_HPP_
#define DTSTEREO_GEOMETRY_HPP_

#include <optional>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace dts {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Warps whose source-frame depth falls at or below this are masked.
inline constexpr double kMinWarpDepth = 1e-6;

// Pinhole intrinsics. Pixel (0, 0) is the top-left pixel center.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws ConfigError when an invariant is violated.
  void validate() const;
  Mat3 matrix() const;
};

// x' = rotation * x + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;

  // Rotation must be orthonormal with determinant +1 to within `tol`.
  void validate(double tol = 1e-9) const;
};

// Returns the transform that applies `b` first, then `a`.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

// Rotation by `angle` radians about +z.
Mat3 rotation_z(double angle);

// Camera frame: +x right, +y down, +z forward along the optical axis.
struct CameraModel {
  CameraIntrinsics intrinsics;
  RigidTransform pose;  // camera-to-global

  void validate() const;
};

// Maps points in `ref` camera coordinates into `src` camera coordinates.
RigidTransform relative_transform(const CameraModel& ref, const CameraModel& src);

struct PixelDepthHypothesis {
  double u = 0.0;
  double v = 0.0;
  double depth = 1.0;
};

struct WarpedPixel {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
};

// Camera-frame point at `depth` along the ray through pixel (u, v).
Vec3 back_project(const CameraIntrinsics& k, double u, double v, double depth);

// Projects a camera-frame point; nullopt when p.z() <= kMinWarpDepth.
std::optional<WarpedPixel> project(const CameraIntrinsics& k, const Vec3& p);

// Homography warp of a reference pixel at a hypothesized depth:
//   [u_s z_s, v_s z_s, z_s]^T = K_src * M * K_ref^-1 * (D [u, v, 1]^T)
// Returns nullopt when the point lands at or behind the source image plane.
std::optional<WarpedPixel> warp_to_source(const PixelDepthHypothesis& hyp,
                                          const CameraIntrinsics& k_ref,
                                          const CameraIntrinsics& k_src,
                                          const RigidTransform& ref_to_src);

// Key-value documents: {fx, fy, cx, cy, width, height, rotation[9], translation[3]}.
nlohmann::json to_json(const CameraModel& cam);
CameraModel camera_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RigidTransform& t);
RigidTransform transform_from_json(const nlohmann::json& doc);

}  // namespace dts

#endif  // DTSTEREO_GEOMETRY_HPP_

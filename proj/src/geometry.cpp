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
#include "dtstereo/geometry.hpp"

#include <cmath>
#include <string>

#include "dtstereo/errors.hpp"

namespace dts {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("intrinsics: focal lengths must be positive");
  if (width < 1 || height < 1) throw ConfigError("intrinsics: image size must be at least 1x1");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw ConfigError("intrinsics: principal point outside the image");
  }
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

void RigidTransform::validate(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw ConfigError("transform: non-finite entries");
  }
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tol) throw ConfigError("transform: rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > tol) {
    throw ConfigError("transform: rotation determinant is not +1");
  }
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Mat3 rotation_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

void CameraModel::validate() const {
  intrinsics.validate();
  pose.validate();
}

RigidTransform relative_transform(const CameraModel& ref, const CameraModel& src) {
  return compose(src.pose.inverse(), ref.pose);
}

Vec3 back_project(const CameraIntrinsics& k, double u, double v, double depth) {
  return {(u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth};
}

std::optional<WarpedPixel> project(const CameraIntrinsics& k, const Vec3& p) {
  if (!(p.z() > kMinWarpDepth)) return std::nullopt;
  return WarpedPixel{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy, p.z()};
}

std::optional<WarpedPixel> warp_to_source(const PixelDepthHypothesis& hyp,
                                          const CameraIntrinsics& k_ref,
                                          const CameraIntrinsics& k_src,
                                          const RigidTransform& ref_to_src) {
  if (!(hyp.depth > 0.0)) return std::nullopt;
  return project(k_src, ref_to_src.apply(back_project(k_ref, hyp.u, hyp.v, hyp.depth)));
}

nlohmann::json to_json(const RigidTransform& t) {
  nlohmann::json rot = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(t.rotation(r, c));
  }
  return {{"rotation", rot},
          {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

RigidTransform transform_from_json(const nlohmann::json& doc) {
  const auto& rot = doc.at("rotation");
  const auto& tr = doc.at("translation");
  if (!rot.is_array() || rot.size() != 9 || !tr.is_array() || tr.size() != 3) {
    throw DataError("transform document needs rotation[9] and translation[3]");
  }
  RigidTransform t;
  for (int i = 0; i < 9; ++i) t.rotation(i / 3, i % 3) = rot[i].get<double>();
  for (int i = 0; i < 3; ++i) t.translation[i] = tr[i].get<double>();
  return t;
}

nlohmann::json to_json(const CameraModel& cam) {
  nlohmann::json doc = to_json(cam.pose);
  const auto& k = cam.intrinsics;
  doc["fx"] = k.fx;
  doc["fy"] = k.fy;
  doc["cx"] = k.cx;
  doc["cy"] = k.cy;
  doc["width"] = k.width;
  doc["height"] = k.height;
  return doc;
}

CameraModel camera_from_json(const nlohmann::json& doc) {
  CameraModel cam;
  try {
    cam.intrinsics.fx = doc.at("fx").get<double>();
    cam.intrinsics.fy = doc.at("fy").get<double>();
    cam.intrinsics.cx = doc.at("cx").get<double>();
    cam.intrinsics.cy = doc.at("cy").get<double>();
    cam.intrinsics.width = doc.at("width").get<int>();
    cam.intrinsics.height = doc.at("height").get<int>();
    cam.pose = transform_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("camera document: ") + e.what());
  }
  cam.validate();
  return cam;
}

}  // namespace dts

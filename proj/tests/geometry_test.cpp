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
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dtstereo/errors.hpp"
#include "dtstereo/geometry.hpp"
#include "dtstereo/image.hpp"
#include "test_util.hpp"

namespace dts {
namespace {

using testing::oracle_warp;
using testing::random_pose;
using testing::test_intrinsics;

void expect_near(const RigidTransform& a, const RigidTransform& b, double tol) {
  EXPECT_LT((a.rotation - b.rotation).cwiseAbs().maxCoeff(), tol);
  EXPECT_LT((a.translation - b.translation).cwiseAbs().maxCoeff(), tol);
}

TEST(Compose, IdentityWithIdentity) {
  expect_near(compose(RigidTransform::identity(), RigidTransform::identity()),
              RigidTransform::identity(), 0.0 + 1e-15);
}

TEST(Compose, WithInverseIsIdentity) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto t = random_pose(rng);
    expect_near(compose(t, t.inverse()), RigidTransform::identity(), 1e-9);
    expect_near(compose(t.inverse(), t), RigidTransform::identity(), 1e-9);
  }
}

TEST(Compose, QuarterTurnAfterTranslation) {
  RigidTransform shift;
  shift.translation = Vec3(1.0, 0.0, 0.0);
  RigidTransform turn;
  turn.rotation = rotation_z(std::numbers::pi / 2);
  // Rotate first, then translate.
  const Vec3 p = compose(shift, turn).apply(Vec3(1.0, 0.0, 0.0));
  EXPECT_NEAR(p.x(), 1.0, 1e-12);
  EXPECT_NEAR(p.y(), 1.0, 1e-12);
  EXPECT_NEAR(p.z(), 0.0, 1e-12);

  // Same product by hand.
  const double r[3][3] = {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}};
  const auto c = compose(shift, turn);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(c.rotation(i, j), r[i][j], 1e-15);
  }
}

TEST(Compose, Associative) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    expect_near(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-9);
  }
}

TEST(Compose, KeepsRotationOrthonormal) {
  std::mt19937_64 rng(3);
  RigidTransform acc;
  for (int i = 0; i < 200; ++i) acc = compose(random_pose(rng), acc);
  EXPECT_NO_THROW(acc.validate(1e-9));
}

TEST(RigidTransform, RejectsReflection) {
  RigidTransform t;
  t.rotation(2, 2) = -1.0;
  EXPECT_THROW(t.validate(), ConfigError);
  t.rotation = Mat3::Identity() * 1.01;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Intrinsics, Validate) {
  EXPECT_NO_THROW(test_intrinsics().validate());
  CameraIntrinsics k = test_intrinsics();
  k.fx = 0.0;
  EXPECT_THROW(k.validate(), ConfigError);
  k = test_intrinsics();
  k.cx = k.width;
  EXPECT_THROW(k.validate(), ConfigError);
  k = test_intrinsics();
  k.height = 0;
  EXPECT_THROW(k.validate(), ConfigError);
}

TEST(RelativeTransform, SamePoseIsIdentity) {
  std::mt19937_64 rng(4);
  CameraModel cam{test_intrinsics(), random_pose(rng)};
  expect_near(relative_transform(cam, cam), RigidTransform::identity(), 1e-12);
}

TEST(RelativeTransform, SourceShiftedAlongX) {
  CameraModel ref{test_intrinsics(), {}};
  CameraModel src = ref;
  src.pose.translation = Vec3(1.0, 0.0, 0.0);
  const auto m = relative_transform(ref, src);
  EXPECT_NEAR(m.translation.x(), -1.0, 1e-15);
  EXPECT_NEAR(m.translation.y(), 0.0, 1e-15);
  EXPECT_NEAR(m.translation.z(), 0.0, 1e-15);
}

TEST(RelativeTransform, RoundTrip) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    CameraModel a{test_intrinsics(), random_pose(rng)};
    CameraModel b{test_intrinsics(), random_pose(rng)};
    expect_near(compose(relative_transform(a, b), relative_transform(b, a)),
                RigidTransform::identity(), 1e-9);
  }
}

TEST(Warp, IdentityKeepsPixel) {
  const auto k = test_intrinsics();
  for (double d : {0.1, 1.0, 7.5, 100.0}) {
    const auto w = warp_to_source({12.25, 30.5, d}, k, k, RigidTransform::identity());
    ASSERT_TRUE(w);
    EXPECT_NEAR(w->u, 12.25, 1e-12);
    EXPECT_NEAR(w->v, 30.5, 1e-12);
    EXPECT_NEAR(w->z, d, 1e-12);
  }
}

TEST(Warp, StepForwardDoublesOffCenterOffsets) {
  const CameraIntrinsics k{50.0, 50.0, 20.0, 10.0, 41, 21};
  RigidTransform m;
  m.translation = Vec3(0.0, 0.0, -1.0);
  const auto center = warp_to_source({20.0, 10.0, 2.0}, k, k, m);
  ASSERT_TRUE(center);
  EXPECT_NEAR(center->z, 1.0, 1e-12);
  EXPECT_NEAR(center->u, 20.0, 1e-12);
  EXPECT_NEAR(center->v, 10.0, 1e-12);
  const auto off = warp_to_source({23.0, 8.0, 2.0}, k, k, m);
  ASSERT_TRUE(off);
  EXPECT_NEAR(off->u - k.cx, 2.0 * 3.0, 1e-12);
  EXPECT_NEAR(off->v - k.cy, 2.0 * -2.0, 1e-12);
  const auto o = oracle_warp(k, k, m, 23.0, 8.0, 2.0);
  EXPECT_NEAR(off->u, o[0], 1e-12);
  EXPECT_NEAR(off->v, o[1], 1e-12);
}

TEST(Warp, BehindSourceIsInvalid) {
  const auto k = test_intrinsics();
  RigidTransform m;
  m.translation = Vec3(0.0, 0.0, -5.0);
  EXPECT_FALSE(warp_to_source({10.0, 10.0, 2.0}, k, k, m));
  m.translation = Vec3(0.0, 0.0, -2.0);
  EXPECT_FALSE(warp_to_source({k.cx, k.cy, 2.0}, k, k, m));
  m.translation = Vec3(0.0, 0.0, -2.0 + 2e-6);
  EXPECT_TRUE(warp_to_source({k.cx, k.cy, 2.0}, k, k, m));
}

TEST(Warp, MatchesOracleOnRandomPoses) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 63.0), v(0.0, 47.0), d(0.5, 60.0);
  const auto kr = test_intrinsics();
  const CameraIntrinsics ks{70.0, 65.0, 30.0, 20.0, 64, 48};
  int checked = 0;
  for (int i = 0; i < 5000; ++i) {
    const auto m = random_pose(rng, 2.0);
    const double uu = u(rng), vv = v(rng), dd = d(rng);
    const auto o = oracle_warp(kr, ks, m, uu, vv, dd);
    const auto w = warp_to_source({uu, vv, dd}, kr, ks, m);
    if (o[2] <= kMinWarpDepth) {
      EXPECT_FALSE(w);
      continue;
    }
    ASSERT_TRUE(w);
    const double scale = 1.0 + std::abs(o[0]) + std::abs(o[1]);
    EXPECT_NEAR(w->u, o[0], 1e-9 * scale);
    EXPECT_NEAR(w->v, o[1], 1e-9 * scale);
    EXPECT_NEAR(w->z, o[2], 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 1000);
}

TEST(Warp, PureRotationIgnoresDepth) {
  std::mt19937_64 rng(7);
  const auto k = test_intrinsics();
  for (int i = 0; i < 200; ++i) {
    auto m = random_pose(rng);
    m.translation.setZero();
    const auto a = warp_to_source({20.0, 15.0, 1.0}, k, k, m);
    const auto b = warp_to_source({20.0, 15.0, 37.0}, k, k, m);
    ASSERT_EQ(bool(a), bool(b));
    if (!a) continue;
    EXPECT_NEAR(a->u, b->u, 1e-9 * (1.0 + std::abs(a->u)));
    EXPECT_NEAR(a->v, b->v, 1e-9 * (1.0 + std::abs(a->v)));
  }
}

TEST(Warp, RoundTripRecoversPixelAndDepth) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 63.0), v(0.0, 47.0), d(1.0, 60.0);
  const auto k = test_intrinsics();
  int n = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto m = random_pose(rng, 1.0);
    const double uu = u(rng), vv = v(rng), dd = d(rng);
    const auto w = warp_to_source({uu, vv, dd}, k, k, m);
    if (!w) continue;
    const auto back = warp_to_source({w->u, w->v, w->z}, k, k, m.inverse());
    ASSERT_TRUE(back);
    EXPECT_NEAR(back->u, uu, 1e-6);
    EXPECT_NEAR(back->v, vv, 1e-6);
    EXPECT_NEAR(back->z, dd, 1e-9 * dd);
    ++n;
  }
  EXPECT_GT(n, 5000);
}

TEST(Camera, JsonRoundTrip) {
  std::mt19937_64 rng(9);
  CameraModel cam{test_intrinsics(), random_pose(rng)};
  const auto back = camera_from_json(nlohmann::json::parse(to_json(cam).dump()));
  EXPECT_DOUBLE_EQ(back.intrinsics.fx, cam.intrinsics.fx);
  EXPECT_DOUBLE_EQ(back.intrinsics.cy, cam.intrinsics.cy);
  EXPECT_EQ(back.intrinsics.width, cam.intrinsics.width);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(back.pose.translation[i], cam.pose.translation[i],
                1e-12 * std::abs(cam.pose.translation[i]));
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(back.pose.rotation(i, j), cam.pose.rotation(i, j), 1e-12);
  }
}

TEST(Camera, JsonRejectsBrokenDocuments) {
  auto doc = to_json(CameraModel{test_intrinsics(), {}});
  doc["rotation"] = {1, 0, 0, 0, 1, 0, 0, 0};
  EXPECT_ANY_THROW(camera_from_json(doc));
  doc = to_json(CameraModel{test_intrinsics(), {}});
  doc["fx"] = -3.0;
  EXPECT_THROW(camera_from_json(doc), ConfigError);
}

FeatureMap ramp(int h, int w, int c) {
  FeatureMap f(h, w, c);
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      for (int k = 0; k < c; ++k) f.at(r, col)[k] = static_cast<float>(r * 100 + col * 3 + k);
    }
  }
  return f;
}

TEST(Bilinear, LatticePointReturnsStoredValue) {
  const auto f = ramp(8, 10, 2);
  const auto s = bilinear_sample(f, 3.0, 5.0);
  ASSERT_TRUE(s);
  EXPECT_FLOAT_EQ((*s)[0], f.at(5, 3)[0]);
  EXPECT_FLOAT_EQ((*s)[1], f.at(5, 3)[1]);
}

TEST(Bilinear, OutOfBoundsIsInvalid) {
  const auto f = ramp(8, 10, 1);
  EXPECT_FALSE(bilinear_sample(f, -0.5, 2.0));
  EXPECT_FALSE(bilinear_sample(f, 9.01, 2.0));
  EXPECT_FALSE(bilinear_sample(f, 2.0, 7.5));
  EXPECT_TRUE(bilinear_sample(f, 9.0, 7.0));
}

TEST(Bilinear, ConstantMapGivesConstant) {
  FeatureMap f(6, 7, 3);
  std::fill(f.values.begin(), f.values.end(), 2.5f);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 6.0), v(0.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const auto s = bilinear_sample(f, u(rng), v(rng));
    ASSERT_TRUE(s);
    for (float x : *s) EXPECT_FLOAT_EQ(x, 2.5f);
  }
}

TEST(Bilinear, LinearFieldIsExact) {
  const auto f = ramp(8, 10, 1);
  const auto s = bilinear_sample(f, 4.25, 2.75);
  ASSERT_TRUE(s);
  EXPECT_NEAR((*s)[0], 2.75 * 100 + 4.25 * 3, 1e-4);
}

TEST(Bilinear, MaskedNeighborInvalidates) {
  auto f = ramp(8, 10, 1);
  f.valid[2 * 10 + 4] = 0;
  EXPECT_FALSE(bilinear_sample(f, 4.5, 2.5));
  EXPECT_FALSE(bilinear_sample(f, 3.5, 1.5));
  EXPECT_TRUE(bilinear_sample(f, 5.0, 2.0));
  EXPECT_TRUE(bilinear_sample(f, 6.5, 2.5));
}

}  // namespace
}  // namespace dts

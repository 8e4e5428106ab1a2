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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>

#include "dtstereo/io.hpp"
#include "dtstereo/nms.hpp"
#include "dtstereo/synth.hpp"

namespace dts {
namespace {

constexpr double kPi = std::numbers::pi;

RotatedBox box(double cx, double cy, double dx, double dy, double theta, double score,
               int cls = 0) {
  return {cx, cy, dx, dy, theta, score, cls};
}

// Fraction of uniform samples inside both boxes, relative to the union.
double monte_carlo_iou(const RotatedBox& a, const RotatedBox& b, int samples,
                       std::uint64_t seed) {
  auto inside = [](const RotatedBox& r, double x, double y) {
    const double c = std::cos(r.theta), s = std::sin(r.theta);
    const double lx = c * (x - r.cx) + s * (y - r.cy);
    const double ly = -s * (x - r.cx) + c * (y - r.cy);
    return std::abs(lx) <= 0.5 * r.dx && std::abs(ly) <= 0.5 * r.dy;
  };
  const double ra = 0.5 * std::hypot(a.dx, a.dy), rb = 0.5 * std::hypot(b.dx, b.dy);
  const double x0 = std::min(a.cx - ra, b.cx - rb), x1 = std::max(a.cx + ra, b.cx + rb);
  const double y0 = std::min(a.cy - ra, b.cy - rb), y1 = std::max(a.cy + ra, b.cy + rb);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
  long both = 0, any = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = ux(rng), y = uy(rng);
    const bool ia = inside(a, x, y), ib = inside(b, x, y);
    both += ia && ib;
    any += ia || ib;
  }
  return any ? static_cast<double>(both) / any : 0.0;
}

TEST(Thresholds, AxisAligned) {
  const auto t = size_aware_thresholds(box(0, 0, 4, 2, 0, 1), box(1, 1, 4, 2, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(t.x, 8.0);
  EXPECT_DOUBLE_EQ(t.y, 4.0);
}

TEST(Thresholds, QuarterTurnSwapsRoles) {
  const auto t =
      size_aware_thresholds(box(0, 0, 4, 2, kPi / 2, 1), box(0, 0, 4, 2, kPi / 2, 1), 1.0);
  EXPECT_NEAR(t.x, 4.0, 1e-12);
  EXPECT_NEAR(t.y, 8.0, 1e-12);
}

TEST(Thresholds, MixedHeadings) {
  const auto t = size_aware_thresholds(box(0, 0, 4, 2, 0, 1), box(0, 0, 4, 2, kPi / 2, 1), 0.5);
  EXPECT_NEAR(t.x, 3.0, 1e-12);
  EXPECT_NEAR(t.y, 3.0, 1e-12);
}

TEST(Thresholds, SignedModeFollowsPrintedFormula) {
  const auto a = box(0, 0, 4, 2, 3 * kPi / 4, 1);
  const auto s = size_aware_thresholds(a, a, 1.0, TrigMode::kSigned);
  const double c = std::cos(a.theta), n = std::sin(a.theta);
  EXPECT_NEAR(s.x, 2 * (c * 4 + n * 2), 1e-12);
  EXPECT_NEAR(s.y, 2 * (c * 2 + n * 4), 1e-12);
  const auto ab = size_aware_thresholds(a, a, 1.0);
  EXPECT_GT(ab.x, 0.0);
  EXPECT_LT(s.x, 0.0);
}

TEST(Thresholds, SymmetricAndScaleCovariant) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.2, 6.0), th(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const auto a = box(0, 0, u(rng), u(rng), th(rng), 0.5);
    const auto b = box(1, 2, u(rng), u(rng), th(rng), 0.5);
    const auto ab = size_aware_thresholds(a, b, 0.7);
    const auto ba = size_aware_thresholds(b, a, 0.7);
    EXPECT_EQ(ab.x, ba.x);
    EXPECT_EQ(ab.y, ba.y);
    auto as = a, bs = b;
    for (auto* r : {&as, &bs}) r->dx *= 2.5, r->dy *= 2.5;
    const auto sc = size_aware_thresholds(as, bs, 0.7);
    EXPECT_NEAR(sc.x, 2.5 * ab.x, 1e-12);
    EXPECT_NEAR(sc.y, 2.5 * ab.y, 1e-12);
  }
}

TEST(SizeAwareNms, DropsExactDuplicate) {
  const std::vector<RotatedBox> b = {box(0, 0, 4, 2, 0, 0.8), box(0, 0, 4, 2, 0, 0.9)};
  EXPECT_EQ(size_aware_circle_nms(b, {}), std::vector<int>{1});
  EXPECT_EQ(circle_nms(b, {}), std::vector<int>{1});
  EXPECT_EQ(rotated_iou_nms(b, {}), std::vector<int>{1});
}

TEST(SizeAwareNms, EmptyInput) {
  EXPECT_TRUE(size_aware_circle_nms({}, {}).empty());
  EXPECT_TRUE(circle_nms({}, {}).empty());
  EXPECT_TRUE(rotated_iou_nms({}, {}).empty());
}

TEST(SizeAwareNms, FigureLayouts) {
  NmsConfig cfg;
  const auto overlap = make_nms_corpus(42, 0, "fig-left-overlap");
  const auto parallel = make_nms_corpus(42, 0, "fig-left-parallel");
  const auto small = make_nms_corpus(42, 0, "fig-right-adjacent-small");
  EXPECT_NEAR(rotated_iou(overlap[0], overlap[1]), 0.8, 1e-12);
  EXPECT_NEAR(rotated_iou(parallel[0], parallel[1]), 0.2, 1e-12);
  EXPECT_EQ(rotated_iou(small[0], small[1]), 0.0);
  const double d_overlap = std::hypot(overlap[1].cx - overlap[0].cx, overlap[1].cy - overlap[0].cy);
  const double d_parallel =
      std::hypot(parallel[1].cx - parallel[0].cx, parallel[1].cy - parallel[0].cy);
  EXPECT_DOUBLE_EQ(d_overlap, d_parallel);
  EXPECT_LT(std::hypot(small[1].cx - small[0].cx, small[1].cy - small[0].cy), cfg.radius);

  EXPECT_EQ(size_aware_circle_nms(overlap, cfg), std::vector<int>{0});
  EXPECT_EQ(size_aware_circle_nms(parallel, cfg), (std::vector<int>{0, 1}));
  EXPECT_EQ(size_aware_circle_nms(small, cfg), (std::vector<int>{0, 1}));
  EXPECT_EQ(circle_nms(overlap, cfg), std::vector<int>{0});
  EXPECT_EQ(circle_nms(parallel, cfg), std::vector<int>{0});
  EXPECT_EQ(circle_nms(small, cfg), std::vector<int>{0});
}

TEST(CircleNms, BoundaryIsStrict) {
  NmsConfig cfg;
  cfg.radius = 2.0;
  const std::vector<RotatedBox> b = {box(0, 0, 1, 1, 0, 0.9), box(2.0, 0, 1, 1, 0, 0.8)};
  EXPECT_EQ(circle_nms(b, cfg), (std::vector<int>{0, 1}));
}

TEST(CircleNms, CollinearTrace) {
  NmsConfig cfg;
  cfg.radius = 2.0;
  const std::vector<RotatedBox> b = {box(0, 0, 0.5, 0.5, 0, 0.9), box(1, 0, 0.5, 0.5, 0, 0.8),
                                     box(2, 0, 0.5, 0.5, 0, 0.7)};
  EXPECT_EQ(circle_nms(b, cfg), (std::vector<int>{0, 2}));
}

TEST(Nms, ClassAwareAndAgnostic) {
  const std::vector<RotatedBox> b = {box(0, 0, 4, 2, 0, 0.9, 0), box(0, 0, 4, 2, 0, 0.8, 1)};
  NmsConfig cfg;
  EXPECT_EQ(size_aware_circle_nms(b, cfg).size(), 2u);
  EXPECT_EQ(circle_nms(b, cfg).size(), 2u);
  cfg.class_agnostic = true;
  EXPECT_EQ(size_aware_circle_nms(b, cfg), std::vector<int>{0});
  EXPECT_EQ(circle_nms(b, cfg), std::vector<int>{0});
  EXPECT_EQ(rotated_iou_nms(b, cfg), std::vector<int>{0});
}

TEST(Nms, TiesKeepLowerIndex) {
  const std::vector<RotatedBox> b = {box(5, 0, 1, 1, 0, 0.5), box(5, 0, 1, 1, 0, 0.5)};
  EXPECT_EQ(size_aware_circle_nms(b, {}), std::vector<int>{0});
  EXPECT_EQ(circle_nms(b, {}), std::vector<int>{0});
  EXPECT_EQ(rotated_iou_nms(b, {}), std::vector<int>{0});
}

using NmsFn = std::vector<int> (*)(const std::vector<RotatedBox>&, const NmsConfig&);

// Brute-force re-statement of the greedy sweep used as an oracle.
std::vector<int> greedy_oracle(const std::vector<RotatedBox>& b, const NmsConfig& cfg,
                               bool (*suppress)(const RotatedBox&, const RotatedBox&,
                                                const NmsConfig&)) {
  std::vector<int> order(b.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return b[i].score > b[j].score || (b[i].score == b[j].score && i < j);
  });
  std::vector<int> kept;
  for (int i : order) {
    bool gone = false;
    for (int k : kept) {
      if ((cfg.class_agnostic || b[k].class_id == b[i].class_id) && suppress(b[k], b[i], cfg)) {
        gone = true;
        break;
      }
    }
    if (!gone) kept.push_back(i);
  }
  return kept;
}

TEST(Nms, MatchesGreedyOracleOnFuzz) {
  auto sa = [](const RotatedBox& k, const RotatedBox& c, const NmsConfig& cfg) {
    const auto t = size_aware_thresholds(k, c, cfg.w);
    return std::abs(k.cx - c.cx) < t.x && std::abs(k.cy - c.cy) < t.y;
  };
  auto ci = [](const RotatedBox& k, const RotatedBox& c, const NmsConfig& cfg) {
    return std::hypot(k.cx - c.cx, k.cy - c.cy) < cfg.radius;
  };
  auto io = [](const RotatedBox& k, const RotatedBox& c, const NmsConfig& cfg) {
    return rotated_iou(k, c) > cfg.iou_threshold;
  };
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto b = make_nms_corpus(seed, 60, "random");
    for (bool agnostic : {false, true}) {
      NmsConfig cfg;
      cfg.class_agnostic = agnostic;
      cfg.w = 0.5;
      EXPECT_EQ(size_aware_circle_nms(b, cfg), greedy_oracle(b, cfg, sa));
      EXPECT_EQ(circle_nms(b, cfg), greedy_oracle(b, cfg, ci));
      EXPECT_EQ(rotated_iou_nms(b, cfg), greedy_oracle(b, cfg, io));
    }
  }
}

TEST(Nms, IdempotentOnKeptSet) {
  const NmsFn fns[] = {&size_aware_circle_nms, &circle_nms, &rotated_iou_nms};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto b = make_nms_corpus(seed, 80, "random");
    for (auto fn : fns) {
      const auto kept = fn(b, {});
      std::vector<RotatedBox> sub;
      for (int k : kept) sub.push_back(b[k]);
      const auto again = fn(sub, {});
      ASSERT_EQ(again.size(), sub.size());
      for (std::size_t i = 0; i < again.size(); ++i) EXPECT_EQ(again[i], static_cast<int>(i));
    }
  }
}

TEST(Nms, SuppressedBoxesHaveAStrongerSuppressor) {
  const NmsConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto b = make_nms_corpus(seed, 80, "random");
    const auto kept = size_aware_circle_nms(b, cfg);
    std::vector<char> is_kept(b.size(), 0);
    for (int k : kept) is_kept[k] = 1;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (is_kept[i]) continue;
      bool found = false;
      for (int k : kept) {
        const auto t = size_aware_thresholds(b[k], b[i], cfg.w);
        const bool stronger = b[k].score > b[i].score ||
                              (b[k].score == b[i].score && k < static_cast<int>(i));
        found = found || (stronger && b[k].class_id == b[i].class_id &&
                          std::abs(b[k].cx - b[i].cx) < t.x && std::abs(b[k].cy - b[i].cy) < t.y);
      }
      EXPECT_TRUE(found) << "box " << i;
    }
  }
}

TEST(Nms, ScaleCovariantKeptSet) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto b = make_nms_corpus(seed, 80, "random");
    const auto base = size_aware_circle_nms(b, {});
    for (auto& r : b) {
      r.cx *= 4.0;
      r.cy *= 4.0;
      r.dx *= 4.0;
      r.dy *= 4.0;
    }
    EXPECT_EQ(size_aware_circle_nms(b, {}), base);
  }
}

TEST(RotatedIou, Examples) {
  const auto a = box(0, 0, 1, 1, 0, 1);
  EXPECT_NEAR(rotated_iou(a, a), 1.0, 1e-12);
  EXPECT_EQ(rotated_iou(a, box(5, 5, 1, 1, 0.3, 1)), 0.0);
  EXPECT_NEAR(rotated_iou(a, box(0.5, 0, 1, 1, 0, 1)), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(monte_carlo_iou(a, box(0.5, 0, 1, 1, 0, 1), 1'000'000, 3), 1.0 / 3.0, 1e-3);
}

TEST(RotatedIou, AgreesWithMonteCarlo) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.3, 4.0), c(-1.5, 1.5), th(-kPi, kPi);
  for (int i = 0; i < 25; ++i) {
    const auto a = box(0, 0, u(rng), u(rng), th(rng), 1);
    const auto b = box(c(rng), c(rng), u(rng), u(rng), th(rng), 1);
    EXPECT_NEAR(rotated_iou(a, b), monte_carlo_iou(a, b, 400'000, i), 4e-3);
    EXPECT_NEAR(rotated_iou(a, b), rotated_iou(b, a), 1e-12);
  }
}

TEST(RotatedIou, InvariantUnderRigidMotionOfBoth) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.3, 4.0), c(-1.5, 1.5), th(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    auto a = box(0, 0, u(rng), u(rng), th(rng), 1);
    auto b = box(c(rng), c(rng), u(rng), u(rng), th(rng), 1);
    const double base = rotated_iou(a, b);
    const double phi = th(rng), tx = c(rng) * 10, ty = c(rng) * 10;
    for (auto* r : {&a, &b}) {
      const double x = r->cx, y = r->cy;
      r->cx = std::cos(phi) * x - std::sin(phi) * y + tx;
      r->cy = std::sin(phi) * x + std::cos(phi) * y + ty;
      r->theta += phi;
    }
    EXPECT_NEAR(rotated_iou(a, b), base, 1e-9);
  }
}

TEST(BoxCsv, RoundTripAndHeader) {
  const auto b = make_nms_corpus(7, 25, "random");
  const auto path = (std::filesystem::temp_directory_path() / "dts_boxes_test.csv").string();
  write_text(path, boxes_to_csv(b));
  const auto back = load_boxes_csv(path);
  ASSERT_EQ(back.size(), b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_DOUBLE_EQ(back[i].cx, b[i].cx);
    EXPECT_DOUBLE_EQ(back[i].theta, b[i].theta);
    EXPECT_EQ(back[i].class_id, b[i].class_id);
  }
  write_text(path, "1,2,3\n");
  EXPECT_ANY_THROW(load_boxes_csv(path));
  std::filesystem::remove(path);
}

TEST(Bench, VariantsKeepEverythingWhenSparse) {
  const std::vector<RotatedBox> one = {box(0, 0, 1, 1, 0, 0.5)};
  for (const auto& r : bench_nms(one, {}, 3, 1)) EXPECT_EQ(r.kept, 1);
  std::vector<RotatedBox> spread;
  for (int i = 0; i < 20; ++i) spread.push_back(box(10.0 * i, 0, 1, 1, 0, 0.5 + 0.01 * i));
  const auto rows = bench_nms(spread, {}, 3, 1);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.kept, 20);
    EXPECT_EQ(r.suppressed, 0);
  }
}

}  // namespace
}  // namespace dts

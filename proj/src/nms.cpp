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
#include "dtstereo/nms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dtstereo/errors.hpp"
#include "dtstereo/io.hpp"

namespace dts {

void NmsConfig::validate() const {
  if (!(w > 0.0)) throw ConfigError("nms: w must be positive");
  if (!(radius > 0.0)) throw ConfigError("nms: radius must be positive");
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw ConfigError("nms: iou_threshold must lie in [0, 1]");
  }
}

AxisThresholds size_aware_thresholds(const RotatedBox& a, const RotatedBox& b, double w,
                                     TrigMode trig) {
  auto extent = [trig](const RotatedBox& box) {
    double c = std::cos(box.theta);
    double s = std::sin(box.theta);
    if (trig == TrigMode::kAbsolute) {
      c = std::abs(c);
      s = std::abs(s);
    }
    return AxisThresholds{c * box.dx + s * box.dy, c * box.dy + s * box.dx};
  };
  const auto ea = extent(a);
  const auto eb = extent(b);
  return {w * (ea.x + eb.x), w * (ea.y + eb.y)};
}

namespace {

std::vector<int> score_order(const std::vector<RotatedBox>& boxes) {
  std::vector<int> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return boxes[i].score > boxes[j].score; });
  return order;
}

template <typename Suppresses>
std::vector<int> greedy_sweep(const std::vector<RotatedBox>& boxes, const NmsConfig& cfg,
                              Suppresses&& suppresses) {
  cfg.validate();
  std::vector<int> kept;
  for (const int i : score_order(boxes)) {
    bool drop = false;
    for (const int k : kept) {
      if (!cfg.class_agnostic && boxes[k].class_id != boxes[i].class_id) continue;
      if (suppresses(boxes[k], boxes[i])) {
        drop = true;
        break;
      }
    }
    if (!drop) kept.push_back(i);
  }
  return kept;
}

}  // namespace

std::vector<int> size_aware_circle_nms(const std::vector<RotatedBox>& boxes, const NmsConfig& cfg) {
  return greedy_sweep(boxes, cfg, [&](const RotatedBox& k, const RotatedBox& c) {
    const auto t = size_aware_thresholds(k, c, cfg.w, cfg.trig);
    return std::abs(k.cx - c.cx) < t.x && std::abs(k.cy - c.cy) < t.y;
  });
}

std::vector<int> circle_nms(const std::vector<RotatedBox>& boxes, const NmsConfig& cfg) {
  const double r2 = cfg.radius * cfg.radius;
  return greedy_sweep(boxes, cfg, [&](const RotatedBox& k, const RotatedBox& c) {
    const double ddx = k.cx - c.cx;
    const double ddy = k.cy - c.cy;
    return ddx * ddx + ddy * ddy < r2;
  });
}

std::vector<int> rotated_iou_nms(const std::vector<RotatedBox>& boxes, const NmsConfig& cfg) {
  return greedy_sweep(boxes, cfg, [&](const RotatedBox& k, const RotatedBox& c) {
    return rotated_iou(k, c) > cfg.iou_threshold;
  });
}

std::vector<std::pair<double, double>> box_corners(const RotatedBox& b) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double hx = 0.5 * b.dx;
  const double hy = 0.5 * b.dy;
  const double local[4][2] = {{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}};
  std::vector<std::pair<double, double>> out;
  for (const auto& l : local) {
    out.emplace_back(b.cx + c * l[0] - s * l[1], b.cy + s * l[0] + c * l[1]);
  }
  return out;
}

namespace {

using Polygon = std::vector<std::pair<double, double>>;

double polygon_area(const Polygon& poly) {
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    acc += p.first * q.second - q.first * p.second;
  }
  return 0.5 * std::abs(acc);
}

// Sutherland-Hodgman: clip `subject` against every edge of the convex,
// counter-clockwise `clip` polygon.
Polygon clip_convex(Polygon subject, const Polygon& clip) {
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const auto a = clip[e];
    const auto b = clip[(e + 1) % clip.size()];
    auto side = [&](const std::pair<double, double>& p) {
      return (b.first - a.first) * (p.second - a.second) -
             (b.second - a.second) * (p.first - a.first);
    };
    Polygon out;
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const auto p = subject[i];
      const auto q = subject[(i + 1) % subject.size()];
      const double sp = side(p);
      const double sq = side(q);
      if (sp >= 0.0) out.push_back(p);
      if ((sp >= 0.0) != (sq >= 0.0)) {
        const double t = sp / (sp - sq);
        out.emplace_back(p.first + t * (q.first - p.first), p.second + t * (q.second - p.second));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

}  // namespace

double rotated_iou(const RotatedBox& a, const RotatedBox& b) {
  const double area_a = a.dx * a.dy;
  const double area_b = b.dx * b.dy;
  const double reach = 0.5 * (std::hypot(a.dx, a.dy) + std::hypot(b.dx, b.dy));
  if (std::hypot(a.cx - b.cx, a.cy - b.cy) >= reach) return 0.0;
  const Polygon inter = clip_convex(box_corners(a), box_corners(b));
  const double overlap = inter.size() < 3 ? 0.0 : polygon_area(inter);
  const double uni = area_a + area_b - overlap;
  return uni > 0.0 ? std::clamp(overlap / uni, 0.0, 1.0) : 0.0;
}

std::vector<RotatedBox> load_boxes_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<RotatedBox> boxes;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("cx", 0) == 0) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 7 && f.size() != 9) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 7 or 9 fields");
    }
    try {
      RotatedBox b{std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]),
                   std::stod(f[4]), std::stod(f[5]), std::stoi(f[6])};
      if (f.size() == 9) b.vx = std::stod(f[7]), b.vy = std::stod(f[8]);
      if (!(b.dx > 0.0 && b.dy > 0.0) || !std::isfinite(b.score)) {
        throw DataError(path + ":" + std::to_string(line_no) + ": invalid box");
      }
      boxes.push_back(b);
    } catch (const std::logic_error&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": unparsable number");
    }
  }
  return boxes;
}

std::string boxes_to_csv(const std::vector<RotatedBox>& boxes) {
  CsvTable t({"cx", "cy", "dx", "dy", "theta", "score", "class_id", "vx", "vy"});
  for (const auto& b : boxes) {
    t.add_row({format_number(b.cx), format_number(b.cy), format_number(b.dx),
               format_number(b.dy), format_number(b.theta), format_number(b.score),
               std::to_string(b.class_id), format_number(b.vx), format_number(b.vy)});
  }
  return t.str();
}

std::vector<NmsBenchRow> bench_nms(const std::vector<RotatedBox>& corpus, const NmsConfig& cfg,
                                   int repetitions, int warmup) {
  if (repetitions < 1 || warmup < 0) throw ConfigError("bench_nms: bad repetition counts");
  using Variant = std::vector<int> (*)(const std::vector<RotatedBox>&, const NmsConfig&);
  const std::pair<const char*, Variant> variants[] = {{"rotated_iou", &rotated_iou_nms},
                                                      {"circle", &circle_nms},
                                                      {"size_aware", &size_aware_circle_nms}};
  std::vector<NmsBenchRow> rows;
  for (const auto& [name, fn] : variants) {
    std::vector<int> kept;
    for (int i = 0; i < warmup; ++i) kept = fn(corpus, cfg);
    std::vector<double> ns;
    for (int i = 0; i < repetitions; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      kept = fn(corpus, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      ns.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
    }
    std::sort(ns.begin(), ns.end());
    const double median = ns.size() % 2 ? ns[ns.size() / 2]
                                        : 0.5 * (ns[ns.size() / 2 - 1] + ns[ns.size() / 2]);
    const int n = static_cast<int>(corpus.size());
    rows.push_back({name, n, median, static_cast<int>(kept.size()), n - static_cast<int>(kept.size())});
  }
  return rows;
}

}  // namespace dts

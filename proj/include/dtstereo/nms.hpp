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
#ifndef DTSTEREO_NMS_HPP_
#define DTSTEREO_NMS_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dts {

// BEV box: center, length d_x along its heading, width d_y, yaw in [-pi, pi).
struct RotatedBox {
  double cx = 0.0;
  double cy = 0.0;
  double dx = 1.0;
  double dy = 1.0;
  double theta = 0.0;
  double score = 0.0;
  int class_id = 0;
  double vx = 0.0;  // m/s, optional
  double vy = 0.0;
};

// How cos/sin of the yaw enter the size-aware thresholds. kSigned is the
// literal formula and goes negative for headings in (pi/2, pi).
enum class TrigMode { kAbsolute, kSigned };

struct NmsConfig {
  double w = 0.3;              // size-aware scale factor
  double radius = 1.0;         // plain circle NMS, meters
  double iou_threshold = 0.5;  // rotated-IoU NMS
  bool class_agnostic = false;
  TrigMode trig = TrigMode::kAbsolute;

  void validate() const;
};

struct AxisThresholds {
  double x = 0.0;
  double y = 0.0;
};

AxisThresholds size_aware_thresholds(const RotatedBox& a, const RotatedBox& b, double w,
                                     TrigMode trig = TrigMode::kAbsolute);

// All greedy sweeps visit boxes by descending score (lower index first on
// ties) and return kept indices in that order. Unless class_agnostic, only
// boxes of the same class suppress each other.
std::vector<int> size_aware_circle_nms(const std::vector<RotatedBox>& boxes, const NmsConfig& cfg);
std::vector<int> circle_nms(const std::vector<RotatedBox>& boxes, const NmsConfig& cfg);
// Suppresses when IoU > iou_threshold.
std::vector<int> rotated_iou_nms(const std::vector<RotatedBox>& boxes, const NmsConfig& cfg);

// Corners in counter-clockwise order.
std::vector<std::pair<double, double>> box_corners(const RotatedBox& b);

// Exact intersection-over-union via convex polygon clipping.
double rotated_iou(const RotatedBox& a, const RotatedBox& b);

std::vector<RotatedBox> load_boxes_csv(const std::string& path);
std::string boxes_to_csv(const std::vector<RotatedBox>& boxes);

struct NmsBenchRow {
  std::string variant;
  int n_boxes = 0;
  double median_ns = 0.0;
  int kept = 0;
  int suppressed = 0;
};

// Warm-up then `repetitions` timed runs of rotated-IoU, circle and size-aware NMS.
std::vector<NmsBenchRow> bench_nms(const std::vector<RotatedBox>& corpus, const NmsConfig& cfg,
                                   int repetitions, int warmup);

}  // namespace dts

#endif  // DTSTEREO_NMS_HPP_

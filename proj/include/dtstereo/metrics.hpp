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
#ifndef DTSTEREO_METRICS_HPP_
#define DTSTEREO_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtstereo/image.hpp"
#include "dtstereo/nms.hpp"

namespace dts {

// Standard depth benchmark errors over masked pixels. silog is scaled by 100.
struct DepthEvalReport {
  double silog = 0.0;
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double log10 = 0.0;
  double rmse = 0.0;
  double mean_abs = 0.0;  // mean |pred - gt|, meters
  std::size_t n_pixels = 0;
};

DepthEvalReport depth_metrics(const Grid& pred, const Grid& gt,
                              const std::vector<std::uint8_t>& mask);

std::vector<std::string> depth_report_header();
std::vector<std::string> depth_report_fields(const DepthEvalReport& r);
nlohmann::json to_json(const DepthEvalReport& r);

struct RecallReport {
  std::vector<double> thresholds;
  std::vector<double> recall;
  bool empty_gt = false;  // recall reported as 1 by convention
};

// Greedy one-to-one matching by ascending center distance; a GT box counts at
// threshold t when its match lies closer than t.
// With min_gt_speed > 0 only ground-truth boxes moving faster than that are scored.
RecallReport center_recall(const std::vector<RotatedBox>& pred, const std::vector<RotatedBox>& gt,
                           const std::vector<double>& thresholds = {0.5, 1.0, 2.0, 4.0},
                           double min_gt_speed = 0.0);

nlohmann::json to_json(const RecallReport& r);

}  // namespace dts

#endif  // DTSTEREO_METRICS_HPP_

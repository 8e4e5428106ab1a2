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
#include "dtstereo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "dtstereo/errors.hpp"
#include "dtstereo/io.hpp"

namespace dts {

DepthEvalReport depth_metrics(const Grid& pred, const Grid& gt,
                              const std::vector<std::uint8_t>& mask) {
  if (!pred.same_shape(gt) || mask.size() != gt.size()) {
    throw ConfigError("depth_metrics: prediction, ground truth and mask shapes differ");
  }
  std::vector<double> logs;
  double sum_e = 0.0, abs_rel = 0.0, sq_rel = 0.0, log10 = 0.0, se = 0.0, ae = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask[i]) continue;
    const double p = pred.data[i];
    const double g = gt.data[i];
    if (!(p > 0.0) || !(g > 0.0) || !std::isfinite(p) || !std::isfinite(g)) {
      throw DataError("depth_metrics: non-positive depth inside the mask");
    }
    const double e = std::log(p) - std::log(g);
    const double d = p - g;
    sum_e += e;
    logs.push_back(e);
    abs_rel += std::abs(d) / g;
    sq_rel += d * d / g;
    log10 += std::abs(std::log10(p) - std::log10(g));
    se += d * d;
    ae += std::abs(d);
    ++n;
  }
  if (n == 0) throw DataError("depth_metrics: empty mask");
  const double inv = 1.0 / static_cast<double>(n);
  const double mean_e = sum_e * inv;
  DepthEvalReport r;
  double var = 0.0;
  for (double e : logs) var += (e - mean_e) * (e - mean_e);
  r.silog = std::sqrt(var * inv) * 100.0;
  r.abs_rel = abs_rel * inv;
  r.sq_rel = sq_rel * inv;
  r.log10 = log10 * inv;
  r.rmse = std::sqrt(se * inv);
  r.mean_abs = ae * inv;
  r.n_pixels = n;
  return r;
}

std::vector<std::string> depth_report_header() {
  return {"silog", "abs_rel", "sq_rel", "log10", "rmse", "mean_abs", "n_pixels"};
}

std::vector<std::string> depth_report_fields(const DepthEvalReport& r) {
  return {format_number(r.silog), format_number(r.abs_rel), format_number(r.sq_rel),
          format_number(r.log10), format_number(r.rmse),    format_number(r.mean_abs),
          std::to_string(r.n_pixels)};
}

nlohmann::json to_json(const DepthEvalReport& r) {
  return {{"silog_x100", r.silog}, {"abs_rel", r.abs_rel}, {"sq_rel", r.sq_rel},
          {"log10", r.log10},      {"rmse", r.rmse},       {"mean_abs", r.mean_abs},
          {"n_pixels", r.n_pixels}};
}

RecallReport center_recall(const std::vector<RotatedBox>& pred,
                           const std::vector<RotatedBox>& all_gt,
                           const std::vector<double>& thresholds, double min_gt_speed) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw ConfigError("center_recall: thresholds must be ascending");
  }
  std::vector<RotatedBox> gt;
  for (const auto& b : all_gt) {
    if (min_gt_speed <= 0.0 || std::hypot(b.vx, b.vy) > min_gt_speed) gt.push_back(b);
  }
  RecallReport report;
  report.thresholds = thresholds;
  if (gt.empty()) {
    report.empty_gt = true;
    report.recall.assign(thresholds.size(), 1.0);
    return report;
  }
  std::vector<std::tuple<double, int, int>> pairs;
  for (int g = 0; g < static_cast<int>(gt.size()); ++g) {
    for (int p = 0; p < static_cast<int>(pred.size()); ++p) {
      pairs.emplace_back(std::hypot(gt[g].cx - pred[p].cx, gt[g].cy - pred[p].cy), g, p);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<double> match(gt.size(), -1.0);
  std::vector<char> used(pred.size(), 0);
  for (const auto& [d, g, p] : pairs) {
    if (match[g] >= 0.0 || used[p]) continue;
    match[g] = d;
    used[p] = 1;
  }
  for (const double t : thresholds) {
    const auto hits = std::count_if(match.begin(), match.end(),
                                    [t](double d) { return d >= 0.0 && d < t; });
    report.recall.push_back(static_cast<double>(hits) / static_cast<double>(gt.size()));
  }
  return report;
}

nlohmann::json to_json(const RecallReport& r) {
  return {{"thresholds", r.thresholds}, {"recall", r.recall}, {"empty_gt", r.empty_gt}};
}

}  // namespace dts

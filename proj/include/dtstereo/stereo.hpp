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
#ifndef DTSTEREO_STEREO_HPP_
#define DTSTEREO_STEREO_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtstereo/geometry.hpp"
#include "dtstereo/image.hpp"

namespace dts {

// Hyperparameters of the candidate search. Sigma is a variance (m^2); the
// candidate window is mu +/- span_factor * sqrt(sigma).
struct StereoConfig {
  int num_splits = 2;
  int candidates = 8;
  double span_factor = 2.0;
  int iterations = 3;
  double similarity_temperature = 1.0;
  double weight_temperature = 1.0;  // meters
  double depth_min = 2.0;
  double depth_max = 58.0;
  int bins = 112;
  double sigma_min = 0.01;
  double sigma_max = 100.0;
  double offset_max = 8.0;  // pixels
  // A pixel is unobservable when its candidate window sweeps less than this
  // many pixels along the epipolar line (static ego, epipole).
  double min_parallax = 0.25;
  // A pixel is unmatched when its best candidate's cosine similarity is lower.
  double min_match_cosine = 0.5;

  void validate() const;
  double split_width() const { return (depth_max - depth_min) / num_splits; }
  std::pair<double, double> split_range(int split) const;
  int split_of(double depth) const;
  std::vector<double> bin_centers() const;
};

nlohmann::json to_json(const StereoConfig& cfg);
// Keys absent from `doc` keep the value from `base`. Unknown keys are errors.
StereoConfig stereo_config_from_json(const nlohmann::json& doc, StereoConfig base = {});
StereoConfig load_stereo_config(const std::string& path, StereoConfig base = {});

struct DepthState {
  Grid mu;     // meters, inside [range_lo, range_hi]
  Grid sigma;  // m^2, inside [sigma_min, sigma_max]
  int split_index = 0;
  double range_lo = 0.0;
  double range_hi = 0.0;
  // Pixels that received at least one stereo update.
  std::vector<std::uint8_t> matched;
};

struct CandidateDepths {
  Volume depths;                        // H x W x N, increasing along N
  std::vector<std::uint8_t> degenerate;  // window collapsed to a point
};

struct CandidateSet {
  Volume depths;
  Volume probs;                          // sums to 1 per pixel
  std::vector<std::uint8_t> valid;       // H x W x N warp/sample validity
  std::vector<std::uint8_t> pixel_valid; // H x W: informative match
};

struct DepthDistribution {
  std::vector<double> bins;  // B global bin centers, meters
  Volume probs;              // H x W x B, normalized per pixel
};

std::vector<DepthState> init_states(const Grid& mono_mu, const Grid& mono_sigma,
                                    const StereoConfig& cfg);

CandidateDepths generate_candidates(const DepthState& state, const StereoConfig& cfg);

// Inner-product similarity against the warped, offset and bilinearly sampled
// source feature, softened by the similarity temperature and normalized over
// the valid candidates. Unmatchable pixels (no valid candidate, no parallax,
// indistinguishable scores, poor best match) get uniform probabilities and
// pixel_valid = 0.
CandidateSet score_candidates(const FeatureMap& ref, const FeatureMap& src, const Volume& depths,
                              const CameraIntrinsics& k_ref, const CameraIntrinsics& k_src,
                              const RigidTransform& ref_to_src, const OffsetField& offsets,
                              const StereoConfig& cfg);

// mu_new = sum_i D_i P_i; unmatched pixels keep `prior_mu`.
Grid update_mu(const CandidateSet& cands, const Grid& prior_mu);

// Linear interpolation of P along the candidate depths, held constant past the ends.
double confidence_at(std::span<const double> depths, std::span<const double> probs, double mu);

// sigma_new = sigma_old / (2 P_mu), clamped; unmatched pixels keep sigma_old.
Grid update_sigma(const DepthState& state, const CandidateSet& cands, const Grid& mu_new,
                  const StereoConfig& cfg);

std::vector<DepthState> iterate(const FeatureMap& ref, const FeatureMap& src,
                                std::vector<DepthState> states, const CameraModel& ref_cam,
                                const CameraModel& src_cam, const OffsetField& offsets,
                                const StereoConfig& cfg);

// exp(-0.5 * ((d - mu) / sqrt(sigma))^2)
inline double gaussian_confidence(double d, double mu, double sigma) {
  const double z = (d - mu) / std::sqrt(sigma);
  return std::exp(-0.5 * z * z);
}

// Without split weights every bin gets the Gaussian of its split and the
// pixel is normalized jointly. With split weights (H x W x R) each split's
// Gaussian is normalized over its own bins and scaled by the weight.
DepthDistribution emit_stereo_distribution(const std::vector<DepthState>& states,
                                           const StereoConfig& cfg,
                                           const Volume* split_weights = nullptr);

// Per-pixel Gaussian over the global bins.
DepthDistribution mono_distribution(const Grid& mu, const Grid& sigma, const StereoConfig& cfg);

// Probability mass of `dist` inside each depth split, H x W x R.
Volume split_masses(const DepthDistribution& dist, const StereoConfig& cfg);

DepthDistribution fuse_mono_stereo(const DepthDistribution& mono, const DepthDistribution& stereo,
                                   const Grid& weight);

// exp(-|z_expected - mono_src(warp)| / weight_temperature), zero where the warp
// or the sample is invalid, or where `stereo_valid` (when given) is zero.
Grid compute_weight_map(const Grid& mu_final, const Grid& mono_ref, const Grid& mono_src,
                        const CameraModel& ref_cam, const CameraModel& src_cam,
                        const StereoConfig& cfg,
                        const std::vector<std::uint8_t>* stereo_valid = nullptr);

Grid expected_depth(const DepthDistribution& dist);

struct DepthPipelineInputs {
  const FeatureMap& ref_features;
  const FeatureMap& src_features;
  const CameraModel& ref_camera;
  const CameraModel& src_camera;
  const Grid& mono_mu;     // reference frame
  const Grid& mono_sigma;  // reference frame
  const Grid& mono_src;    // source frame mono depth
  const OffsetField* offsets = nullptr;
};

struct DepthPipelineResult {
  std::vector<DepthState> states;
  DepthDistribution mono;
  DepthDistribution stereo;
  DepthDistribution fused;
  Grid weight;
  Grid mu_final;
  std::vector<std::uint8_t> stereo_valid;
};

// init -> iterate -> Gaussian emission -> weight map -> mono/stereo fusion.
// The final mu of a pixel comes from the split holding most of its mono mass.
DepthPipelineResult run_depth_pipeline(const DepthPipelineInputs& in, const StereoConfig& cfg);

}  // namespace dts

#endif  // DTSTEREO_STEREO_HPP_

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
#include "dtstereo/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "dtstereo/errors.hpp"

namespace dts {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

std::size_t pixel_index(int row, int col, int width) {
  return static_cast<std::size_t>(row) * width + col;
}

void normalize(std::span<double> row) {
  const double sum = std::accumulate(row.begin(), row.end(), 0.0);
  if (sum > 0.0 && std::isfinite(sum)) {
    for (double& x : row) x /= sum;
  } else {
    std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
  }
}

}  // namespace

void StereoConfig::validate() const {
  require(num_splits >= 1, "stereo config: num_splits must be >= 1");
  require(candidates >= 2, "stereo config: candidates must be >= 2");
  require(span_factor > 0.0, "stereo config: span_factor must be positive");
  require(iterations >= 0, "stereo config: iterations must be >= 0");
  require(similarity_temperature > 0.0, "stereo config: similarity_temperature must be positive");
  require(weight_temperature > 0.0, "stereo config: weight_temperature must be positive");
  require(depth_min > 0.0 && depth_max > depth_min, "stereo config: need 0 < depth_min < depth_max");
  require(bins >= 2, "stereo config: bins must be >= 2");
  require(sigma_min > 0.0 && sigma_max >= sigma_min, "stereo config: need 0 < sigma_min <= sigma_max");
  require(offset_max >= 0.0, "stereo config: offset_max must be nonnegative");
  require(min_parallax >= 0.0, "stereo config: min_parallax must be nonnegative");
}

std::pair<double, double> StereoConfig::split_range(int split) const {
  const double w = split_width();
  const double lo = depth_min + split * w;
  const double hi = split == num_splits - 1 ? depth_max : depth_min + (split + 1) * w;
  return {lo, hi};
}

int StereoConfig::split_of(double depth) const {
  const int s = static_cast<int>(std::floor((depth - depth_min) / split_width()));
  return std::clamp(s, 0, num_splits - 1);
}

std::vector<double> StereoConfig::bin_centers() const {
  std::vector<double> centers(bins);
  const double step = (depth_max - depth_min) / bins;
  for (int b = 0; b < bins; ++b) centers[b] = depth_min + (b + 0.5) * step;
  return centers;
}

nlohmann::json to_json(const StereoConfig& c) {
  return {{"num_splits", c.num_splits},
          {"candidates", c.candidates},
          {"span_factor", c.span_factor},
          {"iterations", c.iterations},
          {"similarity_temperature", c.similarity_temperature},
          {"weight_temperature", c.weight_temperature},
          {"depth_min", c.depth_min},
          {"depth_max", c.depth_max},
          {"bins", c.bins},
          {"sigma_min", c.sigma_min},
          {"sigma_max", c.sigma_max},
          {"offset_max", c.offset_max},
          {"min_parallax", c.min_parallax},
          {"min_match_cosine", c.min_match_cosine}};
}

StereoConfig stereo_config_from_json(const nlohmann::json& doc, StereoConfig c) {
  if (!doc.is_object()) throw DataError("stereo config: expected a key-value object");
  const auto known = to_json(c);
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw DataError("stereo config: unknown key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("num_splits", c.num_splits);
    get("candidates", c.candidates);
    get("span_factor", c.span_factor);
    get("iterations", c.iterations);
    get("similarity_temperature", c.similarity_temperature);
    get("weight_temperature", c.weight_temperature);
    get("depth_min", c.depth_min);
    get("depth_max", c.depth_max);
    get("bins", c.bins);
    get("sigma_min", c.sigma_min);
    get("sigma_max", c.sigma_max);
    get("offset_max", c.offset_max);
    get("min_parallax", c.min_parallax);
    get("min_match_cosine", c.min_match_cosine);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("stereo config: ") + e.what());
  }
  c.validate();
  return c;
}

StereoConfig load_stereo_config(const std::string& path, StereoConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stereo config " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("stereo config " + path + ": " + e.what());
  }
  return stereo_config_from_json(doc, base);
}

std::vector<DepthState> init_states(const Grid& mono_mu, const Grid& mono_sigma,
                                    const StereoConfig& cfg) {
  cfg.validate();
  require(mono_mu.same_shape(mono_sigma), "init_states: mu/sigma shape mismatch");
  for (std::size_t i = 0; i < mono_mu.size(); ++i) {
    require(positive_finite(mono_mu.data[i]) && positive_finite(mono_sigma.data[i]),
            "init_states: mono mu and sigma must be finite and positive");
  }
  std::vector<DepthState> states;
  for (int r = 0; r < cfg.num_splits; ++r) {
    const auto [lo, hi] = cfg.split_range(r);
    DepthState s;
    s.split_index = r;
    s.range_lo = lo;
    s.range_hi = hi;
    s.mu = Grid(mono_mu.height, mono_mu.width);
    s.sigma = Grid(mono_mu.height, mono_mu.width);
    s.matched.assign(mono_mu.size(), 0);
    for (std::size_t i = 0; i < mono_mu.size(); ++i) {
      const double m = mono_mu.data[i];
      if (cfg.num_splits == 1) {
        s.mu.data[i] = std::clamp(m, lo, hi);
      } else {
        s.mu.data[i] = (m >= lo && m <= hi) ? m : 0.5 * (lo + hi);
      }
      s.sigma.data[i] = std::clamp(mono_sigma.data[i], cfg.sigma_min, cfg.sigma_max);
    }
    states.push_back(std::move(s));
  }
  return states;
}

CandidateDepths generate_candidates(const DepthState& state, const StereoConfig& cfg) {
  const int n = cfg.candidates;
  CandidateDepths out{Volume(state.mu.height, state.mu.width, n), {}};
  out.degenerate.assign(state.mu.size(), 0);
  for (std::size_t p = 0; p < state.mu.size(); ++p) {
    const double mu = state.mu.data[p];
    const double half = cfg.span_factor * std::sqrt(state.sigma.data[p]);
    const double lo = std::clamp(mu - half, state.range_lo, state.range_hi);
    const double hi = std::clamp(mu + half, state.range_lo, state.range_hi);
    auto d = out.depths.at(p);
    if (!(hi > lo)) {
      out.degenerate[p] = 1;
      std::fill(d.begin(), d.end(), lo);
      continue;
    }
    const double step = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) d[i] = lo + i * step;
    d[n - 1] = hi;
  }
  return out;
}

CandidateSet score_candidates(const FeatureMap& ref, const FeatureMap& src, const Volume& depths,
                              const CameraIntrinsics& k_ref, const CameraIntrinsics& k_src,
                              const RigidTransform& ref_to_src, const OffsetField& offsets,
                              const StereoConfig& cfg) {
  require(ref.channels == src.channels, "score_candidates: channel count mismatch");
  require(depths.height == ref.height && depths.width == ref.width,
          "score_candidates: candidate grid does not match the reference features");
  require(offsets.du.height == ref.height && offsets.du.width == ref.width &&
              offsets.dv.same_shape(offsets.du),
          "score_candidates: offset field shape mismatch");
  require(offsets.max_magnitude() <= cfg.offset_max + 1e-12,
          "score_candidates: offset magnitude exceeds offset_max");

  const int h = ref.height;
  const int w = ref.width;
  const int n = depths.depth;
  const int channels = ref.channels;
  CandidateSet out;
  out.depths = depths;
  out.probs = Volume(h, w, n);
  out.valid.assign(static_cast<std::size_t>(h) * w * n, 0);
  out.pixel_valid.assign(static_cast<std::size_t>(h) * w, 0);

#pragma omp parallel
  {
    std::vector<float> sample(channels);
    std::vector<double> scores(n);
#pragma omp for schedule(static)
    for (int row = 0; row < h; ++row) {
      for (int col = 0; col < w; ++col) {
        const std::size_t p = pixel_index(row, col, w);
        auto probs = out.probs.at(p);
        const auto d = depths.at(p);
        std::uint8_t* valid = out.valid.data() + p * n;
        bool informative = false;

        if (ref.is_valid(row, col)) {
          const auto rf = ref.at(row, col);
          double ref_norm2 = 0.0;
          for (int c = 0; c < channels; ++c) ref_norm2 += double(rf[c]) * rf[c];
          int count = 0;
          double first_u = 0.0, first_v = 0.0, last_u = 0.0, last_v = 0.0;
          double best = -std::numeric_limits<double>::infinity();
          double worst = std::numeric_limits<double>::infinity();
          double best_cos = -1.0;
          for (int i = 0; i < n; ++i) {
            const auto warped = warp_to_source({double(col), double(row), d[i]}, k_ref, k_src,
                                               ref_to_src);
            if (!warped) continue;
            const double u = warped->u + offsets.du.data[p];
            const double v = warped->v + offsets.dv.data[p];
            if (!bilinear_sample(src, u, v, sample)) continue;
            double dot = 0.0, norm2 = 0.0;
            for (int c = 0; c < channels; ++c) {
              dot += double(rf[c]) * sample[c];
              norm2 += double(sample[c]) * sample[c];
            }
            valid[i] = 1;
            scores[i] = dot / cfg.similarity_temperature;
            if (count == 0) {
              first_u = warped->u;
              first_v = warped->v;
            }
            last_u = warped->u;
            last_v = warped->v;
            ++count;
            if (scores[i] > best) {
              best = scores[i];
              const double denom = std::sqrt(ref_norm2 * norm2);
              best_cos = denom > 0.0 ? dot / denom : 0.0;
            }
            worst = std::min(worst, scores[i]);
          }
          const double parallax = std::hypot(last_u - first_u, last_v - first_v);
          informative = count > 0 && parallax >= cfg.min_parallax &&
                        best - worst > 1e-12 * std::max(1.0, std::abs(best)) &&
                        best_cos >= cfg.min_match_cosine;
          if (informative) {
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
              probs[i] = valid[i] ? std::exp(scores[i] - best) : 0.0;
              sum += probs[i];
            }
            for (int i = 0; i < n; ++i) probs[i] /= sum;
          }
        }
        if (!informative) std::fill(probs.begin(), probs.end(), 1.0 / n);
        out.pixel_valid[p] = informative ? 1 : 0;
      }
    }
  }
  return out;
}

Grid update_mu(const CandidateSet& cands, const Grid& prior_mu) {
  require(prior_mu.height == cands.depths.height && prior_mu.width == cands.depths.width,
          "update_mu: prior shape mismatch");
  Grid mu = prior_mu;
  for (std::size_t p = 0; p < mu.size(); ++p) {
    if (!cands.pixel_valid[p]) continue;
    const auto d = cands.depths.at(p);
    const auto pr = cands.probs.at(p);
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) acc += d[i] * pr[i];
    mu.data[p] = std::clamp(acc, d.front(), d.back());
  }
  return mu;
}

double confidence_at(std::span<const double> depths, std::span<const double> probs, double mu) {
  const std::size_t n = depths.size();
  if (mu <= depths[0]) return probs[0];
  if (mu >= depths[n - 1]) return probs[n - 1];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (mu <= depths[i + 1]) {
      const double span = depths[i + 1] - depths[i];
      if (!(span > 0.0)) return probs[i + 1];
      const double t = (mu - depths[i]) / span;
      return (1.0 - t) * probs[i] + t * probs[i + 1];
    }
  }
  return probs[n - 1];
}

Grid update_sigma(const DepthState& state, const CandidateSet& cands, const Grid& mu_new,
                  const StereoConfig& cfg) {
  Grid sigma = state.sigma;
  for (std::size_t p = 0; p < sigma.size(); ++p) {
    if (!cands.pixel_valid[p]) continue;
    const double p_mu = confidence_at(cands.depths.at(p), cands.probs.at(p), mu_new.data[p]);
    const double s = p_mu > 0.0 ? state.sigma.data[p] / (2.0 * p_mu) : cfg.sigma_max;
    sigma.data[p] = std::clamp(s, cfg.sigma_min, cfg.sigma_max);
  }
  return sigma;
}

std::vector<DepthState> iterate(const FeatureMap& ref, const FeatureMap& src,
                                std::vector<DepthState> states, const CameraModel& ref_cam,
                                const CameraModel& src_cam, const OffsetField& offsets,
                                const StereoConfig& cfg) {
  cfg.validate();
  if (cfg.iterations == 0) return states;
  const RigidTransform m = relative_transform(ref_cam, src_cam);
  for (int it = 0; it < cfg.iterations; ++it) {
    for (auto& state : states) {
      const auto cands = generate_candidates(state, cfg);
      const auto scored = score_candidates(ref, src, cands.depths, ref_cam.intrinsics,
                                           src_cam.intrinsics, m, offsets, cfg);
      Grid mu_new = update_mu(scored, state.mu);
      state.sigma = update_sigma(state, scored, mu_new, cfg);
      state.mu = std::move(mu_new);
      for (std::size_t p = 0; p < state.matched.size(); ++p) {
        state.matched[p] |= scored.pixel_valid[p];
      }
    }
  }
  return states;
}

DepthDistribution emit_stereo_distribution(const std::vector<DepthState>& states,
                                           const StereoConfig& cfg, const Volume* split_weights) {
  require(static_cast<int>(states.size()) == cfg.num_splits,
          "emit_stereo_distribution: need one state per split");
  const int h = states[0].mu.height;
  const int w = states[0].mu.width;
  if (split_weights) {
    require(split_weights->height == h && split_weights->width == w &&
                split_weights->depth == cfg.num_splits,
            "emit_stereo_distribution: split weight shape mismatch");
  }
  DepthDistribution dist{cfg.bin_centers(), Volume(h, w, cfg.bins)};
  std::vector<int> split_of_bin(cfg.bins);
  for (int b = 0; b < cfg.bins; ++b) split_of_bin[b] = cfg.split_of(dist.bins[b]);

  std::vector<double> split_sum(cfg.num_splits);
  std::vector<int> split_count(cfg.num_splits);
  for (std::size_t p = 0; p < dist.probs.pixels(); ++p) {
    auto row = dist.probs.at(p);
    std::fill(split_sum.begin(), split_sum.end(), 0.0);
    std::fill(split_count.begin(), split_count.end(), 0);
    for (int b = 0; b < cfg.bins; ++b) {
      const auto& s = states[split_of_bin[b]];
      row[b] = gaussian_confidence(dist.bins[b], s.mu.data[p], s.sigma.data[p]);
      split_sum[split_of_bin[b]] += row[b];
      split_count[split_of_bin[b]] += 1;
    }
    if (split_weights) {
      const auto wts = split_weights->at(p);
      for (int b = 0; b < cfg.bins; ++b) {
        const int r = split_of_bin[b];
        const double share = split_sum[r] > 0.0 ? row[b] / split_sum[r] : 1.0 / split_count[r];
        row[b] = wts[r] * share;
      }
    }
    normalize(row);
  }
  return dist;
}

DepthDistribution mono_distribution(const Grid& mu, const Grid& sigma, const StereoConfig& cfg) {
  require(mu.same_shape(sigma), "mono_distribution: shape mismatch");
  DepthDistribution dist{cfg.bin_centers(), Volume(mu.height, mu.width, cfg.bins)};
  const double step = (cfg.depth_max - cfg.depth_min) / cfg.bins;
  for (std::size_t p = 0; p < mu.size(); ++p) {
    auto row = dist.probs.at(p);
    const double s = std::max(sigma.data[p], 1e-12);
    double sum = 0.0;
    for (int b = 0; b < cfg.bins; ++b) {
      row[b] = gaussian_confidence(dist.bins[b], mu.data[p], s);
      sum += row[b];
    }
    if (!(sum > 0.0)) {
      const int nearest =
          std::clamp(static_cast<int>(std::floor((mu.data[p] - cfg.depth_min) / step)), 0,
                     cfg.bins - 1);
      row[nearest] = 1.0;
    }
    normalize(row);
  }
  return dist;
}

Volume split_masses(const DepthDistribution& dist, const StereoConfig& cfg) {
  Volume out(dist.probs.height, dist.probs.width, cfg.num_splits);
  for (std::size_t p = 0; p < dist.probs.pixels(); ++p) {
    const auto row = dist.probs.at(p);
    auto m = out.at(p);
    for (std::size_t b = 0; b < dist.bins.size(); ++b) m[cfg.split_of(dist.bins[b])] += row[b];
  }
  return out;
}

DepthDistribution fuse_mono_stereo(const DepthDistribution& mono, const DepthDistribution& stereo,
                                   const Grid& weight) {
  require(mono.bins.size() == stereo.bins.size() && mono.probs.height == stereo.probs.height &&
              mono.probs.width == stereo.probs.width && mono.probs.depth == stereo.probs.depth,
          "fuse_mono_stereo: distribution shapes differ");
  require(weight.height == mono.probs.height && weight.width == mono.probs.width,
          "fuse_mono_stereo: weight map shape mismatch");
  DepthDistribution out = mono;
  for (std::size_t p = 0; p < out.probs.pixels(); ++p) {
    const double wt = weight.data[p];
    require(wt >= 0.0 && wt <= 1.0, "fuse_mono_stereo: weight outside [0, 1]");
    if (wt == 0.0) continue;
    auto row = out.probs.at(p);
    const auto st = stereo.probs.at(p);
    for (std::size_t b = 0; b < row.size(); ++b) row[b] += wt * st[b];
    normalize(row);
  }
  return out;
}

Grid compute_weight_map(const Grid& mu_final, const Grid& mono_ref, const Grid& mono_src,
                        const CameraModel& ref_cam, const CameraModel& src_cam,
                        const StereoConfig& cfg, const std::vector<std::uint8_t>* stereo_valid) {
  require(mu_final.same_shape(mono_ref), "compute_weight_map: mono_ref shape mismatch");
  if (stereo_valid) {
    require(stereo_valid->size() == mu_final.size(), "compute_weight_map: mask shape mismatch");
  }
  const RigidTransform m = relative_transform(ref_cam, src_cam);
  Grid weight(mu_final.height, mu_final.width);
  for (int row = 0; row < weight.height; ++row) {
    for (int col = 0; col < weight.width; ++col) {
      const std::size_t p = pixel_index(row, col, weight.width);
      if (stereo_valid && !(*stereo_valid)[p]) continue;
      if (!positive_finite(mono_ref.data[p])) continue;
      const auto warped = warp_to_source({double(col), double(row), mu_final.data[p]},
                                         ref_cam.intrinsics, src_cam.intrinsics, m);
      if (!warped) continue;
      const auto sampled = bilinear_sample(mono_src, warped->u, warped->v);
      if (!sampled) continue;
      weight.data[p] = std::exp(-std::abs(warped->z - *sampled) / cfg.weight_temperature);
    }
  }
  return weight;
}

Grid expected_depth(const DepthDistribution& dist) {
  Grid out(dist.probs.height, dist.probs.width);
  for (std::size_t p = 0; p < out.size(); ++p) {
    const auto row = dist.probs.at(p);
    double acc = 0.0;
    for (std::size_t b = 0; b < row.size(); ++b) acc += dist.bins[b] * row[b];
    out.data[p] = acc;
  }
  return out;
}

DepthPipelineResult run_depth_pipeline(const DepthPipelineInputs& in, const StereoConfig& cfg) {
  cfg.validate();
  const int h = in.ref_features.height;
  const int w = in.ref_features.width;
  require(in.mono_mu.height == h && in.mono_mu.width == w, "pipeline: mono grid shape mismatch");
  const OffsetField zero = OffsetField::zeros(h, w);
  const OffsetField& offsets = in.offsets ? *in.offsets : zero;

  DepthPipelineResult out;
  out.mono = mono_distribution(in.mono_mu, in.mono_sigma, cfg);
  const Volume masses = split_masses(out.mono, cfg);
  out.states = iterate(in.ref_features, in.src_features, init_states(in.mono_mu, in.mono_sigma, cfg),
                       in.ref_camera, in.src_camera, offsets, cfg);
  out.stereo = emit_stereo_distribution(out.states, cfg, &masses);

  out.mu_final = Grid(h, w);
  out.stereo_valid.assign(static_cast<std::size_t>(h) * w, 0);
  for (std::size_t p = 0; p < out.mu_final.size(); ++p) {
    const auto m = masses.at(p);
    const int r = static_cast<int>(std::max_element(m.begin(), m.end()) - m.begin());
    out.mu_final.data[p] = out.states[r].mu.data[p];
    out.stereo_valid[p] = out.states[r].matched[p];
    bool any = false;
    for (const auto& s : out.states) any = any || s.matched[p];
    if (!any) {
      auto row = out.stereo.probs.at(p);
      std::fill(row.begin(), row.end(), 1.0 / cfg.bins);
    }
  }
  out.weight = compute_weight_map(out.mu_final, in.mono_mu, in.mono_src, in.ref_camera,
                                  in.src_camera, cfg, &out.stereo_valid);
  out.fused = fuse_mono_stereo(out.mono, out.stereo, out.weight);
  return out;
}

}  // namespace dts

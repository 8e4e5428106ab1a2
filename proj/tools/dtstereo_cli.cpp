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
#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dtstereo/bev_pool.hpp"
#include "dtstereo/errors.hpp"
#include "dtstereo/fusion.hpp"
#include "dtstereo/io.hpp"
#include "dtstereo/metrics.hpp"
#include "dtstereo/nms.hpp"
#include "dtstereo/stereo.hpp"
#include "dtstereo/synth.hpp"

namespace fs = std::filesystem;
using namespace dts;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct Globals {
  std::uint64_t seed = 42;
  bool deterministic = false;
  int threads = 1;
  std::string out_dir = "out";
  std::string stereo_config;
};

std::string out_path(const Globals& g, const std::string& name) {
  std::error_code ec;
  fs::create_directories(g.out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + g.out_dir + ": " + ec.message());
  return (fs::path(g.out_dir) / name).string();
}

StereoConfig stereo_config(const Globals& g) {
  StereoConfig cfg;
  if (!g.stereo_config.empty()) cfg = load_stereo_config(g.stereo_config, cfg);
  cfg.validate();
  return cfg;
}

PoolOptions pool_options(const Globals& g) {
  PoolOptions opt;
  opt.threads = g.threads;
  opt.mode = g.deterministic ? AccumulationMode::kDeterministic : AccumulationMode::kParallel;
  return opt;
}

std::string manifest_or_default(const Globals& g, const std::string& manifest) {
  return manifest.empty() ? (fs::path(g.out_dir) / "manifest.json").string() : manifest;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  SceneConfig scene;
};

void cmd_synth(const Globals& g, SynthArgs a) {
  a.scene.seed = g.seed;
  const Scene scene = make_scene(a.scene);
  const auto frames = render_sequence(scene);
  std::vector<ManifestFrame> out;
  std::size_t valid = 0, object = 0;
  for (const auto& f : frames) {
    ManifestFrame m;
    m.record = f.record;
    m.gt_depth = f.gt_depth;
    m.gt_offsets = f.gt_offsets;
    Grid surface(f.gt_depth.height, f.gt_depth.width);
    for (std::size_t p = 0; p < f.surface.size(); ++p) {
      surface.data[p] = f.surface[p];
      valid += f.surface[p] >= 0;
      object += f.surface[p] > 0;
    }
    m.surface = surface;
    out.push_back(std::move(m));
  }
  fs::create_directories(g.out_dir);
  nlohmann::json extra;
  extra["seed"] = g.seed;
  extra["landmarks"] = scene.landmarks.size();
  extra["objects"] = scene.objects.size();
  write_manifest(g.out_dir, out, extra);
  nlohmann::json summary{{"frames", frames.size()},
                         {"width", a.scene.width},
                         {"height", a.scene.height},
                         {"channels", a.scene.channels},
                         {"landmarks", scene.landmarks.size()},
                         {"objects", scene.objects.size()},
                         {"valid_pixels", valid},
                         {"object_pixels", object}};
  std::cout << summary.dump() << "\n";
}

// --- stereo ----------------------------------------------------------------

struct StereoArgs {
  std::string manifest;
  int iterations = -1;  // -1: take the config value
  double noise = 0.0;
  bool dump = false;
  bool gt_offsets = false;
};

void add_noise(FeatureMap& f, double std_dev, std::mt19937_64& rng) {
  if (std_dev <= 0.0) return;
  std::normal_distribution<double> gauss(0.0, std_dev);
  for (auto& v : f.values) v = static_cast<float>(v + gauss(rng));
}

void cmd_stereo(const Globals& g, const StereoArgs& a) {
  StereoConfig cfg = stereo_config(g);
  const int max_iter = a.iterations >= 0 ? a.iterations : cfg.iterations;
  auto frames = load_manifest(manifest_or_default(g, a.manifest));
  if (frames.size() < 2) throw DataError("stereo: manifest needs at least two frames");
  ManifestFrame& ref = frames[frames.size() - 1];
  ManifestFrame& src = frames[frames.size() - 2];
  if (!ref.gt_depth) throw DataError("stereo: reference frame has no ground truth depth");
  if (a.gt_offsets && !ref.gt_offsets) throw DataError("stereo: manifest has no offsets");
  std::mt19937_64 rng(g.seed);
  add_noise(ref.record.features, a.noise, rng);
  add_noise(src.record.features, a.noise, rng);

  std::vector<std::uint8_t> mask(ref.gt_depth->size());
  for (std::size_t p = 0; p < mask.size(); ++p) {
    mask[p] = ref.gt_depth->data[p] > 0.0 && ref.record.features.valid[p];
  }
  auto header = depth_report_header();
  header.insert(header.begin(), "iterations");
  CsvTable table(header);
  nlohmann::json rows = nlohmann::json::array();
  {
    const Grid mono =
        expected_depth(mono_distribution(ref.record.mono_mu, ref.record.mono_sigma, cfg));
    const auto report = depth_metrics(mono, *ref.gt_depth, mask);
    auto fields = depth_report_fields(report);
    fields.insert(fields.begin(), "mono");
    table.add_row(fields);
    auto j = to_json(report);
    j["iterations"] = "mono";
    rows.push_back(j);
  }
  for (int it = 0; it <= max_iter; ++it) {
    cfg.iterations = it;
    const DepthPipelineInputs in{ref.record.features, src.record.features, ref.record.camera,
                                 src.record.camera,   ref.record.mono_mu,  ref.record.mono_sigma,
                                 src.record.mono_mu,
                                 a.gt_offsets ? &*ref.gt_offsets : nullptr};
    const auto result = run_depth_pipeline(in, cfg);
    const Grid depth = expected_depth(result.fused);
    const auto report = depth_metrics(depth, *ref.gt_depth, mask);
    auto fields = depth_report_fields(report);
    fields.insert(fields.begin(), std::to_string(it));
    table.add_row(fields);
    auto j = to_json(report);
    j["iterations"] = it;
    rows.push_back(j);
    if (a.dump && it == max_iter) {
      for (std::size_t r = 0; r < result.states.size(); ++r) {
        const std::string tag = "split" + std::to_string(r);
        write_flat(out_path(g, "stereo_mu_" + tag + ".dtsb"), to_flat(result.states[r].mu));
        write_flat(out_path(g, "stereo_sigma_" + tag + ".dtsb"), to_flat(result.states[r].sigma));
      }
      write_flat(out_path(g, "stereo_fused_dist.dtsb"), to_flat(result.fused.probs));
      write_flat(out_path(g, "stereo_weight.dtsb"), to_flat(result.weight));
      write_flat(out_path(g, "stereo_depth.dtsb"), to_flat(depth));
    }
  }
  table.write(out_path(g, "stereo_report.csv"));
  write_json(out_path(g, "stereo_report.json"), {{"config", to_json(cfg)}, {"rows", rows}});
  std::cout << table.str();
}

// --- fuse ------------------------------------------------------------------

struct FuseArgs {
  std::string manifest;
  int group_size = 2;
  int interval = 0;
  int frames = 0;  // 0: all frames in the manifest
  bool allow_partial = false;
  int nx = 120;
  int ny = 120;
  double cell = 0.5;
};

void cmd_fuse(const Globals& g, const FuseArgs& a) {
  const StereoConfig cfg = stereo_config(g);
  const auto manifest = load_manifest(manifest_or_default(g, a.manifest));
  std::vector<FrameRecord> frames;
  const std::size_t use = a.frames > 0 ? static_cast<std::size_t>(a.frames) : manifest.size();
  if (use > manifest.size()) throw DataError("fuse: manifest has fewer frames than requested");
  for (std::size_t i = manifest.size() - use; i < manifest.size(); ++i) {
    frames.push_back(manifest[i].record);
  }
  const FusionPlan plan =
      make_plan(static_cast<int>(frames.size()), a.group_size, a.interval,
                a.allow_partial ? MissingGroupPolicy::kPadZero : MissingGroupPolicy::kError);
  BevGridSpec grid;
  grid.nx = a.nx;
  grid.ny = a.ny;
  grid.cell_size = a.cell;
  grid.origin_x = 0.0;
  grid.origin_y = -0.5 * a.ny * a.cell;
  grid.channels = frames.front().features.channels;
  const FusionResult result = fuse_sequence(frames, plan, cfg, grid, pool_options(g));

  FlatArray bev;
  bev.height = static_cast<std::uint32_t>(grid.nx);
  bev.width = static_cast<std::uint32_t>(grid.ny);
  bev.depth = static_cast<std::uint32_t>(result.bev.spec.channels);
  bev.values.assign(result.bev.values.begin(), result.bev.values.end());
  write_flat(out_path(g, "fused_bev.dtsb"), bev);

  CsvTable table({"group", "reference", "sources", "channel_offset", "sum", "nonzero_cells"});
  nlohmann::json groups = nlohmann::json::array();
  for (std::size_t k = 0; k < result.per_group.size(); ++k) {
    double sum = 0.0;
    std::size_t nonzero = 0;
    const auto& vals = result.per_group[k].values;
    for (std::size_t cell = 0; cell < grid.cells(); ++cell) {
      bool any = false;
      for (int c = 0; c < grid.channels; ++c) {
        const double v = vals[cell * grid.channels + c];
        sum += v;
        any = any || v != 0.0;
      }
      nonzero += any;
    }
    std::string ref = "-", srcs = "-";
    if (k < plan.groups.size()) {
      ref = std::to_string(plan.groups[k].reference);
      srcs.clear();
      for (int s : plan.groups[k].sources) srcs += (srcs.empty() ? "" : ";") + std::to_string(s);
    }
    table.add_row({std::to_string(k), ref, srcs, std::to_string(k * grid.channels),
                   format_number(sum), std::to_string(nonzero)});
    groups.push_back({{"group", k}, {"reference", ref}, {"sum", sum}, {"nonzero_cells", nonzero}});
  }
  table.write(out_path(g, "fuse_groups.csv"));
  write_json(out_path(g, "fuse_summary.json"),
             {{"frames", frames.size()},
              {"groups", plan.groups.size()},
              {"missing_groups", plan.missing_groups},
              {"channels", result.bev.spec.channels},
              {"grid", {{"nx", grid.nx}, {"ny", grid.ny}, {"cell_size", grid.cell_size}}},
              {"per_group", groups}});
  std::cout << table.str();
}

// --- nms -------------------------------------------------------------------

struct NmsArgs {
  std::string layout = "random";
  std::string boxes;
  int n = 200;
  NmsConfig cfg;
  int repetitions = 5;
};

std::string kept_flags(std::size_t n, const std::vector<int>& kept) {
  std::vector<char> flag(n, 0);
  for (int k : kept) flag[static_cast<std::size_t>(k)] = 1;
  return std::string(flag.begin(), flag.end());
}

void cmd_nms(const Globals& g, const NmsArgs& a) {
  a.cfg.validate();
  const auto boxes = a.boxes.empty() ? make_nms_corpus(g.seed, a.n, a.layout)
                                     : load_boxes_csv(a.boxes);
  const auto sa = kept_flags(boxes.size(), size_aware_circle_nms(boxes, a.cfg));
  const auto ci = kept_flags(boxes.size(), circle_nms(boxes, a.cfg));
  const auto iou = kept_flags(boxes.size(), rotated_iou_nms(boxes, a.cfg));
  CsvTable table({"index", "cx", "cy", "dx", "dy", "theta", "score", "class_id", "size_aware_kept",
                  "circle_kept", "iou_kept", "disagree"});
  int disagreements = 0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const bool differ = sa[i] != ci[i];
    disagreements += differ;
    table.add_row({std::to_string(i), format_number(b.cx), format_number(b.cy),
                   format_number(b.dx), format_number(b.dy), format_number(b.theta),
                   format_number(b.score), std::to_string(b.class_id), std::to_string(int(sa[i])),
                   std::to_string(int(ci[i])), std::to_string(int(iou[i])),
                   differ ? "1" : "0"});
  }
  table.write(out_path(g, "nms_kept.csv"));
  auto count = [](const std::string& f) { return std::count(f.begin(), f.end(), 1); };
  const nlohmann::json summary{{"boxes", boxes.size()},
                               {"size_aware_kept", count(sa)},
                               {"circle_kept", count(ci)},
                               {"iou_kept", count(iou)},
                               {"circle_disagrees", disagreements > 0},
                               {"size_aware_matches_iou", sa == iou},
                               {"circle_matches_iou", ci == iou}};
  write_json(out_path(g, "nms_results.json"), summary);

  CsvTable bench({"variant", "n_boxes", "median_ns", "kept", "suppressed"});
  for (const auto& r : bench_nms(boxes, a.cfg, a.repetitions, 1)) {
    bench.add_row({r.variant, std::to_string(r.n_boxes), format_number(r.median_ns),
                   std::to_string(r.kept), std::to_string(r.suppressed)});
  }
  bench.write(out_path(g, "nms_bench.csv"));
  std::cout << summary.dump() << "\n";
}

// --- pool-bench ------------------------------------------------------------

struct PoolBenchArgs {
  bool full = false;
  int repetitions = 30;
  int warmup = 1;
};

void cmd_pool_bench(const Globals& g, const PoolBenchArgs& a) {
  std::vector<PoolBenchSize> sizes = {{10000, 16, 16, 64, 64}, {100000, 32, 64, 128, 128}};
  if (a.full) sizes.push_back({1000000, 32, 64, 128, 128});
  const auto rows = bench_pool(sizes, a.repetitions, a.warmup, pool_options(g), g.seed);
  CsvTable bench({"variant", "P", "B", "C", "nx", "ny", "median_ns", "p90_ns"});
  CsvTable results({"variant", "P", "B", "C", "nx", "ny", "checksum"});
  for (const auto& r : rows) {
    const std::vector<std::string> key = {r.variant,
                                          std::to_string(r.size.points),
                                          std::to_string(r.size.bins),
                                          std::to_string(r.size.channels),
                                          std::to_string(r.size.nx),
                                          std::to_string(r.size.ny)};
    auto b = key;
    b.push_back(format_number(r.median_ns));
    b.push_back(format_number(r.p90_ns));
    bench.add_row(b);
    auto c = key;
    c.push_back(format_number(r.checksum));
    results.add_row(c);
  }
  bench.write(out_path(g, "pool_bench.csv"));
  results.write(out_path(g, "pool_results.csv"));
  std::cout << bench.str();
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string mask;
  std::string pred_boxes;
  std::string gt_boxes;
  double min_gt_speed = 0.0;
};

void cmd_eval(const Globals& g, const EvalArgs& a) {
  const bool depth = !a.pred.empty() || !a.gt.empty();
  const bool boxes = !a.pred_boxes.empty() || !a.gt_boxes.empty();
  if (!depth && !boxes) throw ConfigError("eval: give --pred/--gt and/or --pred-boxes/--gt-boxes");
  nlohmann::json doc;
  if (depth) {
    if (a.pred.empty() || a.gt.empty()) throw ConfigError("eval: --pred and --gt go together");
    const Grid pred = grid_from_flat(read_flat(a.pred));
    const Grid gt = grid_from_flat(read_flat(a.gt));
    std::vector<std::uint8_t> mask(gt.size());
    if (!a.mask.empty()) {
      const Grid m = grid_from_flat(read_flat(a.mask));
      if (!m.same_shape(gt)) throw ConfigError("eval: mask shape differs from gt");
      for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = m.data[p] != 0.0;
    } else {
      for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = gt.data[p] > 0.0;
    }
    const auto report = depth_metrics(pred, gt, mask);
    CsvTable table(depth_report_header());
    table.add_row(depth_report_fields(report));
    table.write(out_path(g, "eval_depth.csv"));
    doc["depth"] = to_json(report);
  }
  if (boxes) {
    if (a.pred_boxes.empty() || a.gt_boxes.empty()) {
      throw ConfigError("eval: --pred-boxes and --gt-boxes go together");
    }
    const auto report = center_recall(load_boxes_csv(a.pred_boxes), load_boxes_csv(a.gt_boxes),
                                      {0.5, 1.0, 2.0, 4.0}, a.min_gt_speed);
    CsvTable table({"threshold", "recall"});
    for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
      table.add_row({format_number(report.thresholds[i]), format_number(report.recall[i])});
    }
    table.write(out_path(g, "eval_recall.csv"));
    doc["recall"] = to_json(report);
  }
  write_json(out_path(g, "eval_report.json"), doc);
  std::cout << doc.dump() << "\n";
}

void report_error(const char* kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dtstereo: temporal stereo depth, BEV pooling and NMS toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file setting any flag; command-line flags win");
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_flag("--deterministic", g.deterministic, "Reproducible accumulation order");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--stereo-config", g.stereo_config, "JSON document overriding StereoConfig");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Render a synthetic sequence and its manifest");
  s->add_option("--frames", synth.scene.frames, "Frames to render")->capture_default_str();
  s->add_option("--width", synth.scene.width)->capture_default_str();
  s->add_option("--height", synth.scene.height)->capture_default_str();
  s->add_option("--channels", synth.scene.channels)->capture_default_str();
  s->add_option("--objects", synth.scene.objects)->capture_default_str();
  s->add_option("--object-speed", synth.scene.object_speed)->capture_default_str();
  s->add_option("--ego-speed", synth.scene.ego_speed)->capture_default_str();
  s->add_option("--feature-noise", synth.scene.feature_noise)->capture_default_str();
  s->add_option("--mono-noise", synth.scene.mono_noise)->capture_default_str();

  StereoArgs stereo;
  auto* st = app.add_subcommand("stereo", "Sweep stereo iterations and report depth metrics");
  st->add_option("--manifest", stereo.manifest, "Manifest (default <out-dir>/manifest.json)");
  st->add_option("--iterations", stereo.iterations, "Largest iteration count in the sweep");
  st->add_option("--noise", stereo.noise, "Gaussian feature noise added before matching");
  st->add_flag("--dump", stereo.dump, "Write mu, sigma and distributions");
  st->add_flag("--gt-offsets", stereo.gt_offsets, "Apply the manifest's offset field");

  FuseArgs fuse;
  auto* fu = app.add_subcommand("fuse", "Fuse frame groups into one BEV feature grid");
  fu->add_option("--manifest", fuse.manifest);
  fu->add_option("--group-size", fuse.group_size)->capture_default_str();
  fu->add_option("--interval", fuse.interval)->capture_default_str();
  fu->add_option("--frames", fuse.frames, "Most recent frames to use (default all)");
  fu->add_flag("--allow-partial", fuse.allow_partial, "Pad groups that do not fit with zeros");
  fu->add_option("--nx", fuse.nx)->capture_default_str();
  fu->add_option("--ny", fuse.ny)->capture_default_str();
  fu->add_option("--cell-size", fuse.cell)->capture_default_str();

  NmsArgs nms;
  auto* nm = app.add_subcommand("nms", "Compare size-aware, circle and rotated-IoU NMS");
  nm->add_option("--layout", nms.layout, "fig-left-overlap | fig-left-parallel | "
                                         "fig-right-adjacent-small | random")
      ->capture_default_str();
  nm->add_option("--boxes", nms.boxes, "CSV of boxes instead of a generated layout");
  nm->add_option("--n", nms.n, "Boxes in the random layout")->capture_default_str();
  nm->add_option("--w", nms.cfg.w)->capture_default_str();
  nm->add_option("--radius", nms.cfg.radius)->capture_default_str();
  nm->add_option("--iou", nms.cfg.iou_threshold)->capture_default_str();
  nm->add_flag("--class-agnostic", nms.cfg.class_agnostic);
  nm->add_option("--repetitions", nms.repetitions)->capture_default_str();

  PoolBenchArgs pool;
  auto* pb = app.add_subcommand("pool-bench", "Time pool_v1 against pool_v2");
  pb->add_flag("--full", pool.full, "Include the 10^6-point size");
  pb->add_option("--repetitions", pool.repetitions)->capture_default_str();
  pb->add_option("--warmup", pool.warmup)->capture_default_str();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Depth metrics and center-distance recall");
  e->add_option("--pred", ev.pred, "Predicted depth (flat binary)");
  e->add_option("--gt", ev.gt, "Ground truth depth (flat binary)");
  e->add_option("--mask", ev.mask, "Optional mask (flat binary, nonzero = use)");
  e->add_option("--pred-boxes", ev.pred_boxes);
  e->add_option("--gt-boxes", ev.gt_boxes);
  e->add_option("--min-gt-speed", ev.min_gt_speed, "Score only ground truth faster than this (m/s)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    report_error("usage", ex.what());
    return kExitUsage;
  }

  omp_set_num_threads(g.threads);
  try {
    if (*s) cmd_synth(g, synth);
    if (*st) cmd_stereo(g, stereo);
    if (*fu) cmd_fuse(g, fuse);
    if (*nm) cmd_nms(g, nms);
    if (*pb) cmd_pool_bench(g, pool);
    if (*e) cmd_eval(g, ev);
  } catch (const ConfigError& ex) {
    report_error("config", ex.what());
    return kExitUsage;
  } catch (const std::exception& ex) {
    report_error("data", ex.what());
    return kExitData;
  }
  return 0;
}

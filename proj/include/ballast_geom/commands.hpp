#pragma once

// Subcommand bodies for the command-line tool. Each returns a process exit
// status and reports failures on the error stream, so tests can call them
// in-process.

#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "core_model.hpp"
#include "eval_harness.hpp"
#include "ingest_io.hpp"
#include "overlay.hpp"
#include "pipeline.hpp"
#include "synth_oracle.hpp"

namespace ballast {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitViolation = 3;

struct CriteriaSet {
  bool c1 = false, c2 = false, cy = false;
};

/// Comma-separated subset of c1, c2, cy.
inline CriteriaSet parse_criteria(const std::string& s) {
  CriteriaSet c;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "c1") c.c1 = true;
    else if (tok == "c2") c.c2 = true;
    else if (tok == "cy") c.cy = true;
    else throw Error(ErrorCode::invalid_config, "criteria: unknown criterion '" + tok + "' (expected c1, c2, cy)");
  }
  if (!c.c1 && !c.c2 && !c.cy) throw Error(ErrorCode::invalid_config, "criteria: at least one criterion is required");
  return c;
}

struct RunOptions {
  fs::path manifest;
  std::optional<fs::path> config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> box_mode;
  std::optional<std::string> criteria;
};

inline PipelineConfig resolve_config(const std::optional<fs::path>& path, const std::optional<std::uint64_t>& seed,
                                     const std::optional<std::string>& box_mode,
                                     const std::optional<std::string>& criteria) {
  PipelineConfig cfg = path ? load_config(*path) : PipelineConfig{};
  if (seed) cfg.rng_seed = *seed;
  if (box_mode) cfg.box_mode = parse_box_mode(*box_mode);
  if (criteria) {
    const auto c = parse_criteria(*criteria);
    cfg.use_c1 = c.c1;
    cfg.use_c2 = c.c2;
    cfg.use_cy = c.cy;
  }
  return cfg;
}

inline Json run_summary(const PipelineConfig& cfg, const std::vector<FrameResult>& results,
                        const std::vector<FrameDiagnostics>& diags) {
  std::map<std::string, std::size_t> labels{{"sufficient", 0}, {"insufficient", 0}, {"indeterminate", 0}};
  std::map<std::string, std::size_t> status{{"fitted", 0}, {"reused_previous", 0}, {"uncorrected", 0}};
  std::size_t regions = 0;
  for (const auto& r : results)
    for (const auto& v : r.regions) {
      ++labels[to_string(v.label)];
      ++regions;
    }
  for (const auto& d : diags) ++status[to_string(d.status)];
  return Json{{"frames", results.size()},
              {"regions", regions},
              {"labels", labels},
              {"fit_status", status},
              {"config", config_to_json(cfg)}};
}

/// Processes the manifest in order and writes frame_NNNNNN.json per frame,
/// theta_log.jsonl with per-frame fit diagnostics, and summary.json.
inline int cmd_run(const RunOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    const PipelineConfig cfg = resolve_config(opt.config, opt.seed, opt.box_mode, opt.criteria);
    const FrameManifest manifest = load_manifest(opt.manifest);
    fs::create_directories(opt.out);
    BallastPipeline pipe(cfg);
    std::vector<FrameResult> results;
    std::vector<FrameDiagnostics> diags;
    std::string theta_log;
    for (const auto& rec : manifest.frames) {
      const InputFrame in = load_input_frame(rec, manifest.base_dir);
      auto out = pipe.process(in.frame_id, in.raw, in.detections);
      write_frame_result(out.result, opt.out / frame_result_filename(in.frame_id));
      theta_log += diagnostics_json(out.diagnostics).dump() + "\n";
      results.push_back(std::move(out.result));
      diags.push_back(std::move(out.diagnostics));
    }
    write_text(opt.out / "theta_log.jsonl", theta_log);
    write_text(opt.out / "summary.json", dump_json(run_summary(cfg, results, diags)));
    log << "processed " << results.size() << " frames into " << opt.out.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

inline int cmd_synth(const fs::path& spec_path, const fs::path& out_dir, std::ostream& log, std::ostream& err) {
  try {
    const SceneSpec spec = scene_spec_from_json(read_json(spec_path));
    const SceneRender r = render_scene(spec);
    write_scene(spec, r, out_dir);
    log << "wrote " << r.frames.size() << " frames and " << r.truth.regions.size() << " truth regions to "
        << out_dir.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

struct EvalOptions {
  fs::path results;
  fs::path truth;
  std::optional<fs::path> methods;
  std::optional<fs::path> manifest;  // when set, methods are run first into results/<name>/
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> report;  // optional JSON report path
};

/// Scores saved results against truth and prints the comparison table. With a
/// methods file, each method's results are read from results/<name>/; with a
/// manifest as well, the methods are run first and their results written there.
inline int cmd_eval(const EvalOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    const auto truth = load_truth_labels(opt.truth);
    std::vector<MethodRun> runs;
    if (opt.methods) {
      const auto methods = load_methods(*opt.methods);
      if (opt.manifest) {
        const PipelineConfig base = resolve_config(opt.config, opt.seed, std::nullopt, std::nullopt);
        runs = compare_methods(load_manifest(*opt.manifest), base, methods, truth);
        for (const auto& run : runs) {
          const fs::path dir = opt.results / run.method.name;
          fs::create_directories(dir);
          for (const auto& r : run.results) write_frame_result(r, dir / frame_result_filename(r.frame_id));
        }
      } else {
        for (const auto& m : methods) {
          MethodRun run;
          run.method = m;
          run.results = load_results_dir(opt.results / m.name);
          run.report = score(predictions_from(run.results), truth, m.name);
          runs.push_back(std::move(run));
        }
      }
    } else {
      MethodRun run;
      run.method.name = opt.results.filename().empty() ? opt.results.parent_path().filename().string()
                                                        : opt.results.filename().string();
      run.results = load_results_dir(opt.results);
      run.report = score(predictions_from(run.results), truth, run.method.name);
      runs.push_back(std::move(run));
    }
    std::vector<EvalReport> rows;
    Json report = Json::array();
    for (const auto& r : runs) {
      rows.push_back(r.report);
      report.push_back(report_json(r.report));
    }
    log << report_table(rows);
    const auto violations = or_rule_violations(runs);
    if (opt.report) write_text(*opt.report, dump_json(Json{{"methods", report}, {"or_rule_violations", violations}}));
    if (!violations.empty()) {
      for (const auto& v : violations) err << "or-rule violation: " << v << "\n";
      return kExitViolation;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

struct OverlayOptions {
  fs::path manifest;
  fs::path results;
  fs::path out;
  std::optional<fs::path> config;  // only delta_w_px is used
};

/// Writes overlay_NNNNNN.png (W x H) and depth_NNNNNN.png (3W x H) per frame.
inline int cmd_overlay(const OverlayOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    const PipelineConfig cfg = opt.config ? load_config(*opt.config) : PipelineConfig{};
    const FrameManifest manifest = load_manifest(opt.manifest);
    fs::create_directories(opt.out);
    for (const auto& rec : manifest.frames) {
      const fs::path result_path = opt.results / frame_result_filename(rec.frame_id);
      if (!fs::exists(result_path))
        throw Error(ErrorCode::io, "frame " + std::to_string(rec.frame_id) + ": missing result " + result_path.string());
      const FrameResult result = load_frame_result(result_path);
      DepthFrame raw;
      try {
        raw = load_depth(rec.depth_path, rec.depth_encoding, rec.depth_scale);
      } catch (const Error& e) {
        throw Error(e.code(), "frame " + std::to_string(rec.frame_id) + ": " + e.what());
      }
      std::optional<Rgb8> rgb;
      if (rec.rgb_path) rgb = read_png_rgb(rec.rgb_path->string());
      const auto images = render_frame_overlays(raw, rgb, result, cfg.delta_w_px);
      const std::string stem = frame_stem(rec.frame_id);
      write_png_rgb((opt.out / ("overlay_" + stem + ".png")).string(), images.overlay);
      write_png_rgb((opt.out / ("depth_" + stem + ".png")).string(), images.triptych);
    }
    log << "rendered " << manifest.frames.size() << " frames into " << opt.out.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

struct SweepOptions {
  fs::path spec;
  std::optional<fs::path> config;
  std::string axis;
  std::vector<double> values;
};

/// Perturbation sweep over one scene parameter, printed as a table.
inline int cmd_sweep(const SweepOptions& opt, std::ostream& log, std::ostream& err) {
  try {
    const SceneSpec spec = scene_spec_from_json(read_json(opt.spec));
    const PipelineConfig cfg = opt.config ? load_config(*opt.config) : PipelineConfig{};
    const auto rows = perturbation_sweep(spec, cfg, parse_sweep_axis(opt.axis), opt.values);
    log << opt.axis << "  theta_err_mm  corr_rms_mm  accuracy\n";
    for (const auto& r : rows) {
      char line[128];
      std::snprintf(line, sizeof line, "%g  %12.4f  %11.4f  %8.4f\n", r.value, r.theta_error_m * 1e3,
                    r.corrected_rms_m * 1e3, r.accuracy);
      log << line;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace ballast

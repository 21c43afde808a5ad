#pragma once

// Frame-by-frame orchestration: detection filtering, box geometry, sleeper
// sampling, robust bias fit with EMA smoothing, correction, classification.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bias_correction.hpp"
#include "core_model.hpp"
#include "ingest_io.hpp"
#include "mask_geometry.hpp"
#include "numeric.hpp"
#include "sleeper_sampling.hpp"
#include "sufficiency.hpp"

namespace ballast {

enum class FitStatus { fitted, reused_previous, uncorrected };

inline const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::fitted: return "fitted";
    case FitStatus::reused_previous: return "reused_previous";
    case FitStatus::uncorrected: return "uncorrected";
  }
  return "?";
}

struct FrameDiagnostics {
  std::int64_t frame_id = 0;
  FitStatus status = FitStatus::uncorrected;
  std::string failure;  // why the raw fit was unavailable, if it was
  std::optional<BiasParams> theta_raw;
  std::optional<BiasParams> theta_smoothed;
  std::size_t samples = 0;
  std::size_t filtered_samples = 0;
  std::size_t inliers = 0;
  double rms = 0.0;
  std::vector<Segment> segments;
};

inline Json diagnostics_json(const FrameDiagnostics& d) {
  Json j{{"frame_id", d.frame_id},
         {"status", to_string(d.status)},
         {"samples", d.samples},
         {"filtered_samples", d.filtered_samples},
         {"inliers", d.inliers},
         {"rms", d.rms},
         {"theta_raw", d.theta_raw ? Json(d.theta_raw->theta) : Json(nullptr)},
         {"theta_smoothed", d.theta_smoothed ? Json(d.theta_smoothed->theta) : Json(nullptr)}};
  if (!d.failure.empty()) j["failure"] = d.failure;
  return j;
}

struct InputFrame {
  std::int64_t frame_id = 0;
  DepthFrame raw;
  std::vector<RegionDetection> detections;
};

/// Loads one manifest frame; errors name the frame.
inline InputFrame load_input_frame(const FrameRecord& rec, const fs::path& base_dir) {
  InputFrame f;
  f.frame_id = rec.frame_id;
  try {
    f.raw = load_depth(rec.depth_path, rec.depth_encoding, rec.depth_scale);
    if (auto v = validate_frame(f.raw); !v.empty()) throw Error(ErrorCode::parse, v.front().field + " " + v.front().reason);
    auto dets = load_detections(rec.detections_path, f.raw.grid(), base_dir);
    if (dets.frame_id != rec.frame_id)
      throw Error(ErrorCode::parse, "detections file is for frame " + std::to_string(dets.frame_id));
    f.detections = std::move(dets.regions);
  } catch (const Error& e) {
    throw Error(e.code(), "frame " + std::to_string(rec.frame_id) + ": " + e.what());
  }
  return f;
}

struct FrameOutput {
  FrameResult result;
  FrameDiagnostics diagnostics;
  DepthFrame corrected;
};

/// Stateful over a frame sequence: the EMA of the bias coefficients requires
/// frames in manifest order.
class BallastPipeline {
 public:
  explicit BallastPipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {}

  const PipelineConfig& config() const { return cfg_; }
  const EmaState& ema_state() const { return ema_; }

  FrameOutput process(std::int64_t frame_id, const DepthFrame& raw, const std::vector<RegionDetection>& detections) {
    if (auto v = validate_frame(raw); !v.empty())
      throw Error(ErrorCode::parse, "frame " + std::to_string(frame_id) + ": " + v.front().field + " " + v.front().reason);
    const PixelGrid grid = raw.grid();
    const auto regions = filter_detections(detections, grid, cfg_);

    std::vector<RBox> sampling_boxes(regions.size());
    std::vector<RBox> class_boxes(regions.size());
    for (std::size_t i = 0; i < regions.size(); ++i) {
      sampling_boxes[i] = region_rbox(regions[i], grid, cfg_.min_component_px);
      class_boxes[i] = cfg_.box_mode == BoxMode::aabb ? aabb_as_rbox(regions[i], grid) : sampling_boxes[i];
    }

    FrameOutput out;
    auto& diag = out.diagnostics;
    diag.frame_id = frame_id;
    diag.segments = sampling_segments(sampling_boxes, cfg_.delta_w_px, grid);

    const BiasNorm norm = BiasNorm::for_grid(grid);
    try {
      const auto samples = extract_samples(raw, diag.segments);
      diag.samples = samples.size();
      const auto filtered = mad_filter(samples, cfg_.tau_mad);
      diag.filtered_samples = filtered.size();
      std::mt19937_64 rng(splitmix64(cfg_.rng_seed ^ splitmix64(static_cast<std::uint64_t>(frame_id))));
      const auto fit = ransac_fit(filtered, cfg_, norm, rng);
      diag.theta_raw = fit.params;
      diag.inliers = fit.inliers.size();
      diag.rms = fit.rms;
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::empty_samples:
        case ErrorCode::too_few_samples:
        case ErrorCode::fit_failed:
        case ErrorCode::degenerate_geometry:
          diag.failure = e.what();
          break;
        default:
          throw;
      }
    }

    if (diag.theta_raw) {
      diag.theta_smoothed = ema_update(ema_, *diag.theta_raw, cfg_.lambda_ema);
      diag.status = FitStatus::fitted;
    } else if (ema_.theta_prev) {
      diag.theta_smoothed = ema_.theta_prev;
      diag.status = FitStatus::reused_previous;
    } else {
      diag.status = FitStatus::uncorrected;
    }

    out.result.frame_id = frame_id;
    out.result.regions.resize(regions.size());
    if (!diag.theta_smoothed) {
      out.corrected = raw;
      out.result.corrected = false;
      out.result.theta = BiasParams{{}, norm};
      for (std::size_t i = 0; i < regions.size(); ++i)
        out.result.regions[i] = indeterminate_verdict(regions[i], class_boxes[i]);
      return out;
    }
    out.result.corrected = true;
    out.result.theta = *diag.theta_smoothed;
    out.corrected = apply_correction(raw, *diag.theta_smoothed);
    parallel_for(regions.size(), worker_count(), [&](std::size_t i) {
      out.result.regions[i] = classify_region(out.corrected, regions[i], class_boxes[i], cfg_);
    });
    return out;
  }

 private:
  PipelineConfig cfg_;
  EmaState ema_;
};

}  // namespace ballast

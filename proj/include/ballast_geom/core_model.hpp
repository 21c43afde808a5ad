#pragma once

// Shared domain types for the ballast depth-geometry pipeline.
//
// Pixel convention: pixel (x, y) has its center at integer coordinates,
// x in [0, width-1], y in [0, height-1], image y pointing down. Depths are
// meters everywhere.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ballast {

inline constexpr double kPi = 3.14159265358979323846;

enum class ErrorCode {
  io,
  parse,
  dimension_mismatch,
  length_mismatch,
  unknown_encoding,
  invalid_config,
  invalid_spec,
  degenerate_mask,
  no_overlap,
  outside_frame,
  empty_samples,
  too_few_samples,
  degenerate_geometry,
  fit_failed,
  incompatible_normalization,
  profile_starved,
  indeterminate,
  missing_truth,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::length_mismatch: return "length_mismatch";
    case ErrorCode::unknown_encoding: return "unknown_encoding";
    case ErrorCode::invalid_config: return "invalid_config";
    case ErrorCode::invalid_spec: return "invalid_spec";
    case ErrorCode::degenerate_mask: return "degenerate_mask";
    case ErrorCode::no_overlap: return "no_overlap";
    case ErrorCode::outside_frame: return "outside_frame";
    case ErrorCode::empty_samples: return "empty_samples";
    case ErrorCode::too_few_samples: return "too_few_samples";
    case ErrorCode::degenerate_geometry: return "degenerate_geometry";
    case ErrorCode::fit_failed: return "fit_failed";
    case ErrorCode::incompatible_normalization: return "incompatible_normalization";
    case ErrorCode::profile_starved: return "profile_starved";
    case ErrorCode::indeterminate: return "indeterminate";
    case ErrorCode::missing_truth: return "missing_truth";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

struct PixelGrid {
  int width = 0;
  int height = 0;

  bool contains(Point2 p) const {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= width - 1 && p.y <= height - 1;
  }
  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  friend bool operator==(const PixelGrid&, const PixelGrid&) = default;
};

/// Depth raster in meters. `valid[i] == 0` marks a pixel without a sensor return;
/// its `data` entry is meaningless.
struct DepthFrame {
  int width = 0;
  int height = 0;
  std::vector<double> data;
  std::vector<std::uint8_t> valid;

  static DepthFrame filled(int w, int h, double depth) {
    DepthFrame f;
    f.width = w;
    f.height = h;
    f.data.assign(static_cast<std::size_t>(w) * h, depth);
    f.valid.assign(static_cast<std::size_t>(w) * h, 1);
    return f;
  }

  PixelGrid grid() const { return {width, height}; }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  double at(int x, int y) const { return data[index(x, y)]; }
  double& at(int x, int y) { return data[index(x, y)]; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
  void set(int x, int y, double depth) {
    data[index(x, y)] = depth;
    valid[index(x, y)] = 1;
  }
  void invalidate(int x, int y) { valid[index(x, y)] = 0; }
};

struct FrameViolation {
  std::string field;
  std::string reason;
};

inline constexpr int kMinFrameSide = 8;

inline std::vector<FrameViolation> validate_frame(const DepthFrame& f) {
  std::vector<FrameViolation> out;
  if (f.width < kMinFrameSide) out.push_back({"width", "must be >= 8, got " + std::to_string(f.width)});
  if (f.height < kMinFrameSide) out.push_back({"height", "must be >= 8, got " + std::to_string(f.height)});
  const std::size_t expected =
      (f.width > 0 && f.height > 0) ? static_cast<std::size_t>(f.width) * f.height : 0;
  if (f.data.size() != expected) {
    out.push_back({"data", "length-mismatch: expected " + std::to_string(expected) + ", got " +
                               std::to_string(f.data.size())});
  }
  if (f.valid.size() != f.data.size()) {
    out.push_back({"validity", "length-mismatch: " + std::to_string(f.valid.size()) + " flags for " +
                                   std::to_string(f.data.size()) + " depths"});
  }
  const std::size_t n = std::min(f.data.size(), f.valid.size());
  std::size_t nonfinite = 0, nonpositive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!f.valid[i]) continue;
    if (!std::isfinite(f.data[i])) ++nonfinite;
    else if (f.data[i] <= 0.0) ++nonpositive;
  }
  if (nonfinite) out.push_back({"data", "non-finite depth at " + std::to_string(nonfinite) + " valid pixel(s)"});
  if (nonpositive) out.push_back({"data", "negative-depth: " + std::to_string(nonpositive) + " valid pixel(s) <= 0"});
  return out;
}

/// Row-major 0/1 raster in full-image coordinates.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  static BinaryMask empty(int w, int h) {
    return BinaryMask{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0)};
  }
  bool get(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool on = true) { bits[static_cast<std::size_t>(y) * width + x] = on ? 1 : 0; }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }
  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Axis-aligned detection box, center + size in pixels.
struct Aabb {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

struct RegionDetection {
  std::string id;
  Aabb aabb;
  double confidence = 0.0;
  std::optional<BinaryMask> mask;
  std::optional<bool> external_insufficient_vote;
};

/// Rotated rectangle. `angle` is the direction of the width axis in image
/// coordinates, normalized to (-pi/2, pi/2].
struct RBox {
  Point2 center;
  double angle = 0.0;
  double width = 0.0;
  double height = 0.0;

  Point2 u_axis() const { return {std::cos(angle), std::sin(angle)}; }
  Point2 v_axis() const { return {-std::sin(angle), std::cos(angle)}; }
  double area() const { return width * height; }
};

/// Wraps any angle into (-pi/2, pi/2].
inline double normalize_half_turn(double a) {
  double r = std::remainder(a, kPi);  // [-pi/2, pi/2]
  if (r <= -kPi / 2) r += kPi;
  return r;
}

/// Pixel position of local box coordinates; (0,0) is the top-left corner in the
/// box frame, u runs along the width axis and v along the height axis.
inline Point2 from_local(const RBox& b, double u, double v) {
  return b.center + (u - b.width / 2) * b.u_axis() + (v - b.height / 2) * b.v_axis();
}

/// Corners in order (0,0), (w,0), (w,h), (0,h) of the local frame.
inline std::array<Point2, 4> rbox_corners(const RBox& b) {
  return {from_local(b, 0, 0), from_local(b, b.width, 0), from_local(b, b.width, b.height),
          from_local(b, 0, b.height)};
}

struct BiasNorm {
  double x_offset = 0.0;
  double y_offset = 0.0;
  double x_scale = 1.0;
  double y_scale = 1.0;

  /// Maps the pixel grid to roughly [-1, 1]^2.
  static BiasNorm for_grid(PixelGrid g) {
    return {(g.width - 1) / 2.0, (g.height - 1) / 2.0, g.width / 2.0, g.height / 2.0};
  }
  friend bool operator==(const BiasNorm&, const BiasNorm&) = default;
};

/// Polynomial bias surface coefficients over normalized coordinates:
/// theta = (x', y', x'^2, y'^2, x'y', 1) weights.
struct BiasParams {
  std::array<double, 6> theta{};
  BiasNorm norm;

  bool finite() const {
    for (double t : theta)
      if (!std::isfinite(t)) return false;
    return std::isfinite(norm.x_scale) && std::isfinite(norm.y_scale) && norm.x_scale > 0 &&
           norm.y_scale > 0;
  }
};

enum class SampleSource { midline, fallback_top, fallback_bottom };

inline const char* to_string(SampleSource s) {
  switch (s) {
    case SampleSource::midline: return "midline";
    case SampleSource::fallback_top: return "fallback_top";
    case SampleSource::fallback_bottom: return "fallback_bottom";
  }
  return "?";
}

struct SleeperSample {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  SampleSource source = SampleSource::midline;
};

using SleeperSamples = std::vector<SleeperSample>;

enum class Label { sufficient, insufficient, indeterminate };

inline const char* to_string(Label l) {
  switch (l) {
    case Label::sufficient: return "sufficient";
    case Label::insufficient: return "insufficient";
    case Label::indeterminate: return "indeterminate";
  }
  return "?";
}

inline Label label_from_string(const std::string& s) {
  if (s == "sufficient") return Label::sufficient;
  if (s == "insufficient") return Label::insufficient;
  if (s == "indeterminate") return Label::indeterminate;
  throw Error(ErrorCode::parse, "unknown label '" + s + "'");
}

/// The decision rule: OR over fired criteria unless the geometry was unusable.
inline Label decide_label(bool c1, bool c2, bool cy, bool indeterminate) {
  if (indeterminate) return Label::indeterminate;
  return (c1 || c2 || cy) ? Label::insufficient : Label::sufficient;
}

struct RegionVerdict {
  std::string region_id;
  std::optional<double> rho;        // absent when geometry was unusable
  std::optional<double> gamma_max;  // absent when no band cells were present
  bool c1_fired = false;
  bool c2_fired = false;
  bool cy_fired = false;
  Label label = Label::indeterminate;
  RBox rbox;
};

enum class BoxMode { aabb, rbb };

inline const char* to_string(BoxMode m) { return m == BoxMode::aabb ? "aabb" : "rbb"; }

struct PipelineConfig {
  double t_c = 0.3;
  double central_band_fraction = 0.70;
  double nms_iou = 0.35;  // upstream NMS setting, recorded only
  double tau_mad = 3.5;
  int ransac_iters = 160;
  double t_res = 0.01;
  double lambda_ema = 0.2;
  double t_z = 0.03;
  double eta1 = 0.4;
  double kappa = 0.4;
  double eta2 = 0.18;
  double delta_w_px = 10.0;
  int min_component_px = 64;
  int band_px = 3;
  std::uint64_t rng_seed = 0;
  bool use_c1 = true;
  bool use_c2 = true;
  bool use_cy = false;
  BoxMode box_mode = BoxMode::rbb;

  /// One entry per out-of-range field, naming it.
  std::vector<std::string> violations() const {
    std::vector<std::string> v;
    auto in01 = [&](const char* name, double x, bool closed_hi) {
      if (!(x > 0.0 && (closed_hi ? x <= 1.0 : x < 1.0)))
        v.push_back(std::string(name) + " must be in (0," + (closed_hi ? "1]" : "1)") + ", got " +
                    std::to_string(x));
    };
    if (!(t_c >= 0.0 && t_c <= 1.0)) v.push_back("t_c must be in [0,1], got " + std::to_string(t_c));
    in01("central_band_fraction", central_band_fraction, true);
    in01("nms_iou", nms_iou, true);
    if (!(tau_mad > 0.0)) v.push_back("tau_mad must be > 0");
    if (ransac_iters < 1) v.push_back("ransac_iters must be >= 1");
    if (!(t_res > 0.0)) v.push_back("t_res must be > 0");
    in01("lambda_ema", lambda_ema, false);
    if (!(t_z > 0.0)) v.push_back("t_z must be > 0");
    in01("eta1", eta1, true);
    if (!(kappa > 0.0 && kappa < 0.5)) v.push_back("kappa must be in (0,0.5), got " + std::to_string(kappa));
    in01("eta2", eta2, true);
    if (!(delta_w_px >= 0.0)) v.push_back("delta_w_px must be >= 0");
    if (min_component_px < 1) v.push_back("min_component_px must be >= 1");
    if (band_px < 1) v.push_back("band_px must be >= 1");
    return v;
  }
};

}  // namespace ballast

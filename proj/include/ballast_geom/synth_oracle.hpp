#pragma once

// Synthetic track scenes with planted bias fields, sensor noise, spikes,
// dropout and labeled ballast depressions. Ground truth for the numeric tests.
//
// Layout: sleepers are planar constant-depth bands across the track; each bay
// between two sleepers is one detection region whose box extends
// `mask_margin_px` onto both neighboring sleepers. Sufficient ballast is flush
// with the sleeper surface. A depression of depth g lowers the depth value by g
// so that it shows up as a negative residual, the sign the classifier treats
// as missing ballast.

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bias_correction.hpp"
#include "core_model.hpp"
#include "ingest_io.hpp"
#include "mask_geometry.hpp"
#include "numeric.hpp"
#include "pipeline.hpp"

namespace ballast {

enum class BayKind { sufficient, global, edge };

inline const char* to_string(BayKind k) {
  switch (k) {
    case BayKind::sufficient: return "sufficient";
    case BayKind::global: return "global";
    case BayKind::edge: return "edge";
  }
  return "?";
}

inline BayKind parse_bay_kind(const std::string& s) {
  if (s == "sufficient") return BayKind::sufficient;
  if (s == "global") return BayKind::global;
  if (s == "edge") return BayKind::edge;
  throw Error(ErrorCode::invalid_spec, "bay kind must be sufficient|global|edge, got '" + s + "'");
}

struct BaySpec {
  BayKind kind = BayKind::sufficient;
  double depth_m = 0.05;   // g, for insufficient bays
  double fraction = 0.0;   // f, area fraction of the bay box
  BoxSide edge_side = BoxSide::top;
  double edge_u_center = 0.5;  // center of an edge gap along u, as a fraction of the width
};

struct SceneSpec {
  int width = 640;
  int height = 480;
  double sleeper_pitch_px = 130.0;
  double sleeper_width_px = 40.0;
  double sleeper_length_px = 560.0;
  double bay_width_px = 440.0;
  double mask_margin_px = 5.0;
  double edge_gap_depth_fraction = 0.25;  // v-extent of an edge gap relative to bay height
  double base_depth_m = 2.0;
  double shoulder_offset_m = 0.1;
  std::vector<BaySpec> bays;
  double track_angle_rad = 0.0;
  std::array<double, 6> theta_true{};  // on BiasNorm::for_grid of the frame
  double noise_sigma_m = 0.0;
  double outlier_fraction = 0.0;
  double outlier_magnitude_m = 0.5;
  double dropout_fraction = 0.0;
  int frame_count = 1;
  std::uint64_t seed = 1;
  double detection_confidence = 0.9;
  bool emit_votes = false;
  double vote_accuracy = 1.0;
  DepthEncoding encoding = DepthEncoding::raw_f32le;
  double depth_scale = 0.001;

  PixelGrid grid() const { return {width, height}; }
  double bay_height_px() const { return sleeper_pitch_px - sleeper_width_px + 2 * mask_margin_px; }
};

// ---------------------------------------------------------------------------
// Geometry

inline Point2 scene_center(const SceneSpec& s) { return {(s.width - 1) / 2.0, (s.height - 1) / 2.0}; }

/// Along-track offset of sleeper k's centerline from the frame center.
inline double sleeper_offset(const SceneSpec& s, std::size_t k) {
  return (static_cast<double>(k) - static_cast<double>(s.bays.size()) / 2.0) * s.sleeper_pitch_px;
}

inline RBox planted_bay_box(const SceneSpec& s, std::size_t j) {
  const double a = s.track_angle_rad;
  const Point2 ev{-std::sin(a), std::cos(a)};
  const double mid = 0.5 * (sleeper_offset(s, j) + sleeper_offset(s, j + 1));
  return canonical_rbox(scene_center(s) + mid * ev, a, s.bay_width_px, s.bay_height_px());
}

/// Depression rectangle [u0,u1] x [v0,v1) in the bay box frame.
struct DepressionPatch {
  double u0 = 0, u1 = 0, v0 = 0, v1 = 0;
  bool contains(Point2 uv) const { return uv.x >= u0 && uv.x <= u1 && uv.y >= v0 && uv.y < v1; }
};

inline std::optional<DepressionPatch> depression_patch(const SceneSpec& s, const BaySpec& bay, const RBox& box) {
  const double w = box.width, h = box.height;
  switch (bay.kind) {
    case BayKind::sufficient:
      return std::nullopt;
    case BayKind::global: {
      const double half = 0.5 * bay.fraction * h;
      return DepressionPatch{0.0, w, h / 2 - half, h / 2 + half};
    }
    case BayKind::edge: {
      const double e = s.edge_gap_depth_fraction;
      const double du = bay.fraction / e * w;
      double u0 = bay.edge_u_center * w - du / 2;
      u0 = std::clamp(u0, 0.0, w - du);
      const double m = s.mask_margin_px;
      if (bay.edge_side == BoxSide::top) return DepressionPatch{u0, u0 + du, m, m + e * h};
      return DepressionPatch{u0, u0 + du, h - m - e * h, h - m};
    }
  }
  return std::nullopt;
}

/// Fraction of the box's integer (u, v) lattice covered by the patch; the exact
/// depressed fraction a perfect reference plane would report.
inline double lattice_fraction(const RBox& box, const std::optional<DepressionPatch>& patch) {
  if (!patch) return 0.0;
  const auto nu = static_cast<std::size_t>(std::floor(box.width + 1e-9)) + 1;
  const auto nv = static_cast<std::size_t>(std::floor(box.height + 1e-9)) + 1;
  std::size_t hit = 0;
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t u = 0; u < nu; ++u) hit += patch->contains({static_cast<double>(u), static_cast<double>(v)});
  return static_cast<double>(hit) / static_cast<double>(nu * nv);
}

inline std::vector<std::string> scene_violations(const SceneSpec& s) {
  std::vector<std::string> v;
  if (s.width < kMinFrameSide || s.height < kMinFrameSide) v.push_back("frame must be at least 8x8");
  if (!(s.sleeper_pitch_px > s.sleeper_width_px)) v.push_back("sleeper_pitch_px must exceed sleeper_width_px");
  if (!(s.sleeper_width_px > 2 * s.mask_margin_px)) v.push_back("sleeper_width_px must exceed twice mask_margin_px");
  if (!(s.mask_margin_px >= 0)) v.push_back("mask_margin_px must be >= 0");
  if (!(s.bay_width_px > 0 && s.bay_width_px <= s.sleeper_length_px)) v.push_back("bay_width_px must be in (0, sleeper_length_px]");
  if (!(s.base_depth_m > 0)) v.push_back("base_depth_m must be > 0");
  if (!(s.edge_gap_depth_fraction > 0 && s.edge_gap_depth_fraction < 0.5)) v.push_back("edge_gap_depth_fraction must be in (0,0.5)");
  auto frac = [&](const char* name, double x) {
    if (!(x >= 0.0 && x < 1.0)) v.push_back(std::string(name) + " must be in [0,1), got " + std::to_string(x));
  };
  frac("outlier_fraction", s.outlier_fraction);
  frac("dropout_fraction", s.dropout_fraction);
  if (!(s.noise_sigma_m >= 0)) v.push_back("noise_sigma_m must be >= 0");
  if (!(s.vote_accuracy >= 0 && s.vote_accuracy <= 1)) v.push_back("vote_accuracy must be in [0,1]");
  if (!(s.detection_confidence >= 0 && s.detection_confidence <= 1)) v.push_back("detection_confidence must be in [0,1]");
  if (s.frame_count < 1) v.push_back("frame_count must be >= 1");
  if (s.bays.empty()) v.push_back("at least one bay is required");
  if (!(s.depth_scale > 0)) v.push_back("depth_scale must be > 0");
  const double h = s.bay_height_px();
  for (std::size_t j = 0; j < s.bays.size(); ++j) {
    const auto& b = s.bays[j];
    const std::string tag = "bay " + std::to_string(j) + ": ";
    if (b.kind == BayKind::sufficient) continue;
    if (!(b.depth_m > 0)) v.push_back(tag + "depression depth must be > 0");
    if (!(b.fraction > 0 && b.fraction < 1)) v.push_back(tag + "fraction must be in (0,1)");
    if (b.kind == BayKind::global && b.fraction * h > h - 2 * s.mask_margin_px - 2)
      v.push_back(tag + "global depression would reach the sleeper margins");
    if (b.kind == BayKind::edge && b.fraction > s.edge_gap_depth_fraction)
      v.push_back(tag + "edge-gap fraction cannot exceed edge_gap_depth_fraction");
    if (!(b.edge_u_center >= 0 && b.edge_u_center <= 1)) v.push_back(tag + "edge_u_center must be in [0,1]");
  }
  if (v.empty()) {
    for (std::size_t j = 0; j < s.bays.size(); ++j)
      for (const auto& c : rbox_corners(planted_bay_box(s, j)))
        if (!s.grid().contains(c)) {
          v.push_back("bay " + std::to_string(j) + " does not fit inside the frame");
          break;
        }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Rendering

struct RenderedFrame {
  DepthFrame raw;
  DepthFrame truth;                  // D_true, no bias, noise or dropout
  std::vector<std::uint8_t> spike;   // planted outlier pixels
};

struct TruthRegion {
  std::int64_t frame_id = 0;
  std::string region_id;
  Label label = Label::sufficient;
  BayKind kind = BayKind::sufficient;
  double requested_fraction = 0.0;
  double planted_fraction = 0.0;  // on the planted box lattice
  double depth_m = 0.0;
};

struct SceneTruth {
  BiasParams theta_true;
  std::vector<TruthRegion> regions;
};

struct SceneRender {
  std::vector<RenderedFrame> frames;
  std::vector<std::vector<RegionDetection>> detections;  // per frame
  std::vector<RBox> planted_boxes;
  SceneTruth truth;
};

inline BiasParams scene_bias(const SceneSpec& s) { return BiasParams{s.theta_true, BiasNorm::for_grid(s.grid())}; }

/// Noise-free depth of the scene.
inline DepthFrame render_true_depth(const SceneSpec& s, const std::vector<RBox>& boxes,
                                    const std::vector<std::optional<DepressionPatch>>& patches) {
  DepthFrame f = DepthFrame::filled(s.width, s.height, s.base_depth_m);
  const double a = s.track_angle_rad;
  const Point2 eu{std::cos(a), std::sin(a)}, ev{-std::sin(a), std::cos(a)};
  const Point2 c = scene_center(s);
  const double t_lo = sleeper_offset(s, 0) - s.sleeper_width_px / 2;
  const double t_hi = sleeper_offset(s, s.bays.size()) + s.sleeper_width_px / 2;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const Point2 p{static_cast<double>(x), static_cast<double>(y)};
      const double across = dot(p - c, eu), along = dot(p - c, ev);
      const bool on_track = std::abs(across) <= s.sleeper_length_px / 2 && along >= t_lo && along <= t_hi;
      double z = on_track ? s.base_depth_m : s.base_depth_m + s.shoulder_offset_m;
      for (std::size_t j = 0; j < boxes.size(); ++j) {
        if (patches[j] && patches[j]->contains(to_local(boxes[j], p))) z -= s.bays[j].depth_m;
      }
      f.at(x, y) = z;
    }
  }
  return f;
}

inline BinaryMask render_box_mask(const RBox& b, PixelGrid g) {
  BinaryMask m = BinaryMask::empty(g.width, g.height);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      if (inside(b, {static_cast<double>(x), static_cast<double>(y)})) m.set(x, y);
  return m;
}

inline std::string bay_region_id(std::size_t j) { return "bay" + std::to_string(j); }

inline SceneRender render_scene(const SceneSpec& s) {
  if (auto v = scene_violations(s); !v.empty()) {
    std::string msg;
    for (const auto& e : v) msg += (msg.empty() ? "" : "; ") + e;
    throw Error(ErrorCode::invalid_spec, msg);
  }
  SceneRender out;
  const std::size_t nb = s.bays.size();
  std::vector<std::optional<DepressionPatch>> patches(nb);
  std::vector<BinaryMask> masks(nb);
  std::vector<Aabb> aabbs(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    out.planted_boxes.push_back(planted_bay_box(s, j));
    patches[j] = depression_patch(s, s.bays[j], out.planted_boxes[j]);
    masks[j] = render_box_mask(out.planted_boxes[j], s.grid());
    aabbs[j] = *mask_aabb(masks[j]);
  }
  const DepthFrame truth = render_true_depth(s, out.planted_boxes, patches);
  const BiasParams bias = scene_bias(s);
  out.truth.theta_true = bias;

  for (int k = 0; k < s.frame_count; ++k) {
    std::mt19937_64 rng(splitmix64(s.seed + static_cast<std::uint64_t>(k)));
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    RenderedFrame rf;
    rf.truth = truth;
    rf.raw = truth;
    rf.spike.assign(truth.data.size(), 0);
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        const std::size_t i = truth.index(x, y);
        const double n = noise(rng);
        const double us = uni(rng);
        const double ud = uni(rng);
        double z = truth.data[i] + eval_bias(bias, x, y) + s.noise_sigma_m * n;
        if (us < s.outlier_fraction) {
          z += s.outlier_magnitude_m;
          rf.spike[i] = 1;
        }
        rf.raw.data[i] = z;
        if (ud < s.dropout_fraction || !(z > 0.0)) rf.raw.valid[i] = 0;
      }
    }
    out.frames.push_back(std::move(rf));

    std::mt19937_64 vote_rng(splitmix64(~s.seed + static_cast<std::uint64_t>(k)));
    std::vector<RegionDetection> dets;
    for (std::size_t j = 0; j < nb; ++j) {
      RegionDetection d;
      d.id = bay_region_id(j);
      d.aabb = aabbs[j];
      d.confidence = s.detection_confidence;
      d.mask = masks[j];
      const bool insufficient = s.bays[j].kind != BayKind::sufficient;
      if (s.emit_votes) d.external_insufficient_vote = uni(vote_rng) < s.vote_accuracy ? insufficient : !insufficient;
      dets.push_back(std::move(d));

      TruthRegion t;
      t.frame_id = k;
      t.region_id = bay_region_id(j);
      t.label = insufficient ? Label::insufficient : Label::sufficient;
      t.kind = s.bays[j].kind;
      t.requested_fraction = insufficient ? s.bays[j].fraction : 0.0;
      t.planted_fraction = lattice_fraction(out.planted_boxes[j], patches[j]);
      t.depth_m = insufficient ? s.bays[j].depth_m : 0.0;
      out.truth.regions.push_back(t);
    }
    out.detections.push_back(std::move(dets));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scene / truth serialization

inline SceneSpec scene_spec_from_json(const Json& j) {
  SceneSpec s;
  try {
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.sleeper_pitch_px = j.value("sleeper_pitch_px", s.sleeper_pitch_px);
    s.sleeper_width_px = j.value("sleeper_width_px", s.sleeper_width_px);
    s.sleeper_length_px = j.value("sleeper_length_px", s.sleeper_length_px);
    s.bay_width_px = j.value("bay_width_px", s.bay_width_px);
    s.mask_margin_px = j.value("mask_margin_px", s.mask_margin_px);
    s.edge_gap_depth_fraction = j.value("edge_gap_depth_fraction", s.edge_gap_depth_fraction);
    s.base_depth_m = j.value("base_depth_m", s.base_depth_m);
    s.shoulder_offset_m = j.value("shoulder_offset_m", s.shoulder_offset_m);
    s.track_angle_rad = j.value("track_angle_deg", 0.0) * kPi / 180.0;
    if (j.contains("theta_true")) s.theta_true = j.at("theta_true").get<std::array<double, 6>>();
    s.noise_sigma_m = j.value("noise_sigma_m", s.noise_sigma_m);
    s.outlier_fraction = j.value("outlier_fraction", s.outlier_fraction);
    s.outlier_magnitude_m = j.value("outlier_magnitude_m", s.outlier_magnitude_m);
    s.dropout_fraction = j.value("dropout_fraction", s.dropout_fraction);
    s.frame_count = j.value("frame_count", s.frame_count);
    s.seed = j.value("seed", s.seed);
    s.detection_confidence = j.value("detection_confidence", s.detection_confidence);
    s.emit_votes = j.value("emit_votes", s.emit_votes);
    s.vote_accuracy = j.value("vote_accuracy", s.vote_accuracy);
    s.encoding = parse_encoding(j.value("depth_encoding", std::string("raw_f32le")));
    s.depth_scale = j.value("depth_scale", s.depth_scale);
    for (const auto& b : j.at("bays")) {
      BaySpec bay;
      bay.kind = parse_bay_kind(b.at("kind").get<std::string>());
      bay.depth_m = b.value("depth_m", bay.depth_m);
      bay.fraction = b.value("fraction", bay.fraction);
      const std::string side = b.value("edge_side", std::string("top"));
      if (side != "top" && side != "bottom") throw Error(ErrorCode::invalid_spec, "edge_side must be top|bottom");
      bay.edge_side = side == "top" ? BoxSide::top : BoxSide::bottom;
      bay.edge_u_center = b.value("edge_u_center", bay.edge_u_center);
      s.bays.push_back(bay);
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::invalid_spec, e.what());
  }
  if (auto v = scene_violations(s); !v.empty()) {
    std::string msg;
    for (const auto& e : v) msg += (msg.empty() ? "" : "; ") + e;
    throw Error(ErrorCode::invalid_spec, msg);
  }
  return s;
}

inline Json truth_json(const SceneTruth& t) {
  Json regions = Json::array();
  for (const auto& r : t.regions) {
    regions.push_back(Json{{"frame_id", r.frame_id},
                           {"region_id", r.region_id},
                           {"label", to_string(r.label)},
                           {"kind", to_string(r.kind)},
                           {"requested_fraction", r.requested_fraction},
                           {"planted_fraction", r.planted_fraction},
                           {"depth_m", r.depth_m}});
  }
  const auto& n = t.theta_true.norm;
  return Json{{"theta_true", Json(t.theta_true.theta)},
              {"norm", Json{{"x_offset", n.x_offset}, {"y_offset", n.y_offset}, {"x_scale", n.x_scale}, {"y_scale", n.y_scale}}},
              {"regions", regions}};
}

inline std::string frame_stem(std::int64_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(k));
  return buf;
}

/// Writes depth rasters, masks, detection files, manifest.json and truth.json
/// in the formats the ingest layer reads.
inline void write_scene(const SceneSpec& s, const SceneRender& r, const fs::path& dir) {
  fs::create_directories(dir / "depth");
  fs::create_directories(dir / "masks");
  fs::create_directories(dir / "detections");
  for (std::size_t j = 0; j < r.planted_boxes.size(); ++j)
    write_mask(dir / "masks" / (bay_region_id(j) + ".png"), *r.detections.front()[j].mask);
  Json frames = Json::array();
  for (std::size_t k = 0; k < r.frames.size(); ++k) {
    const auto id = static_cast<std::int64_t>(k);
    const std::string stem = frame_stem(id);
    const std::string depth_rel = "depth/" + stem + (s.encoding == DepthEncoding::png16 ? ".png" : ".f32");
    if (s.encoding == DepthEncoding::png16) write_depth_png16(dir / depth_rel, r.frames[k].raw, s.depth_scale);
    else write_depth_raw(dir / depth_rel, r.frames[k].raw);
    Json regions = Json::array();
    for (std::size_t j = 0; j < r.detections[k].size(); ++j) {
      const auto& d = r.detections[k][j];
      Json reg{{"id", d.id},
               {"cx", d.aabb.cx},
               {"cy", d.aabb.cy},
               {"w", d.aabb.w},
               {"h", d.aabb.h},
               {"confidence", d.confidence},
               {"mask_path", "masks/" + bay_region_id(j) + ".png"}};
      if (d.external_insufficient_vote) reg["insufficient_vote"] = *d.external_insufficient_vote;
      regions.push_back(reg);
    }
    const std::string det_rel = "detections/" + stem + ".json";
    write_text(dir / det_rel, dump_json(Json{{"frame_id", id}, {"regions", regions}}));
    frames.push_back(manifest_entry_json(id, depth_rel, s.encoding, s.depth_scale, det_rel));
  }
  write_text(dir / "manifest.json", dump_json(Json{{"frames", frames}}));
  write_text(dir / "truth.json", dump_json(truth_json(r.truth)));
}

// ---------------------------------------------------------------------------
// Scoring helpers against the planted truth

/// max over the grid of |dz_est - dz_true - c| for the minimax constant c.
inline double spatial_bias_error(const BiasParams& est, const BiasParams& truth, PixelGrid g) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      const double d = eval_bias(est, x, y) - eval_bias(truth, x, y);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  return 0.5 * (hi - lo);
}

/// Rescales theta1..theta5 so that the largest |spatial bias| over the grid is
/// `magnitude`; theta6 is left alone.
inline std::array<double, 6> scale_spatial_bias(std::array<double, 6> theta, PixelGrid g, double magnitude) {
  const BiasParams p{theta, BiasNorm::for_grid(g)};
  double peak = 0.0;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) peak = std::max(peak, std::abs(eval_spatial_bias(p, x, y)));
  if (peak == 0.0) return theta;
  for (int i = 0; i < 5; ++i) theta[i] *= magnitude / peak;
  return theta;
}

/// RMS of (corrected - truth - mean offset) over valid pixels that are not
/// planted spikes.
inline double correction_rms(const DepthFrame& corrected, const RenderedFrame& rf) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < corrected.data.size(); ++i) {
    if (!corrected.valid[i] || rf.spike[i]) continue;
    const double d = corrected.data[i] - rf.truth.data[i];
    sum += d;
    sq += d * d;
    ++n;
  }
  if (n == 0) return 0.0;
  const double mean = sum / static_cast<double>(n);
  return std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean));
}

// ---------------------------------------------------------------------------
// Perturbation sweeps

enum class SweepAxis { noise, outliers, bias_magnitude };

inline SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "noise") return SweepAxis::noise;
  if (s == "outliers") return SweepAxis::outliers;
  if (s == "bias_magnitude") return SweepAxis::bias_magnitude;
  throw Error(ErrorCode::invalid_spec, "sweep axis must be noise|outliers|bias_magnitude, got '" + s + "'");
}

struct SweepRow {
  double value = 0.0;
  double theta_error_m = 0.0;    // worst spatial bias error over frames
  double corrected_rms_m = 0.0;  // mean over frames
  double accuracy = 0.0;         // correct labels / all regions
};

inline std::vector<SweepRow> perturbation_sweep(const SceneSpec& base, const PipelineConfig& cfg, SweepAxis axis,
                                                const std::vector<double>& values) {
  std::vector<SweepRow> rows;
  for (double value : values) {
    SceneSpec s = base;
    switch (axis) {
      case SweepAxis::noise: s.noise_sigma_m = value; break;
      case SweepAxis::outliers: s.outlier_fraction = value; break;
      case SweepAxis::bias_magnitude: s.theta_true = scale_spatial_bias(s.theta_true, s.grid(), value); break;
    }
    const SceneRender r = render_scene(s);
    BallastPipeline pipe(cfg);
    SweepRow row;
    row.value = value;
    std::size_t correct = 0, total = 0;
    for (std::size_t k = 0; k < r.frames.size(); ++k) {
      const auto out = pipe.process(static_cast<std::int64_t>(k), r.frames[k].raw, r.detections[k]);
      if (out.result.corrected) {
        row.theta_error_m = std::max(row.theta_error_m, spatial_bias_error(out.result.theta, r.truth.theta_true, s.grid()));
      } else {
        row.theta_error_m = std::numeric_limits<double>::infinity();
      }
      row.corrected_rms_m += correction_rms(out.corrected, r.frames[k]) / static_cast<double>(r.frames.size());
      for (const auto& v : out.result.regions) {
        for (const auto& t : r.truth.regions) {
          if (t.frame_id == static_cast<std::int64_t>(k) && t.region_id == v.region_id) {
            correct += v.label == t.label;
            ++total;
          }
        }
      }
    }
    row.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ballast

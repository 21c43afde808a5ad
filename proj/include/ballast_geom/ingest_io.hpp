#pragma once

// On-disk formats: frame manifests, depth rasters, detections with masks,
// pipeline configuration and per-frame results.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "core_model.hpp"
#include "png_io.hpp"

namespace ballast {

namespace fs = std::filesystem;
using Json = nlohmann::json;

enum class DepthEncoding { png16, raw_f32le };

inline DepthEncoding parse_encoding(const std::string& s) {
  if (s == "png16") return DepthEncoding::png16;
  if (s == "raw_f32le") return DepthEncoding::raw_f32le;
  throw Error(ErrorCode::unknown_encoding, "depth encoding '" + s + "' (expected png16 or raw_f32le)");
}

inline const char* to_string(DepthEncoding e) { return e == DepthEncoding::png16 ? "png16" : "raw_f32le"; }

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for '" + p.string() + "'");
}

inline Json read_json(const fs::path& p) {
  try {
    return Json::parse(read_text(p));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::parse, p.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Depth rasters

/// png16: value v -> v * scale meters, v == 0 -> invalid.
/// raw_f32le: u32 width, u32 height, then width*height float32 meters, all
/// little endian; non-finite or <= 0 -> invalid. `scale` applies to png16 only.
inline DepthFrame load_depth(const fs::path& path, DepthEncoding enc, double scale) {
  DepthFrame f;
  if (enc == DepthEncoding::png16) {
    const Gray16 img = read_png16(path.string());
    f.width = img.width;
    f.height = img.height;
    f.data.resize(img.pixels.size());
    f.valid.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      f.valid[i] = img.pixels[i] != 0;
      f.data[i] = img.pixels[i] * scale;
    }
    return f;
  }
  const std::string bytes = read_text(path);
  auto u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<std::uint8_t>(bytes[off + static_cast<std::size_t>(k)]);
    return v;
  };
  if (bytes.size() < 8) throw Error(ErrorCode::length_mismatch, path.string() + ": missing raw depth header");
  const std::uint32_t w = u32(0), h = u32(4);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() != 8 + 4 * n) {
    throw Error(ErrorCode::length_mismatch, path.string() + ": header declares " + std::to_string(w) + "x" +
                                                std::to_string(h) + " but payload holds " +
                                                std::to_string((bytes.size() - 8) / 4) + " floats");
  }
  f.width = static_cast<int>(w);
  f.height = static_cast<int>(h);
  f.data.resize(n);
  f.valid.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = u32(8 + 4 * i);
    float v;
    std::memcpy(&v, &bits, sizeof v);
    f.valid[i] = std::isfinite(v) && v > 0.0f;
    f.data[i] = f.valid[i] ? static_cast<double>(v) : 0.0;
  }
  return f;
}

inline void write_depth_raw(const fs::path& path, const DepthFrame& f) {
  std::string bytes(8 + 4 * f.data.size(), '\0');
  auto put = [&](std::size_t off, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes[off + static_cast<std::size_t>(k)] = static_cast<char>((v >> (8 * k)) & 0xFF);
  };
  put(0, static_cast<std::uint32_t>(f.width));
  put(4, static_cast<std::uint32_t>(f.height));
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    const float v = f.valid[i] ? static_cast<float>(f.data[i]) : 0.0f;
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put(8 + 4 * i, bits);
  }
  write_text(path, bytes);
}

inline void write_depth_png16(const fs::path& path, const DepthFrame& f, double scale) {
  Gray16 img{f.width, f.height, 1, std::vector<std::uint16_t>(f.data.size(), 0)};
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    if (!f.valid[i]) continue;
    const double units = std::round(f.data[i] / scale);
    img.pixels[i] = static_cast<std::uint16_t>(std::clamp(units, 1.0, 65535.0));
  }
  write_png16(path.string(), img);
}

// ---------------------------------------------------------------------------
// Manifest

struct FrameRecord {
  std::int64_t frame_id = 0;
  fs::path depth_path;
  DepthEncoding depth_encoding = DepthEncoding::png16;
  double depth_scale = 0.001;
  std::optional<fs::path> rgb_path;
  fs::path detections_path;
};

struct FrameManifest {
  fs::path base_dir;  // directory the relative paths resolve against
  std::vector<FrameRecord> frames;
};

inline FrameManifest load_manifest(const fs::path& path) {
  const Json j = read_json(path);
  FrameManifest m;
  m.base_dir = path.parent_path();
  try {
    for (const auto& r : j.at("frames")) {
      FrameRecord f;
      f.frame_id = r.at("frame_id").get<std::int64_t>();
      f.depth_path = m.base_dir / r.at("depth_path").get<std::string>();
      f.depth_encoding = parse_encoding(r.value("depth_encoding", std::string("png16")));
      f.depth_scale = r.value("depth_scale", 0.001);
      if (r.contains("rgb_path") && !r.at("rgb_path").is_null()) f.rgb_path = m.base_dir / r.at("rgb_path").get<std::string>();
      f.detections_path = m.base_dir / r.at("detections_path").get<std::string>();
      if (!(f.depth_scale > 0.0)) throw Error(ErrorCode::parse, "frame " + std::to_string(f.frame_id) + ": depth_scale must be > 0");
      if (!m.frames.empty() && f.frame_id <= m.frames.back().frame_id)
        throw Error(ErrorCode::parse, "frame ids must be strictly increasing (" + std::to_string(f.frame_id) + " after " +
                                          std::to_string(m.frames.back().frame_id) + ")");
      m.frames.push_back(std::move(f));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
  return m;
}

inline Json manifest_entry_json(std::int64_t frame_id, const std::string& depth_rel, DepthEncoding enc, double scale,
                                const std::string& detections_rel) {
  return Json{{"frame_id", frame_id},
              {"depth_path", depth_rel},
              {"depth_encoding", to_string(enc)},
              {"depth_scale", scale},
              {"detections_path", detections_rel}};
}

// ---------------------------------------------------------------------------
// Detections

inline BinaryMask load_mask(const fs::path& path) {
  const Gray8 img = read_png8(path.string());
  BinaryMask m{img.width, img.height, std::vector<std::uint8_t>(img.pixels.size())};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) m.bits[i] = img.pixels[i] != 0;
  return m;
}

inline void write_mask(const fs::path& path, const BinaryMask& m) {
  Gray8 img{m.width, m.height, 1, std::vector<std::uint8_t>(m.bits.size())};
  for (std::size_t i = 0; i < m.bits.size(); ++i) img.pixels[i] = m.bits[i] ? 255 : 0;
  write_png8(path.string(), img);
}

struct DetectionFile {
  std::int64_t frame_id = 0;
  std::vector<RegionDetection> regions;
};

/// Reads {frame_id, regions:[{id, cx, cy, w, h, confidence, mask_path?,
/// insufficient_vote?}]}. Mask paths resolve against `base_dir`; masks must
/// match `grid`.
inline DetectionFile load_detections(const fs::path& path, PixelGrid grid, const fs::path& base_dir) {
  const Json j = read_json(path);
  DetectionFile out;
  try {
    out.frame_id = j.at("frame_id").get<std::int64_t>();
    for (const auto& r : j.at("regions")) {
      RegionDetection d;
      const auto& id = r.at("id");
      d.id = id.is_string() ? id.get<std::string>() : id.dump();
      d.aabb = {r.at("cx").get<double>(), r.at("cy").get<double>(), r.at("w").get<double>(), r.at("h").get<double>()};
      d.confidence = r.at("confidence").get<double>();
      if (!(d.aabb.w > 0 && d.aabb.h > 0)) throw Error(ErrorCode::parse, "region " + d.id + ": box size must be positive");
      if (r.contains("mask_path") && !r.at("mask_path").is_null()) {
        BinaryMask m = load_mask(base_dir / r.at("mask_path").get<std::string>());
        if (m.width != grid.width || m.height != grid.height) {
          throw Error(ErrorCode::dimension_mismatch, "region " + d.id + ": mask is " + std::to_string(m.width) + "x" +
                                                          std::to_string(m.height) + ", frame is " +
                                                          std::to_string(grid.width) + "x" + std::to_string(grid.height));
        }
        d.mask = std::move(m);
      }
      if (r.contains("insufficient_vote") && !r.at("insufficient_vote").is_null())
        d.external_insufficient_vote = r.at("insufficient_vote").get<bool>();
      out.regions.push_back(std::move(d));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
  return out;
}

inline DetectionFile load_detections(const fs::path& path, PixelGrid grid) {
  return load_detections(path, grid, path.parent_path());
}

// ---------------------------------------------------------------------------
// Configuration

inline Json config_to_json(const PipelineConfig& c) {
  return Json{{"t_c", c.t_c},
              {"central_band_fraction", c.central_band_fraction},
              {"nms_iou", c.nms_iou},
              {"tau_mad", c.tau_mad},
              {"ransac_iters", c.ransac_iters},
              {"t_res", c.t_res},
              {"lambda_ema", c.lambda_ema},
              {"t_z", c.t_z},
              {"eta1", c.eta1},
              {"kappa", c.kappa},
              {"eta2", c.eta2},
              {"delta_w_px", c.delta_w_px},
              {"min_component_px", c.min_component_px},
              {"band_px", c.band_px},
              {"rng_seed", c.rng_seed},
              {"use_c1", c.use_c1},
              {"use_c2", c.use_c2},
              {"use_cy", c.use_cy},
              {"box_mode", to_string(c.box_mode)}};
}

inline BoxMode parse_box_mode(const std::string& s) {
  if (s == "aabb") return BoxMode::aabb;
  if (s == "rbb") return BoxMode::rbb;
  throw Error(ErrorCode::invalid_config, "box_mode must be 'aabb' or 'rbb', got '" + s + "'");
}

/// Overlays the keys of `j` onto `base`. Unknown keys, wrong types and
/// out-of-range values are all reported together, each by field name.
inline PipelineConfig config_from_json(const Json& j, PipelineConfig base = {}) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_config, "config must be a JSON object");
  std::vector<std::string> problems;
  PipelineConfig c = base;
  for (const auto& [key, val] : j.items()) {
    try {
      if (key == "t_c") c.t_c = val.get<double>();
      else if (key == "central_band_fraction") c.central_band_fraction = val.get<double>();
      else if (key == "nms_iou") c.nms_iou = val.get<double>();
      else if (key == "tau_mad") c.tau_mad = val.get<double>();
      else if (key == "ransac_iters") c.ransac_iters = val.get<int>();
      else if (key == "t_res") c.t_res = val.get<double>();
      else if (key == "lambda_ema") c.lambda_ema = val.get<double>();
      else if (key == "t_z") c.t_z = val.get<double>();
      else if (key == "eta1") c.eta1 = val.get<double>();
      else if (key == "kappa") c.kappa = val.get<double>();
      else if (key == "eta2") c.eta2 = val.get<double>();
      else if (key == "delta_w_px") c.delta_w_px = val.get<double>();
      else if (key == "min_component_px") c.min_component_px = val.get<int>();
      else if (key == "band_px") c.band_px = val.get<int>();
      else if (key == "rng_seed") c.rng_seed = val.get<std::uint64_t>();
      else if (key == "use_c1") c.use_c1 = val.get<bool>();
      else if (key == "use_c2") c.use_c2 = val.get<bool>();
      else if (key == "use_cy") c.use_cy = val.get<bool>();
      else if (key == "box_mode") c.box_mode = parse_box_mode(val.get<std::string>());
      else problems.push_back(key + ": unknown config key");
    } catch (const Json::exception&) {
      problems.push_back(key + ": wrong type (" + std::string(val.type_name()) + ")");
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  }
  for (auto& v : c.violations()) problems.push_back(std::move(v));
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorCode::invalid_config, msg);
  }
  return c;
}

inline PipelineConfig load_config(const fs::path& path) { return config_from_json(read_json(path)); }

// ---------------------------------------------------------------------------
// Per-frame results

struct FrameResult {
  std::int64_t frame_id = 0;
  bool corrected = false;       // false when no bias estimate existed yet
  BiasParams theta;             // smoothed coefficients applied to this frame
  std::vector<RegionVerdict> regions;
};

inline Json opt_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json frame_result_json(const FrameResult& r) {
  Json regions = Json::array();
  for (const auto& v : r.regions) {
    regions.push_back(Json{{"id", v.region_id},
                           {"label", to_string(v.label)},
                           {"rho", opt_number(v.rho)},
                           {"gamma_max", opt_number(v.gamma_max)},
                           {"c1", v.c1_fired},
                           {"c2", v.c2_fired},
                           {"cy", v.cy_fired},
                           {"rbox", Json{{"cx", v.rbox.center.x},
                                         {"cy", v.rbox.center.y},
                                         {"angle_rad", v.rbox.angle},
                                         {"w", v.rbox.width},
                                         {"h", v.rbox.height}}}});
  }
  const auto& n = r.theta.norm;
  return Json{{"frame_id", r.frame_id},
              {"corrected", r.corrected},
              {"theta", Json(r.theta.theta)},
              {"norm", Json{{"x_offset", n.x_offset}, {"y_offset", n.y_offset}, {"x_scale", n.x_scale}, {"y_scale", n.y_scale}}},
              {"regions", regions}};
}

/// Keys come out sorted; doubles use the shortest round-trip representation.
inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

inline void write_frame_result(const FrameResult& r, const fs::path& path) { write_text(path, dump_json(frame_result_json(r))); }

inline std::optional<double> opt_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

inline FrameResult frame_result_from_json(const Json& j) {
  FrameResult r;
  r.frame_id = j.at("frame_id").get<std::int64_t>();
  r.corrected = j.value("corrected", true);
  r.theta.theta = j.at("theta").get<std::array<double, 6>>();
  const auto& n = j.at("norm");
  r.theta.norm = {n.at("x_offset").get<double>(), n.at("y_offset").get<double>(), n.at("x_scale").get<double>(),
                  n.at("y_scale").get<double>()};
  for (const auto& g : j.at("regions")) {
    RegionVerdict v;
    v.region_id = g.at("id").get<std::string>();
    v.label = label_from_string(g.at("label").get<std::string>());
    v.rho = opt_from(g.at("rho"));
    v.gamma_max = opt_from(g.at("gamma_max"));
    v.c1_fired = g.at("c1").get<bool>();
    v.c2_fired = g.at("c2").get<bool>();
    v.cy_fired = g.at("cy").get<bool>();
    const auto& b = g.at("rbox");
    v.rbox = {{b.at("cx").get<double>(), b.at("cy").get<double>()}, b.at("angle_rad").get<double>(),
              b.at("w").get<double>(), b.at("h").get<double>()};
    r.regions.push_back(std::move(v));
  }
  return r;
}

inline FrameResult load_frame_result(const fs::path& path) {
  try {
    return frame_result_from_json(read_json(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
}

inline std::string frame_result_filename(std::int64_t frame_id) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frame_%06lld.json", static_cast<long long>(frame_id));
  return buf;
}

}  // namespace ballast

#pragma once

// Per-region reference plane, depth residuals and the two geometric
// sufficiency criteria, OR-fused with the optional upstream vote.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "core_model.hpp"
#include "mask_geometry.hpp"
#include "numeric.hpp"

namespace ballast {

inline constexpr double kMinProfileCoverage = 0.5;

/// Corrected-depth profiles along the top (v = 0) and bottom (v = h) box edges,
/// one entry per integer u in [0, floor(w)]. Gaps are linearly filled after the
/// coverage fractions are taken.
struct EdgeProfiles {
  std::vector<std::optional<double>> z_top;
  std::vector<std::optional<double>> z_bot;
  double coverage_top = 0.0;
  double coverage_bot = 0.0;

  std::size_t size() const { return z_top.size(); }
};

namespace detail {

inline double fill_gaps(std::vector<std::optional<double>>& z) {
  std::size_t present = 0;
  for (const auto& v : z) present += v.has_value();
  const double coverage = z.empty() ? 0.0 : static_cast<double>(present) / static_cast<double>(z.size());
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!z[i]) continue;
    if (last && i > *last + 1) {
      const double a = *z[*last], b = *z[i];
      const double span = static_cast<double>(i - *last);
      for (std::size_t k = *last + 1; k < i; ++k) z[k] = a + (b - a) * static_cast<double>(k - *last) / span;
    }
    last = i;
  }
  return coverage;
}

inline std::size_t lattice_extent(double len) { return static_cast<std::size_t>(std::floor(len + 1e-9)) + 1; }

}  // namespace detail

inline EdgeProfiles edge_profiles(const DepthFrame& corr, const RBox& b, int band_px = 3) {
  bool touches = false;
  for (const auto& c : rbox_corners(b)) touches = touches || corr.grid().contains(c);
  touches = touches || inside(b, {0.0, 0.0}) || inside(b, {corr.width - 1.0, corr.height - 1.0}) ||
            inside(b, {0.0, corr.height - 1.0}) || inside(b, {corr.width - 1.0, 0.0});
  if (!touches) throw Error(ErrorCode::outside_frame, "box does not intersect the frame");

  const std::size_t nu = detail::lattice_extent(b.width);
  EdgeProfiles p;
  p.z_top.resize(nu);
  p.z_bot.resize(nu);
  std::vector<double> vals;
  for (std::size_t u = 0; u < nu; ++u) {
    for (int side = 0; side < 2; ++side) {
      vals.clear();
      for (int k = 0; k < band_px; ++k) {
        const double v = side == 0 ? static_cast<double>(k) : b.height - k;
        if (auto z = sample_bilinear(corr, from_local(b, static_cast<double>(u), v))) vals.push_back(*z);
      }
      if (!vals.empty()) (side == 0 ? p.z_top : p.z_bot)[u] = median_of(vals);
    }
  }
  p.coverage_top = detail::fill_gaps(p.z_top);
  p.coverage_bot = detail::fill_gaps(p.z_bot);
  if (p.coverage_top < kMinProfileCoverage || p.coverage_bot < kMinProfileCoverage) {
    throw Error(ErrorCode::profile_starved, "edge profile coverage top=" + std::to_string(p.coverage_top) +
                                                " bottom=" + std::to_string(p.coverage_bot));
  }
  return p;
}

/// Linear interpolation in v between the two edge profiles at column u.
inline std::optional<double> reference_plane(const EdgeProfiles& prof, double box_height, std::size_t u, double v) {
  if (u >= prof.size() || !prof.z_top[u] || !prof.z_bot[u]) return std::nullopt;
  const double t = v / box_height;
  return (1.0 - t) * *prof.z_top[u] + t * *prof.z_bot[u];
}

/// Depth residuals on the integer (u, v) lattice of a box.
struct ResidualMap {
  std::size_t nu = 0;
  std::size_t nv = 0;
  double box_height = 0.0;
  std::vector<std::optional<double>> cells;  // row-major in v

  const std::optional<double>& at(std::size_t u, std::size_t v) const { return cells[v * nu + u]; }
  std::optional<double>& at(std::size_t u, std::size_t v) { return cells[v * nu + u]; }
};

inline ResidualMap residual_map(const DepthFrame& corr, const RBox& b, const EdgeProfiles& prof) {
  ResidualMap r;
  r.nu = detail::lattice_extent(b.width);
  r.nv = detail::lattice_extent(b.height);
  r.box_height = b.height;
  r.cells.resize(r.nu * r.nv);
  for (std::size_t v = 0; v < r.nv; ++v) {
    for (std::size_t u = 0; u < r.nu; ++u) {
      const auto ref = reference_plane(prof, b.height, u, static_cast<double>(v));
      if (!ref) continue;
      const auto z = sample_bilinear(corr, from_local(b, static_cast<double>(u), static_cast<double>(v)));
      if (z) r.at(u, v) = *z - *ref;
    }
  }
  return r;
}

struct CriterionResult {
  double value = 0.0;
  bool fired = false;
};

/// Fraction of present cells more than t_z below the reference; fires above eta1.
inline CriterionResult global_criterion(const ResidualMap& r, double t_z, double eta1) {
  std::size_t present = 0, depressed = 0;
  for (const auto& c : r.cells) {
    if (!c) continue;
    ++present;
    depressed += *c < -t_z;
  }
  if (present == 0) throw Error(ErrorCode::indeterminate, "no residual cells present");
  const double rho = static_cast<double>(depressed) / static_cast<double>(present);
  return {rho, rho > eta1};
}

/// Largest per-column depressed fraction inside the union of the top band
/// (v < kappa h) and bottom band (v > h - kappa h); fires above eta2.
inline CriterionResult edge_gap_criterion(const ResidualMap& r, double kappa, double t_z, double eta2) {
  const double h_edge = kappa * r.box_height;
  std::optional<double> gamma_max;
  for (std::size_t u = 0; u < r.nu; ++u) {
    std::size_t present = 0, depressed = 0;
    for (std::size_t v = 0; v < r.nv; ++v) {
      const double vv = static_cast<double>(v);
      if (!(vv < h_edge || vv > r.box_height - h_edge)) continue;
      const auto& c = r.at(u, v);
      if (!c) continue;
      ++present;
      depressed += *c < -t_z;
    }
    if (present == 0) continue;
    const double g = static_cast<double>(depressed) / static_cast<double>(present);
    gamma_max = std::max(gamma_max.value_or(0.0), g);
  }
  if (!gamma_max) throw Error(ErrorCode::indeterminate, "no edge-band cells present");
  return {*gamma_max, *gamma_max > eta2};
}

/// Verdict for a frame that could not be bias corrected.
inline RegionVerdict indeterminate_verdict(const RegionDetection& det, const RBox& b) {
  RegionVerdict v;
  v.region_id = det.id;
  v.rbox = b;
  v.label = Label::indeterminate;
  return v;
}

/// Runs both geometric criteria in box `b` and fuses them with the upstream
/// vote. Geometry that cannot be analyzed yields a CY-only decision when a vote
/// is available and enabled, otherwise indeterminate.
inline RegionVerdict classify_region(const DepthFrame& corr, const RegionDetection& det, const RBox& b,
                                     const PipelineConfig& cfg) {
  RegionVerdict out;
  out.region_id = det.id;
  out.rbox = b;
  out.cy_fired = cfg.use_cy && det.external_insufficient_vote.value_or(false);
  const bool vote_usable = cfg.use_cy && det.external_insufficient_vote.has_value();

  bool geometry_ok = true;
  try {
    const auto prof = edge_profiles(corr, b, cfg.band_px);
    const auto res = residual_map(corr, b, prof);
    const auto c1 = global_criterion(res, cfg.t_z, cfg.eta1);
    out.rho = c1.value;
    out.c1_fired = cfg.use_c1 && c1.fired;
    try {
      const auto c2 = edge_gap_criterion(res, cfg.kappa, cfg.t_z, cfg.eta2);
      out.gamma_max = c2.value;
      out.c2_fired = cfg.use_c2 && c2.fired;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::indeterminate) throw;
      if (cfg.use_c2) geometry_ok = false;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::profile_starved && e.code() != ErrorCode::indeterminate &&
        e.code() != ErrorCode::outside_frame)
      throw;
    geometry_ok = false;
  }
  if (!geometry_ok) {
    out.c1_fired = out.c2_fired = false;
    const bool geometry_needed = cfg.use_c1 || cfg.use_c2;
    out.label = (vote_usable || !geometry_needed) ? decide_label(false, false, out.cy_fired, false)
                                                  : Label::indeterminate;
    return out;
  }
  out.label = decide_label(out.c1_fired, out.c2_fired, out.cy_fired, false);
  return out;
}

}  // namespace ballast

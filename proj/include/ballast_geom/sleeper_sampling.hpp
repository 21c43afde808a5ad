#pragma once

// Sleeper-aligned depth sampling between neighboring region boxes, with
// fallback lines beyond the outermost boxes and MAD outlier rejection.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "core_model.hpp"
#include "mask_geometry.hpp"
#include "numeric.hpp"

namespace ballast {

struct Segment {
  Point2 a;
  Point2 b;
  SampleSource source = SampleSource::midline;

  double length() const { return norm(b - a); }
};

inline constexpr double kMinMidlineOverlapPx = 10.0;

/// Circular mean of box angles, computed on 2*alpha since box angles are
/// defined modulo pi.
inline double mean_box_angle(const std::vector<RBox>& boxes) {
  double s = 0.0, c = 0.0;
  for (const auto& b : boxes) {
    s += std::sin(2 * b.angle);
    c += std::cos(2 * b.angle);
  }
  return normalize_half_turn(0.5 * std::atan2(s, c));
}

/// Indices of `boxes` sorted top to bottom by center position along the
/// mean-angle v axis. Consecutive entries are neighbors.
inline std::vector<std::size_t> order_boxes(const std::vector<RBox>& boxes) {
  std::vector<std::size_t> idx(boxes.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (boxes.empty()) return idx;
  const double a = mean_box_angle(boxes);
  const Point2 ev{-std::sin(a), std::cos(a)};
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return dot(boxes[i].center, ev) < dot(boxes[j].center, ev);
  });
  return idx;
}

namespace detail {

struct Range {
  double lo, hi;
};

inline Range project(const RBox& b, Point2 axis) {
  Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& c : rbox_corners(b)) {
    const double t = dot(c, axis);
    r.lo = std::min(r.lo, t);
    r.hi = std::max(r.hi, t);
  }
  return r;
}

}  // namespace detail

/// Sleeper sampling line halfway between the facing edges of two neighboring
/// boxes, at their mean angle, spanning the overlap of their u-extents.
/// Either argument order gives the same segment.
inline Segment midline_segment(const RBox& first, const RBox& second) {
  const double a = mean_box_angle({first, second});
  const Point2 eu{std::cos(a), std::sin(a)};
  const Point2 ev{-std::sin(a), std::cos(a)};
  const bool first_is_upper = dot(first.center, ev) <= dot(second.center, ev);
  const RBox& upper = first_is_upper ? first : second;
  const RBox& lower = first_is_upper ? second : first;

  // Each box's two u-parallel edges; take the one facing the neighbor.
  auto edge_pos = [&](const RBox& b, double v) { return dot(from_local(b, b.width / 2, v), ev); };
  const double upper_edge = std::max(edge_pos(upper, 0), edge_pos(upper, upper.height));
  const double lower_edge = std::min(edge_pos(lower, 0), edge_pos(lower, lower.height));
  const double v_mid = 0.5 * (upper_edge + lower_edge);

  const auto ru = detail::project(upper, eu);
  const auto rl = detail::project(lower, eu);
  const double u0 = std::max(ru.lo, rl.lo);
  const double u1 = std::min(ru.hi, rl.hi);
  if (u1 - u0 < kMinMidlineOverlapPx) {
    throw Error(ErrorCode::no_overlap, "neighboring boxes overlap by " + std::to_string(u1 - u0) +
                                           " px along the sleeper axis");
  }
  return {u0 * eu + v_mid * ev, u1 * eu + v_mid * ev, SampleSource::midline};
}

/// Clips a segment to the pixel-center rectangle of the grid (Liang-Barsky).
inline std::optional<Segment> clip_to_grid(Segment s, PixelGrid g) {
  const Point2 d = s.b - s.a;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-d.x, d.x, -d.y, d.y};
  const double q[4] = {s.a.x, (g.width - 1) - s.a.x, s.a.y, (g.height - 1) - s.a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0) t0 = std::max(t0, r);
    else t1 = std::min(t1, r);
    if (t0 > t1) return std::nullopt;
  }
  return Segment{s.a + t0 * d, s.a + t1 * d, s.source};
}

enum class BoxSide { top, bottom };

/// The box's top or bottom edge moved `delta_w` px outward along its v axis,
/// clipped to the frame. Absent when nothing of it lies inside the frame.
inline std::optional<Segment> fallback_line(const RBox& b, BoxSide side, double delta_w, PixelGrid grid) {
  const double v = side == BoxSide::top ? -delta_w : b.height + delta_w;
  const Segment raw{from_local(b, 0, v), from_local(b, b.width, v),
                    side == BoxSide::top ? SampleSource::fallback_top : SampleSource::fallback_bottom};
  return clip_to_grid(raw, grid);
}

/// All sampling lines for one frame: midlines between neighbors, plus fallback
/// lines on the outer side of any box without a usable neighbor on that side.
inline std::vector<Segment> sampling_segments(const std::vector<RBox>& boxes, double delta_w, PixelGrid grid) {
  std::vector<Segment> out;
  const auto order = order_boxes(boxes);
  const std::size_t n = order.size();
  std::vector<bool> has_upper(n, false), has_lower(n, false);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    try {
      if (auto s = clip_to_grid(midline_segment(boxes[order[k]], boxes[order[k + 1]]), grid)) {
        out.push_back(*s);
        has_lower[k] = true;
        has_upper[k + 1] = true;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_overlap) throw;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    const RBox& b = boxes[order[k]];
    if (!has_upper[k])
      if (auto s = fallback_line(b, BoxSide::top, delta_w, grid)) out.push_back(*s);
    if (!has_lower[k])
      if (auto s = fallback_line(b, BoxSide::bottom, delta_w, grid)) out.push_back(*s);
  }
  return out;
}

/// Samples each segment every 1 px of arc length on the raw depth; points
/// without a bilinear value are dropped.
inline SleeperSamples extract_samples(const DepthFrame& raw, const std::vector<Segment>& segments) {
  SleeperSamples out;
  for (const auto& s : segments) {
    const double len = s.length();
    const int steps = static_cast<int>(std::floor(len + 1e-9));
    const Point2 dir = len > 0 ? (1.0 / len) * (s.b - s.a) : Point2{0, 0};
    for (int k = 0; k <= steps; ++k) {
      const Point2 p = s.a + static_cast<double>(k) * dir;
      if (auto z = sample_bilinear(raw, p)) out.push_back({p.x, p.y, *z, s.source});
    }
  }
  if (out.empty()) throw Error(ErrorCode::empty_samples, "no valid depth along any sleeper sampling line");
  return out;
}

/// Keeps samples with |z - median| < tau * MAD. A zero MAD keeps exactly the
/// samples equal to the median.
inline SleeperSamples mad_filter(const SleeperSamples& s, double tau) {
  if (s.size() < 3) throw Error(ErrorCode::too_few_samples, "MAD filter needs >= 3 samples, got " + std::to_string(s.size()));
  std::vector<double> z(s.size());
  std::transform(s.begin(), s.end(), z.begin(), [](const SleeperSample& p) { return p.z; });
  const double med = median_of(z);
  for (auto& v : z) v = std::abs(v - med);
  const double mad = median_of(z);
  SleeperSamples out;
  for (const auto& p : s) {
    const bool keep = mad > 0.0 ? std::abs(p.z - med) < tau * mad : p.z == med;
    if (keep) out.push_back(p);
  }
  return out;
}

}  // namespace ballast

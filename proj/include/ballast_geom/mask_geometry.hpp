#pragma once

// Detection filtering, mask cleanup, minimum-area rotated rectangles and
// raster sampling in rotated box frames.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "core_model.hpp"

namespace ballast {

/// Keeps detections with confidence >= t_c whose box center lies in the
/// central band [W(1-f)/2, W(1+f)/2] of the image width. Order is preserved.
inline std::vector<RegionDetection> filter_detections(const std::vector<RegionDetection>& dets,
                                                      PixelGrid grid, const PipelineConfig& cfg) {
  const double f = cfg.central_band_fraction;
  const double span = grid.width * f;
  const double lo = (grid.width - span) / 2.0;
  const double hi = (grid.width + span) / 2.0;
  std::vector<RegionDetection> out;
  for (const auto& d : dets) {
    if (d.confidence >= cfg.t_c && d.aabb.cx >= lo && d.aabb.cx <= hi) out.push_back(d);
  }
  return out;
}

namespace detail {

// 3x3 dilation or erosion; out-of-image neighbors are ignored.
inline BinaryMask morph3x3(const BinaryMask& m, bool dilate) {
  BinaryMask out = BinaryMask::empty(m.width, m.height);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      bool acc = !dilate;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= m.width || yy >= m.height) continue;
          if (dilate) acc = acc || m.get(xx, yy);
          else acc = acc && m.get(xx, yy);
        }
      }
      out.set(x, y, acc);
    }
  }
  return out;
}

// 8-connected component labels (0 = background) and per-label areas.
inline std::vector<int> label_components(const BinaryMask& m, std::vector<std::size_t>& areas) {
  std::vector<int> labels(m.bits.size(), 0);
  areas.assign(1, 0);
  std::vector<int> stack;
  int next = 0;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * m.width + x;
      if (!m.bits[i] || labels[i]) continue;
      ++next;
      areas.push_back(0);
      labels[i] = next;
      stack.push_back(static_cast<int>(i));
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        ++areas[next];
        const int cx = cur % m.width, cy = cur / m.width;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = cx + dx, yy = cy + dy;
            if (xx < 0 || yy < 0 || xx >= m.width || yy >= m.height) continue;
            const std::size_t j = static_cast<std::size_t>(yy) * m.width + xx;
            if (m.bits[j] && !labels[j]) {
              labels[j] = next;
              stack.push_back(static_cast<int>(j));
            }
          }
        }
      }
    }
  }
  return labels;
}

}  // namespace detail

inline constexpr int kDefaultMinComponentPx = 64;

/// Morphological closing with a 3x3 square, then removal of 8-connected
/// components smaller than `min_component_px`.
inline BinaryMask clean_mask(const BinaryMask& m, int min_component_px = kDefaultMinComponentPx) {
  BinaryMask closed = detail::morph3x3(detail::morph3x3(m, true), false);
  std::vector<std::size_t> areas;
  const auto labels = detail::label_components(closed, areas);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] && areas[labels[i]] < static_cast<std::size_t>(min_component_px)) closed.bits[i] = 0;
  }
  return closed;
}

/// Convex hull (Andrew's monotone chain), counterclockwise in (x, y), no
/// collinear vertices.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i - 1] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

/// Builds the canonical RBox for a rectangle whose sides run along `edge_angle`
/// (extent `along`) and perpendicular to it (extent `across`). The width axis is
/// the longer side; squares take the angle in (-pi/4, pi/4].
inline RBox canonical_rbox(Point2 center, double edge_angle, double along, double across) {
  double a0 = normalize_half_turn(edge_angle);
  double a1 = normalize_half_turn(edge_angle + kPi / 2);
  const double tol = 1e-9 * std::max(along, across);
  if (std::abs(along - across) <= tol) {
    const bool first = std::abs(a0) < std::abs(a1) || (std::abs(a0) == std::abs(a1) && a0 > 0);
    return {center, first ? a0 : a1, std::max(along, across), std::min(along, across)};
  }
  if (along > across) return {center, a0, along, across};
  return {center, a1, across, along};
}

/// Minimum-area enclosing rectangle of a convex polygon (counterclockwise, no
/// collinear vertices) by rotating calipers. One side is collinear with a hull edge.
inline RBox min_area_rect_of_hull(const std::vector<Point2>& hull) {
  const std::size_t n = hull.size();
  if (n < 3) throw Error(ErrorCode::degenerate_mask, "hull has fewer than 3 vertices");
  auto at = [&](std::size_t i) { return hull[i % n]; };

  std::size_t far = 1, hi = 1, lo = 0;
  double best_area = std::numeric_limits<double>::infinity();
  RBox best;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 origin = at(i);
    const Point2 edge = at(i + 1) - origin;
    const double len = norm(edge);
    const Point2 e = (1.0 / len) * edge;
    const Point2 nrm{-e.y, e.x};  // inward for a counterclockwise hull

    if (i == 0) {
      far = hi = lo = 0;
      for (std::size_t j = 1; j < n; ++j) {
        if (dot(at(j) - origin, nrm) > dot(at(far) - origin, nrm)) far = j;
        if (dot(at(j) - origin, e) > dot(at(hi) - origin, e)) hi = j;
        if (dot(at(j) - origin, e) < dot(at(lo) - origin, e)) lo = j;
      }
    } else {
      for (std::size_t s = 0; s < n && dot(at(far + 1) - origin, nrm) >= dot(at(far) - origin, nrm); ++s) far = (far + 1) % n;
      for (std::size_t s = 0; s < n && dot(at(hi + 1) - origin, e) >= dot(at(hi) - origin, e); ++s) hi = (hi + 1) % n;
      for (std::size_t s = 0; s < n && dot(at(lo + 1) - origin, e) <= dot(at(lo) - origin, e); ++s) lo = (lo + 1) % n;
    }
    const double u_min = dot(at(lo) - origin, e);
    const double u_max = dot(at(hi) - origin, e);
    const double depth = dot(at(far) - origin, nrm);
    const double area = (u_max - u_min) * depth;
    if (area < best_area * (1.0 - 1e-12)) {
      best_area = area;
      const Point2 c = origin + (0.5 * (u_min + u_max)) * e + (0.5 * depth) * nrm;
      best = canonical_rbox(c, std::atan2(e.y, e.x), u_max - u_min, depth);
    }
  }
  return best;
}

/// Minimum-area rotated rectangle of the foreground pixel centers.
/// Throws degenerate_mask when fewer than 3 non-collinear pixels are set.
inline RBox min_area_rbox(const BinaryMask& m) {
  std::vector<Point2> pts;
  for (int y = 0; y < m.height; ++y) {
    // Only the row extremes can be hull vertices.
    int first = -1, last = -1;
    for (int x = 0; x < m.width; ++x) {
      if (m.get(x, y)) {
        if (first < 0) first = x;
        last = x;
      }
    }
    if (first < 0) continue;
    pts.push_back({static_cast<double>(first), static_cast<double>(y)});
    if (last != first) pts.push_back({static_cast<double>(last), static_cast<double>(y)});
  }
  if (pts.size() < 3) throw Error(ErrorCode::degenerate_mask, "mask has fewer than 3 foreground pixels");
  const auto hull = convex_hull(std::move(pts));
  if (hull.size() < 3) throw Error(ErrorCode::degenerate_mask, "foreground pixels are collinear");
  return min_area_rect_of_hull(hull);
}

/// Local (u, v) box coordinates of pixel point `p`.
inline Point2 to_local(const RBox& b, Point2 p) {
  const Point2 d = p - b.center;
  return {dot(d, b.u_axis()) + b.width / 2, dot(d, b.v_axis()) + b.height / 2};
}

inline bool inside(const RBox& b, Point2 p) {
  const Point2 l = to_local(b, p);
  return l.x >= 0 && l.x <= b.width && l.y >= 0 && l.y <= b.height;
}

/// Bilinear depth at a subpixel point from the valid neighbors only, with the
/// weights renormalized. Absent outside the frame or when no valid neighbor
/// carries weight.
inline std::optional<double> sample_bilinear(const DepthFrame& f, Point2 p) {
  if (!f.grid().contains(p)) return std::nullopt;
  const int x0 = static_cast<int>(std::floor(p.x));
  const int y0 = static_cast<int>(std::floor(p.y));
  const double fx = p.x - x0, fy = p.y - y0;
  double acc = 0.0, wsum = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
      const int x = x0 + dx, y = y0 + dy;
      if (w <= 0.0 || x >= f.width || y >= f.height || !f.is_valid(x, y)) continue;
      acc += w * f.at(x, y);
      wsum += w;
    }
  }
  if (wsum <= 1e-12) return std::nullopt;
  return acc / wsum;
}

/// Axis-aligned RBox from a detection box, clipped to the pixel-center extent
/// of the frame.
inline RBox aabb_as_rbox(const RegionDetection& d, PixelGrid grid) {
  const double x0 = std::clamp(d.aabb.cx - d.aabb.w / 2, 0.0, grid.width - 1.0);
  const double x1 = std::clamp(d.aabb.cx + d.aabb.w / 2, 0.0, grid.width - 1.0);
  const double y0 = std::clamp(d.aabb.cy - d.aabb.h / 2, 0.0, grid.height - 1.0);
  const double y1 = std::clamp(d.aabb.cy + d.aabb.h / 2, 0.0, grid.height - 1.0);
  return {{(x0 + x1) / 2, (y0 + y1) / 2}, 0.0, x1 - x0, y1 - y0};
}

/// Pixel-extent AABB (center + size) of a mask's foreground.
inline std::optional<Aabb> mask_aabb(const BinaryMask& m) {
  int x0 = m.width, y0 = m.height, x1 = -1, y1 = -1;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.get(x, y)) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return std::nullopt;
  return Aabb{(x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0 + 1.0, y1 - y0 + 1.0};
}

/// Geometry used for sleeper sampling: the cleaned-mask minimum-area box when a
/// usable mask exists, the detection AABB otherwise.
inline RBox region_rbox(const RegionDetection& d, PixelGrid grid, int min_component_px) {
  if (d.mask) {
    try {
      return min_area_rbox(clean_mask(*d.mask, min_component_px));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate_mask) throw;
    }
  }
  return aabb_as_rbox(d, grid);
}

/// The box a region is classified in under the configured box mode.
inline RBox classification_rbox(const RegionDetection& d, PixelGrid grid, const PipelineConfig& cfg) {
  if (cfg.box_mode == BoxMode::aabb) return aabb_as_rbox(d, grid);
  return region_rbox(d, grid, cfg.min_component_px);
}

}  // namespace ballast

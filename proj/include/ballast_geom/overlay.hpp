#pragma once

// Batch visualisation: region boxes, sleeper sampling lines and label colours
// drawn over the frame, plus a raw | raw-colormap | corrected-colormap strip.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "bias_correction.hpp"
#include "core_model.hpp"
#include "ingest_io.hpp"
#include "png_io.hpp"
#include "sleeper_sampling.hpp"

namespace ballast {

using Color = std::array<std::uint8_t, 3>;

inline constexpr Color kSufficientColor{0, 200, 0};
inline constexpr Color kInsufficientColor{230, 0, 0};
inline constexpr Color kIndeterminateColor{240, 220, 0};
inline constexpr Color kSleeperLineColor{0, 230, 230};

inline Color label_color(Label l) {
  switch (l) {
    case Label::sufficient: return kSufficientColor;
    case Label::insufficient: return kInsufficientColor;
    case Label::indeterminate: return kIndeterminateColor;
  }
  return kIndeterminateColor;
}

inline Rgb8 blank_rgb(int w, int h) { return Rgb8{w, h, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, 0)}; }

inline void put_pixel(Rgb8& img, int x, int y, Color c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * img.width + x) * 3;
  img.pixels[i] = c[0];
  img.pixels[i + 1] = c[1];
  img.pixels[i + 2] = c[2];
}

/// Bresenham between rounded endpoints; off-image pixels are dropped.
inline void draw_line(Rgb8& img, Point2 a, Point2 b, Color c) {
  int x0 = static_cast<int>(std::lround(a.x)), y0 = static_cast<int>(std::lround(a.y));
  const int x1 = static_cast<int>(std::lround(b.x)), y1 = static_cast<int>(std::lround(b.y));
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    put_pixel(img, x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

inline void draw_rbox(Rgb8& img, const RBox& b, Color c) {
  const auto k = rbox_corners(b);
  for (std::size_t i = 0; i < 4; ++i) draw_line(img, k[i], k[(i + 1) % 4], c);
}

/// Shared display range for depth colormaps: 1st to 99th percentile of the
/// valid values of every frame passed in.
inline std::pair<double, double> depth_range(const std::vector<const DepthFrame*>& frames) {
  std::vector<double> v;
  for (const auto* f : frames)
    for (std::size_t i = 0; i < f->data.size(); ++i)
      if (f->valid[i]) v.push_back(f->data[i]);
  if (v.empty()) return {0.0, 1.0};
  auto pick = [&](double q) {
    auto k = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
  };
  const double lo = pick(0.01), hi = pick(0.99);
  return {lo, hi > lo ? hi : lo + 1e-6};
}

/// Piecewise-linear blue-cyan-yellow-red ramp.
inline Color colormap(double t) {
  t = std::clamp(t, 0.0, 1.0);
  static constexpr std::array<std::array<double, 3>, 4> stops{{{0, 0, 180}, {0, 220, 230}, {250, 230, 0}, {220, 0, 0}}};
  const double s = t * 3.0;
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(s), 2);
  const double f = s - static_cast<double>(k);
  Color c;
  for (std::size_t ch = 0; ch < 3; ++ch)
    c[ch] = static_cast<std::uint8_t>(std::lround(stops[k][ch] + f * (stops[k + 1][ch] - stops[k][ch])));
  return c;
}

/// Invalid pixels render black.
inline Rgb8 depth_colormap(const DepthFrame& f, std::pair<double, double> range) {
  Rgb8 img = blank_rgb(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      if (f.is_valid(x, y)) put_pixel(img, x, y, colormap((f.at(x, y) - range.first) / (range.second - range.first)));
  return img;
}

inline Rgb8 depth_gray(const DepthFrame& f, std::pair<double, double> range) {
  Rgb8 img = blank_rgb(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      if (!f.is_valid(x, y)) continue;
      const double t = std::clamp((f.at(x, y) - range.first) / (range.second - range.first), 0.0, 1.0);
      const auto g = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)));
      put_pixel(img, x, y, {g, g, g});
    }
  return img;
}

/// Frame backdrop: the RGB image when one of matching size exists, otherwise
/// the raw depth as grayscale (near is bright).
inline Rgb8 backdrop(const DepthFrame& raw, const std::optional<Rgb8>& rgb) {
  if (rgb) {
    if (rgb->width != raw.width || rgb->height != raw.height)
      throw Error(ErrorCode::dimension_mismatch, "rgb image size differs from the depth frame");
    return *rgb;
  }
  return depth_gray(raw, depth_range({&raw}));
}

/// Boxes in label colour plus sleeper sampling lines derived from the same
/// boxes. A result with no regions leaves the backdrop untouched.
inline Rgb8 render_overlay(const Rgb8& base, const FrameResult& result, double delta_w_px) {
  Rgb8 img = base;
  if (result.regions.empty()) return img;
  std::vector<RBox> boxes;
  for (const auto& r : result.regions) boxes.push_back(r.rbox);
  for (const auto& s : sampling_segments(boxes, delta_w_px, PixelGrid{base.width, base.height}))
    draw_line(img, s.a, s.b, kSleeperLineColor);
  for (const auto& r : result.regions) draw_rbox(img, r.rbox, label_color(r.label));
  return img;
}

/// 3W x H strip: backdrop | raw colormap | corrected colormap, sharing one range.
inline Rgb8 render_triptych(const Rgb8& base, const DepthFrame& raw, const DepthFrame& corrected) {
  const auto range = depth_range({&raw, &corrected});
  const Rgb8 panels[3] = {base, depth_colormap(raw, range), depth_colormap(corrected, range)};
  const int w = raw.width, h = raw.height;
  Rgb8 out = blank_rgb(3 * w, h);
  for (int p = 0; p < 3; ++p)
    for (int y = 0; y < h; ++y)
      std::copy_n(panels[p].pixels.begin() + static_cast<std::ptrdiff_t>(y) * w * 3, static_cast<std::size_t>(w) * 3,
                  out.pixels.begin() + (static_cast<std::ptrdiff_t>(y) * 3 * w + static_cast<std::ptrdiff_t>(p) * w) * 3);
  return out;
}

struct FrameOverlays {
  Rgb8 overlay;
  Rgb8 triptych;
};

inline FrameOverlays render_frame_overlays(const DepthFrame& raw, const std::optional<Rgb8>& rgb,
                                           const FrameResult& result, double delta_w_px) {
  const Rgb8 base = backdrop(raw, rgb);
  const DepthFrame corrected = result.corrected ? apply_correction(raw, result.theta) : raw;
  return {render_overlay(base, result, delta_w_px), render_triptych(base, raw, corrected)};
}

}  // namespace ballast

#pragma once

#include <gtest/gtest.h>

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "ballast_geom/ballast_geom.hpp"

namespace ballast::testing {

inline double deg(double d) { return d * kPi / 180.0; }

/// Fresh, empty directory under the system temp dir.
inline fs::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  fs::path p = fs::temp_directory_path() /
               ("ballast_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

/// Pixel centers inside `b` set to one.
inline BinaryMask rect_mask(const RBox& b, int w, int h) {
  BinaryMask m = BinaryMask::empty(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (inside(b, {static_cast<double>(x), static_cast<double>(y)})) m.set(x, y);
  return m;
}

/// Plain 3-bay scene used across modules.
inline SceneSpec basic_scene() {
  SceneSpec s;
  s.bays = {{BayKind::sufficient}, {BayKind::sufficient}, {BayKind::sufficient}};
  return s;
}

inline double angle_diff_mod_pi(double a, double b) {
  double d = std::remainder(a - b, kPi);
  return std::abs(d);
}

}  // namespace ballast::testing

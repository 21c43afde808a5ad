#pragma once

// Polynomial depth-bias surface: robust fitting on sleeper samples, temporal
// smoothing of the coefficients and removal of the spatially varying part.
//
// The surface is dz(x, y) = t1 x' + t2 y' + t3 x'^2 + t4 y'^2 + t5 x'y' + t6 over
// normalized coordinates x' = (x - x_offset) / x_scale (same for y). Fitting in
// raw pixel units would leave x^2 columns near 1e5 and ruin conditioning.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "core_model.hpp"

namespace ballast {

using DesignRow = std::array<double, 6>;

inline DesignRow design_row(double x, double y, const BiasNorm& n) {
  const double xs = (x - n.x_offset) / n.x_scale;
  const double ys = (y - n.y_offset) / n.y_scale;
  return {xs, ys, xs * xs, ys * ys, xs * ys, 1.0};
}

inline double eval_bias(const BiasParams& p, double x, double y) {
  const DesignRow r = design_row(x, y, p.norm);
  double s = 0.0;
  for (int i = 0; i < 6; ++i) s += r[i] * p.theta[i];
  return s;
}

/// The spatially varying part of the surface (everything except t6).
inline double eval_spatial_bias(const BiasParams& p, double x, double y) {
  return eval_bias(p, x, y) - p.theta[5];
}

namespace detail {

inline constexpr double kRankThreshold = 1e-10;

inline Eigen::Matrix<double, Eigen::Dynamic, 6> design_matrix(const SleeperSamples& s,
                                                              const std::vector<std::size_t>& idx,
                                                              const BiasNorm& n) {
  Eigen::Matrix<double, Eigen::Dynamic, 6> a(static_cast<Eigen::Index>(idx.size()), 6);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const DesignRow row = design_row(s[idx[r]].x, s[idx[r]].y, n);
    for (int c = 0; c < 6; ++c) a(static_cast<Eigen::Index>(r), c) = row[c];
  }
  return a;
}

// Least squares through column-pivoted Householder QR; nullopt when the design
// is rank deficient.
inline std::optional<Eigen::Matrix<double, 6, 1>> solve_ls(const Eigen::Matrix<double, Eigen::Dynamic, 6>& a,
                                                           const Eigen::VectorXd& z) {
  Eigen::ColPivHouseholderQR<Eigen::Matrix<double, Eigen::Dynamic, 6>> qr(a);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < 6) return std::nullopt;
  const auto& r = qr.matrixR();
  const double rmax = std::abs(r(0, 0));
  const double rmin = std::abs(r(5, 5));
  if (!(rmin > kRankThreshold * rmax)) return std::nullopt;
  Eigen::Matrix<double, 6, 1> t = qr.solve(z);
  if (!t.allFinite()) return std::nullopt;
  return t;
}

}  // namespace detail

/// Least-squares surface through the given samples (all of them).
/// Throws too_few_samples below 6 samples, degenerate_geometry when the sample
/// positions cannot determine all six coefficients.
inline BiasParams ls_fit(const SleeperSamples& s, const std::vector<std::size_t>& idx, const BiasNorm& n) {
  if (idx.size() < 6) throw Error(ErrorCode::too_few_samples, "least squares needs >= 6 samples, got " + std::to_string(idx.size()));
  const auto a = detail::design_matrix(s, idx, n);
  // Fit around the mean depth so that a depth offset only moves t6.
  double mean = 0.0;
  for (auto i : idx) mean += s[i].z;
  mean /= static_cast<double>(idx.size());
  Eigen::VectorXd z(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) z(static_cast<Eigen::Index>(r)) = s[idx[r]].z - mean;
  const auto t = detail::solve_ls(a, z);
  if (!t) throw Error(ErrorCode::degenerate_geometry, "sample positions leave the bias surface underdetermined");
  BiasParams p;
  p.norm = n;
  for (int i = 0; i < 6; ++i) p.theta[i] = (*t)(i);
  p.theta[5] += mean;
  return p;
}

inline BiasParams ls_fit(const SleeperSamples& s, const BiasNorm& n) {
  std::vector<std::size_t> idx(s.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return ls_fit(s, idx, n);
}

inline double rms_residual(const SleeperSamples& s, const std::vector<std::size_t>& idx, const BiasParams& p) {
  if (idx.empty()) return 0.0;
  double acc = 0.0;
  for (auto i : idx) {
    const double r = s[i].z - eval_bias(p, s[i].x, s[i].y);
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(idx.size()));
}

struct RansacResult {
  BiasParams params;
  std::vector<std::size_t> inliers;
  double rms = 0.0;  // of the refit over its inliers
};

inline constexpr std::size_t kMinRansacSamples = 12;
inline constexpr std::size_t kMinimalSubset = 6;

/// RANSAC over minimal 6-sample subsets followed by a least-squares refit on
/// the largest inlier set (|z - dz| < t_res). Ties on inlier count go to the
/// smaller refit RMS, then to the earlier iteration.
template <typename Rng>
RansacResult ransac_fit(const SleeperSamples& s, const PipelineConfig& cfg, const BiasNorm& n, Rng& rng) {
  const std::size_t count = s.size();
  if (count < kMinRansacSamples) {
    throw Error(ErrorCode::too_few_samples, "RANSAC needs >= 12 samples, got " + std::to_string(count));
  }
  std::vector<std::size_t> all(count);
  for (std::size_t i = 0; i < count; ++i) all[i] = i;
  const auto design = detail::design_matrix(s, all, n);
  Eigen::VectorXd z(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) z(static_cast<Eigen::Index>(i)) = s[i].z;

  std::uniform_int_distribution<std::size_t> pick(0, count - 1);
  std::vector<std::size_t> best_inliers;
  std::optional<double> best_refit_rms;
  bool any_candidate = false;

  auto refit_rms = [&](const std::vector<std::size_t>& inl) -> double {
    try {
      return rms_residual(s, inl, ls_fit(s, inl, n));
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  for (int it = 0; it < cfg.ransac_iters; ++it) {
    std::array<std::size_t, kMinimalSubset> subset{};
    for (std::size_t k = 0; k < kMinimalSubset; ++k) {
      std::size_t c;
      do {
        c = pick(rng);
      } while (std::find(subset.begin(), subset.begin() + k, c) != subset.begin() + k);
      subset[k] = c;
    }
    Eigen::Matrix<double, Eigen::Dynamic, 6> a(6, 6);
    Eigen::VectorXd zs(6);
    for (std::size_t k = 0; k < kMinimalSubset; ++k) {
      a.row(static_cast<Eigen::Index>(k)) = design.row(static_cast<Eigen::Index>(subset[k]));
      zs(static_cast<Eigen::Index>(k)) = z(static_cast<Eigen::Index>(subset[k]));
    }
    const auto theta = detail::solve_ls(a, zs);
    if (!theta) continue;
    any_candidate = true;

    const Eigen::VectorXd resid = z - design * (*theta);
    std::vector<std::size_t> inl;
    for (std::size_t i = 0; i < count; ++i)
      if (std::abs(resid(static_cast<Eigen::Index>(i))) < cfg.t_res) inl.push_back(i);

    if (inl.size() > best_inliers.size()) {
      best_inliers = std::move(inl);
      best_refit_rms.reset();
    } else if (inl.size() == best_inliers.size() && !inl.empty()) {
      if (!best_refit_rms) best_refit_rms = refit_rms(best_inliers);
      const double cand = refit_rms(inl);
      if (cand < *best_refit_rms) {
        best_inliers = std::move(inl);
        best_refit_rms = cand;
      }
    }
  }
  if (!any_candidate) throw Error(ErrorCode::fit_failed, "every RANSAC draw was degenerate");
  if (best_inliers.size() < kMinimalSubset) {
    throw Error(ErrorCode::fit_failed, "best hypothesis has only " + std::to_string(best_inliers.size()) + " inliers");
  }
  RansacResult out;
  try {
    out.params = ls_fit(s, best_inliers, n);
  } catch (const Error& e) {
    throw Error(ErrorCode::fit_failed, std::string("refit on inliers failed: ") + e.what());
  }
  out.rms = rms_residual(s, best_inliers, out.params);
  out.inliers = std::move(best_inliers);
  return out;
}

struct EmaState {
  std::optional<BiasParams> theta_prev;
  int frame_counter = 0;
};

/// theta_k = lambda * theta_raw + (1 - lambda) * theta_{k-1}; the first frame
/// takes theta_raw as is.
inline BiasParams ema_update(EmaState& state, const BiasParams& raw, double lambda) {
  BiasParams out = raw;
  if (state.theta_prev) {
    if (!(state.theta_prev->norm == raw.norm)) {
      throw Error(ErrorCode::incompatible_normalization, "EMA state and new fit use different coordinate normalizations");
    }
    for (int i = 0; i < 6; ++i) out.theta[i] = lambda * raw.theta[i] + (1.0 - lambda) * state.theta_prev->theta[i];
  }
  state.theta_prev = out;
  ++state.frame_counter;
  return out;
}

/// D_corr = D_raw - (dz - t6) on valid pixels; the global offset t6 is kept.
inline DepthFrame apply_correction(const DepthFrame& raw, const BiasParams& p) {
  DepthFrame out = raw;
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      if (!raw.is_valid(x, y)) continue;
      out.at(x, y) = raw.at(x, y) - eval_spatial_bias(p, x, y);
    }
  }
  return out;
}

}  // namespace ballast

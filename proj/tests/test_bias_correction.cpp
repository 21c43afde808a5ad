#include "test_util.hpp"

using namespace ballast;
using namespace ballast::testing;

namespace {

const BiasNorm kNorm = BiasNorm::for_grid({640, 480});

SleeperSamples surface_samples(const BiasParams& p, std::size_t n, std::uint64_t seed, double sigma = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0, 639), uy(0, 479);
  std::normal_distribution<double> N(0, 1);
  SleeperSamples s;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ux(rng), y = uy(rng);
    s.push_back({x, y, eval_bias(p, x, y) + sigma * N(rng), SampleSource::midline});
  }
  return s;
}

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST(DesignRow, Examples) {
  const BiasNorm n{100, 50, 10, 20};
  const auto c = design_row(100, 50, n);
  EXPECT_EQ(c, (DesignRow{0, 0, 0, 0, 0, 1}));
  const auto u = design_row(110, 50, n);
  EXPECT_EQ(u, (DesignRow{1, 0, 1, 0, 0, 1}));
  const auto h = design_row(105, 40, n);
  EXPECT_EQ(h, (DesignRow{0.5, -0.5, 0.25, 0.25, -0.25, 1}));
}

TEST(EvalBias, Examples) {
  const BiasNorm n{100, 50, 10, 20};
  EXPECT_EQ(eval_bias(BiasParams{{}, n}, 17, 33), 0.0);
  EXPECT_EQ(eval_bias(BiasParams{{0, 0, 0, 0, 0, 0.7}, n}, 17, 33), 0.7);
  EXPECT_NEAR(eval_bias(BiasParams{{0.01, 0, 0, 0, 0, 0}, n}, 110, 50), 0.01, 1e-15);
}

TEST(LsFit, ExactPlane) {
  const BiasParams truth{{0.01, 0, 0, 0, 0, 2}, kNorm};
  const auto fit = ls_fit(surface_samples(truth, 200, 1), kNorm);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(fit.theta[i], truth.theta[i], 1e-9);
}

TEST(LsFit, ExactQuadratic) {
  const BiasParams truth{{0.012, -0.02, 0.005, -0.007, 0.003, 1.8}, kNorm};
  const auto fit = ls_fit(surface_samples(truth, 300, 2), kNorm);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(fit.theta[i], truth.theta[i], 1e-9);
}

TEST(LsFit, CollinearSamplesAreDegenerate) {
  SleeperSamples s;
  for (int i = 0; i < 6; ++i) s.push_back({10.0 + 20 * i, 100.0, 2.0, SampleSource::midline});
  try {
    ls_fit(s, kNorm);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_geometry);
  }
  // two parallel lines still leave y^2 undetermined
  for (int i = 0; i < 20; ++i) s.push_back({5.0 + 30 * i, 300.0, 2.0, SampleSource::midline});
  EXPECT_THROW(ls_fit(s, kNorm), Error);
}

TEST(LsFit, TooFewSamples) {
  SleeperSamples s(5, SleeperSample{1, 1, 2, SampleSource::midline});
  try {
    ls_fit(s, kNorm);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::too_few_samples);
  }
}

TEST(LsFit, ResidualsOrthogonalToDesign) {
  const BiasParams truth{{0.01, 0.02, -0.01, 0.004, 0.002, 2.0}, kNorm};
  const auto s = surface_samples(truth, 400, 3, 0.003);
  const auto fit = ls_fit(s, kNorm);
  std::array<double, 6> acc{};
  for (const auto& p : s) {
    const double r = p.z - eval_bias(fit, p.x, p.y);
    const auto row = design_row(p.x, p.y, kNorm);
    for (int c = 0; c < 6; ++c) acc[c] += r * row[c];
  }
  for (double a : acc) EXPECT_NEAR(a, 0.0, 1e-6);
}

TEST(LsFit, ConstantOffsetOnlyMovesTheta6) {
  const BiasParams truth{{0.01, 0.02, -0.01, 0.004, 0.002, 2.0}, kNorm};
  auto s = surface_samples(truth, 400, 4, 0.003);
  const auto base = ls_fit(s, kNorm);
  for (double c : {-1.0, 0.37, 5.0}) {
    auto t = s;
    for (auto& p : t) p.z += c;
    const auto fit = ls_fit(t, kNorm);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(fit.theta[i], base.theta[i], 1e-9);
    EXPECT_NEAR(fit.theta[5], base.theta[5] + c, 1e-9);
  }
}

TEST(Ransac, CleanSurfaceKeepsEverySample) {
  const BiasParams truth{{0.01, -0.015, 0.006, 0.004, -0.003, 2.0}, kNorm};
  const auto s = surface_samples(truth, 500, 5);
  PipelineConfig cfg;
  std::mt19937_64 rng(9);
  const auto r = ransac_fit(s, cfg, kNorm, rng);
  EXPECT_EQ(r.inliers.size(), 500u);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(r.params.theta[i], truth.theta[i], 1e-6);
}

TEST(Ransac, SpikesExcluded) {
  const BiasParams truth{{0.01, -0.015, 0.006, 0.004, -0.003, 2.0}, kNorm};
  auto s = surface_samples(truth, 500, 6, 0.002);
  for (std::size_t i = 0; i < 150; ++i) s[i].z += 0.5;
  PipelineConfig cfg;
  std::mt19937_64 rng(10);
  const auto r = ransac_fit(s, cfg, kNorm, rng);
  for (auto i : r.inliers) EXPECT_GE(i, 150u);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(r.params.theta[i], truth.theta[i], 5e-4);
}

TEST(Ransac, TooFewSamples) {
  const BiasParams truth{{}, kNorm};
  const auto s = surface_samples(truth, 5, 1);
  PipelineConfig cfg;
  std::mt19937_64 rng(1);
  try {
    ransac_fit(s, cfg, kNorm, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::too_few_samples);
  }
}

TEST(Ransac, AllDrawsDegenerateFails) {
  SleeperSamples s;
  for (int i = 0; i < 40; ++i) s.push_back({5.0 + 15 * i, 200.0, 2.0, SampleSource::midline});
  PipelineConfig cfg;
  std::mt19937_64 rng(1);
  try {
    ransac_fit(s, cfg, kNorm, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::fit_failed);
  }
}

TEST(Ransac, FixedSeedIsBitReproducible) {
  const BiasParams truth{{0.01, -0.015, 0.006, 0.004, -0.003, 2.0}, kNorm};
  auto s = surface_samples(truth, 600, 7, 0.002);
  for (std::size_t i = 0; i < 100; ++i) s[i * 5].z += 0.5;
  PipelineConfig cfg;
  std::mt19937_64 r1(42), r2(42);
  const auto a = ransac_fit(s, cfg, kNorm, r1);
  const auto b = ransac_fit(s, cfg, kNorm, r2);
  EXPECT_EQ(a.params.theta, b.params.theta);
  EXPECT_EQ(a.inliers, b.inliers);
}

TEST(Ema, FirstFrameAndFormula) {
  EmaState st;
  const BiasParams t{{1, 2, 3, 4, 5, 6}, kNorm};
  EXPECT_EQ(ema_update(st, t, 0.2).theta, t.theta);
  EmaState zero;
  zero.theta_prev = BiasParams{{}, kNorm};
  const auto out = ema_update(zero, BiasParams{{1, 1, 1, 1, 1, 1}, kNorm}, 0.2);
  for (double v : out.theta) EXPECT_DOUBLE_EQ(v, 0.2);
  EXPECT_EQ(zero.theta_prev->theta, out.theta);
}

TEST(Ema, GeometricConvergence) {
  EmaState st;
  st.theta_prev = BiasParams{{}, kNorm};
  ema_update(st, BiasParams{{0, 0, 0, 0, 0, 0}, kNorm}, 0.2);  // theta_1 = 0
  const double target = 1.0;
  for (int k = 2; k <= 50; ++k) {
    const auto th = ema_update(st, BiasParams{{target, target, target, target, target, target}, kNorm}, 0.2);
    const double expected = std::pow(0.8, k - 1);
    for (double v : th.theta) EXPECT_NEAR(std::abs(v - target), expected, 1e-14);
  }
}

TEST(Ema, NormMismatchThrows) {
  EmaState st;
  ema_update(st, BiasParams{{}, kNorm}, 0.2);
  try {
    ema_update(st, BiasParams{{}, BiasNorm::for_grid({320, 240})}, 0.2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::incompatible_normalization);
  }
}

TEST(ApplyCorrection, OffsetOnlyIsIdentity) {
  auto f = DepthFrame::filled(32, 24, 2.0);
  f.at(3, 3) = 2.5;
  EXPECT_EQ(apply_correction(f, BiasParams{{0, 0, 0, 0, 0, 5}, BiasNorm::for_grid(f.grid())}).data, f.data);
}

TEST(ApplyCorrection, PlantedBiasRemovedAndInvalidKept) {
  const PixelGrid g{64, 48};
  const BiasParams p{{0.02, -0.01, 0.005, 0.003, -0.004, 0.9}, BiasNorm::for_grid(g)};
  DepthFrame raw = DepthFrame::filled(g.width, g.height, 0);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) raw.at(x, y) = 2.0 + 0.001 * x + eval_bias(p, x, y);
  raw.invalidate(5, 5);
  const auto c = apply_correction(raw, p);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      if (x == 5 && y == 5) continue;
      EXPECT_NEAR(c.at(x, y), 2.0 + 0.001 * x + 0.9, 1e-9);
    }
  EXPECT_FALSE(c.is_valid(5, 5));
}

TEST(ApplyCorrection, SyntheticFrameRmsUnderThreeMillimeters) {
  SceneSpec s = basic_scene();
  s.theta_true = scale_spatial_bias({0.02, -0.01, 0.01, 0.008, -0.006, 0}, s.grid(), 0.05);
  s.noise_sigma_m = 0.002;
  const auto scene = render_scene(s);
  PipelineConfig cfg;
  BallastPipeline pipe(cfg);
  const auto out = pipe.process(0, scene.frames[0].raw, scene.detections[0]);
  EXPECT_LT(correction_rms(out.corrected, scene.frames[0]), 0.003);
}

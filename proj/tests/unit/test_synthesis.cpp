#include <gtest/gtest.h>

#include "oracles.hpp"
#include "varimix/errors.hpp"
#include "varimix/metrics.hpp"
#include "varimix/mixing.hpp"
#include "varimix/parallel.hpp"
#include "varimix/synthesis.hpp"

using namespace varimix;

namespace {

SceneConfig small_scene(VariabilityMode mode, double snr, std::uint64_t seed) {
  SceneConfig c;
  c.abundances.height = 12;
  c.abundances.width = 10;
  c.abundances.correlation_length = 3;
  c.variability.classes.assign(3, ClassVariability{});
  for (auto& k : c.variability.classes) {
    k.mode = mode;
    k.variants = 4;
  }
  c.snr_db = snr;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Hapke, MatchesHFunctionForm) {
  for (double w = 0.0; w <= 1.0; w += 0.05) {
    for (const double mu1 : {0.1, 0.5, 1.0}) {
      for (const double mu2 : {0.3, 0.9}) {
        Vector a(1);
        a << w;
        EXPECT_NEAR(hapke_reflectance(a, mu1, mu2)(0), oracle::hapke(w, mu1, mu2), 1e-14);
      }
    }
  }
}

TEST(Hapke, EndpointsAndMidpoint) {
  Vector w(3);
  w << 0.0, 1.0, 0.5;
  const Vector y = hapke_reflectance(w, 1.0, 1.0);
  EXPECT_EQ(y(0), 0.0);
  EXPECT_NEAR(y(1), 1.0, 1e-12);
  EXPECT_NEAR(y(2), 0.0857864, 1e-6);
  const Vector y2 = hapke_reflectance(w, 0.3, 0.7);
  EXPECT_NEAR(y2(1), 1.0, 1e-12);
}

TEST(Hapke, MonotoneInAlbedo) {
  Vector w(101);
  for (int i = 0; i <= 100; ++i) w(i) = i / 100.0;
  for (const double mu : {0.2, 0.6, 1.0}) {
    const Vector y = hapke_reflectance(w, mu, 0.8);
    for (int i = 1; i <= 100; ++i) EXPECT_GT(y(i) - y(i - 1), 1e-12);
  }
  Vector bad(1);
  bad << 1.2;
  EXPECT_THROW(hapke_reflectance(bad, 1.0, 1.0), DomainError);
  EXPECT_THROW(hapke_reflectance(w, 0.0, 1.0), DomainError);
}

TEST(Atmospheric, IdentityCases) {
  Vector g = Vector::LinSpaced(20, 0.05, 0.8);
  EXPECT_NEAR((atmospheric_reflectance(g, 0.6, 0.6, 1.0, 0.2) - g).norm(), 0.0, 1e-12);
  EXPECT_NEAR((atmospheric_reflectance(g, 0.3, 0.9, 0.0, 0.2) - g).norm(), 0.0, 1e-12);
  // ratio (e mu1 + s)/(e mu2 + s)
  EXPECT_NEAR(atmospheric_reflectance(g, 0.5, 1.0, 1.0, 0.2)(3), g(3) * 0.7 / 1.2, 1e-15);
}

TEST(ScalingVariants, ElmmAndGlmmProperties) {
  const Vector m0 = Vector::LinSpaced(30, 0.1, 0.6);
  ClassVariability p;
  p.variants = 6;
  p.psi = {1.0, 1.0};
  const Matrix same = scaling_variants(m0, ScalingMode::elmm, p, 3);
  for (Eigen::Index k = 0; k < same.cols(); ++k) EXPECT_EQ(same.col(k), m0);

  p.psi = {0.7, 1.3};
  const Matrix scaled = scaling_variants(m0, ScalingMode::elmm, p, 3);
  for (Eigen::Index k = 0; k < scaled.cols(); ++k) {
    EXPECT_NEAR(spectral_angle(scaled.col(k), m0), 0.0, 1e-7);
    const double psi = scaled(0, k) / m0(0);
    EXPECT_GE(psi, 0.7);
    EXPECT_LE(psi, 1.3);
  }

  ClassVariability e, g;
  e.variants = g.variants = 3;
  e.psi = {1.1, 1.1};
  g.band_scale = {1.1, 1.1};
  const Matrix me = scaling_variants(m0, ScalingMode::elmm, e, 9);
  const Matrix mg = scaling_variants(m0, ScalingMode::glmm, g, 9);
  EXPECT_LE((me - mg).lpNorm<Eigen::Infinity>(), 1e-14);

  g.band_scale = {0.8, 1.2};
  const Matrix varied = scaling_variants(m0, ScalingMode::glmm, g, 9);
  const Vector ratio = varied.col(0).cwiseQuotient(m0);
  EXPECT_GT(ratio.maxCoeff() - ratio.minCoeff(), 1e-4);
  EXPECT_GE(ratio.minCoeff(), 0.8 - 1e-12);
  EXPECT_LE(ratio.maxCoeff(), 1.2 + 1e-12);
}

TEST(Abundances, DirichletOnSimplexWithPurePixels) {
  const AbundanceMap a = sample_abundances_dirichlet(1000, {1.0, 2.0, 0.5}, 0.1, 5);
  EXPECT_TRUE(a.sum_to_one());
  int pure = 0;
  for (std::size_t n = 0; n < a.pixels(); ++n) {
    EXPECT_NEAR(a.pixel(n).sum(), 1.0, 1e-12);
    if (a.pixel(n).maxCoeff() == 1.0) ++pure;
  }
  EXPECT_GE(pure, 100);
  // mean of Dirichlet(alpha) is alpha / sum(alpha)
  const Vector mean = a.fractions().rowwise().mean();
  EXPECT_NEAR(mean(1), 2.0 / 3.5, 0.05);
  EXPECT_EQ(sample_abundances_dirichlet(1000, {1.0, 2.0, 0.5}, 0.1, 5).fractions(), a.fractions());
}

TEST(Abundances, GrfIsSpatiallySmoothAndSharpnessControlsPurity) {
  const AbundanceMap smooth = sample_abundances_grf(40, 40, 3, 6.0, 0.5, 0.0, 11);
  const AbundanceMap sharp = sample_abundances_grf(40, 40, 3, 6.0, 0.05, 0.0, 11);
  auto neighbour_diff = [](const AbundanceMap& a) {
    double d = 0.0;
    for (std::size_t r = 0; r < 40; ++r) {
      for (std::size_t c = 0; c + 1 < 40; ++c) d += (a.pixel(r * 40 + c) - a.pixel(r * 40 + c + 1)).norm();
    }
    return d / (40.0 * 39.0);
  };
  const AbundanceMap rough = sample_abundances_grf(40, 40, 3, 1.0, 0.5, 0.0, 11);
  EXPECT_LT(neighbour_diff(smooth), neighbour_diff(rough));
  EXPECT_GT(sharp.fractions().colwise().maxCoeff().mean(), smooth.fractions().colwise().maxCoeff().mean());
  for (std::size_t n = 0; n < smooth.pixels(); ++n) EXPECT_NEAR(smooth.pixel(n).sum(), 1.0, 1e-12);
}

TEST(Scene, CleanImageIsPerPixelMixture) {
  const SpectralLibrary base = reference_base_library(40);
  SceneConfig cfg = small_scene(VariabilityMode::hapke, 30.0, 8);
  cfg.variability.classes[0].mode = VariabilityMode::atmospheric;
  cfg.variability.classes[2].mode = VariabilityMode::glmm_scaling;
  const SceneTruth t = synthesize_scene(base, cfg);
  for (std::size_t n = 0; n < t.image_clean.pixels(); ++n) {
    EXPECT_LE((t.image_clean.pixel(n) - t.endmembers.at(n) * t.abundances.pixel(n)).lpNorm<Eigen::Infinity>(), 1e-12);
    for (std::size_t p = 0; p < 3; ++p) {
      const auto k = t.variant_index(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n));
      EXPECT_EQ(t.endmembers.at(n).col(static_cast<Eigen::Index>(p)),
                t.variants.bundle(p).signatures.col(static_cast<Eigen::Index>(k)));
    }
  }
  EXPECT_NEAR(empirical_snr_db(t.image_clean, t.image_noisy), 30.0, 0.3);
}

TEST(Scene, NoVariabilityNoiselessIsClassicalLmm) {
  const SpectralLibrary base = reference_base_library(25);
  const SceneTruth t = synthesize_scene(base, small_scene(VariabilityMode::none, kNoiseless, 2));
  const Matrix m = base.class_means();
  EXPECT_LE((t.image_noisy.data() - m * t.abundances.fractions()).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Scene, DeterministicAcrossThreadCounts) {
  const SpectralLibrary base = reference_base_library(30);
  const SceneConfig cfg = small_scene(VariabilityMode::hapke, 25.0, 77);
  const auto before = num_threads();
  set_num_threads(1);
  const SceneTruth a = synthesize_scene(base, cfg);
  set_num_threads(4);
  const SceneTruth b = synthesize_scene(base, cfg);
  set_num_threads(before);
  EXPECT_EQ(a.image_noisy.data(), b.image_noisy.data());
  EXPECT_EQ(a.abundances.fractions(), b.abundances.fractions());
  EXPECT_EQ(a.variant_index, b.variant_index);
  SceneConfig other = cfg;
  other.seed = 78;
  EXPECT_NE(synthesize_scene(base, other).image_noisy.data(), a.image_noisy.data());
}

TEST(Scene, PaperShape) {
  SceneConfig cfg = small_scene(VariabilityMode::hapke, 30.0, 1);
  cfg.abundances.height = cfg.abundances.width = 50;
  cfg.abundances.correlation_length = 8;
  const SceneTruth t = synthesize_scene(reference_base_library(198), cfg);
  EXPECT_EQ(t.image_noisy.bands(), 198u);
  EXPECT_EQ(t.image_noisy.pixels(), 2500u);
  EXPECT_EQ(t.abundances.classes(), 3u);
  EXPECT_NEAR(empirical_snr_db(t.image_clean, t.image_noisy), 30.0, 0.3);
}

TEST(Scene, RejectsBadConfigs) {
  const SpectralLibrary base = reference_base_library(10);
  SceneConfig cfg = small_scene(VariabilityMode::none, 30.0, 1);
  cfg.variability.classes.pop_back();
  EXPECT_THROW(synthesize_scene(base, cfg), ConfigError);
  cfg = small_scene(VariabilityMode::hapke, 30.0, 1);
  cfg.variability.classes[0].mu1 = {0.0, 0.5};
  EXPECT_THROW(synthesize_scene(base, cfg), ConfigError);
  EXPECT_THROW(parse_variability_mode("shadow"), ConfigError);
}

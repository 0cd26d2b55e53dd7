#include <gtest/gtest.h>

#include <cmath>

#include "spect/noise.hpp"
#include "spect/phantoms.hpp"

using namespace spect;

TEST(SheppLogan, CentreAndOutsideValues) {
  const ActivityImage m = shepp_logan(128, SheppLoganVariant::kModified);
  // outside the skull ellipse
  EXPECT_EQ(m.at(0, 0), 0.0);
  EXPECT_EQ(m.at(64, 0), 0.0);
  // skull rim: first ellipse only
  EXPECT_NEAR(m.at(64, 20), 1.0, 1e-12);
  // brain interior: 1 - 0.8
  EXPECT_NEAR(m.at(20, 64), 0.2, 1e-12);

  const ActivityImage o = shepp_logan(128, SheppLoganVariant::kOriginal);
  EXPECT_NEAR(o.at(64, 20), 2.0, 1e-12);
  EXPECT_NEAR(o.at(20, 64), 1.02, 1e-12);
}

TEST(SheppLogan, MirrorSymmetricExceptSmallFeatures) {
  const std::size_t n = 64;
  const ActivityImage m = shepp_logan(n, SheppLoganVariant::kModified);
  std::size_t mismatched = 0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) mismatched += m.at(r, c) != m.at(r, n - 1 - c);
  EXPECT_GT(mismatched, 0u);
  EXPECT_LT(mismatched, n * n / 4);
  EXPECT_THROW(shepp_logan(8, SheppLoganVariant::kModified), std::invalid_argument);
  EXPECT_THROW(parse_shepp_logan_variant("other"), std::invalid_argument);
}

TEST(Phantoms, RasterizeSumsOverlaps) {
  PhantomRecipe r;
  r.n = 16;
  r.shapes = {{0, 0, 0.5, 0.5, 0, 1.0}, {0, 0, 0.2, 0.2, 0, 0.5}, {0.7, 0.7, 0.1, 0.1, 0, -3.0}};
  const ActivityImage img = rasterize(r);
  EXPECT_NEAR(img.at(7, 7), 1.5, 1e-12);
  EXPECT_NEAR(img.at(7, 2), 0.0, 1e-12);
  for (double v : img.data()) EXPECT_GE(v, 0.0);
}

TEST(Phantoms, RandomIsSeededAndNonblank) {
  RandomPhantomConfig cfg;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng a(s), b(s);
    const auto [ra, ia] = random_phantom(a, 32, cfg);
    const auto [rb, ib] = random_phantom(b, 32, cfg);
    EXPECT_EQ(ra, rb);
    EXPECT_GT(ia.max(), 0.0);
    EXPECT_GE(ra.shapes.size(), cfg.min_shapes);
    EXPECT_LE(ra.shapes.size(), cfg.max_shapes);
    for (const auto& e : ra.shapes) {
      EXPECT_LE(std::hypot(e.cx, e.cy), cfg.center_radius + 1e-12);
      EXPECT_GE(e.intensity, cfg.min_intensity);
    }
  }
  RandomPhantomConfig bad;
  bad.min_shapes = 5;
  bad.max_shapes = 2;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Phantoms, RecipeJsonRoundTrip) {
  Rng rng(9);
  const auto [recipe, img] = random_phantom(rng, 32);
  EXPECT_EQ(recipe_from_json(recipe_to_json(recipe)), recipe);
}

TEST(Noise, PoissonMomentsSmallAndLarge) {
  for (double lambda : {0.5, 4.0, 25.0, 30.0, 200.0, 5000.0}) {
    Rng rng(static_cast<std::uint64_t>(lambda * 10));
    const int n = 40000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(sample_poisson(rng, lambda));
      s += k;
      s2 += k * k;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    EXPECT_LT(std::abs(mean - lambda) / std::sqrt(lambda / n), 4.5) << lambda;
    EXPECT_NEAR(var / lambda, 1.0, 0.05) << lambda;
  }
  Rng rng(1);
  EXPECT_EQ(sample_poisson(rng, 0.0), 0u);
  EXPECT_THROW(sample_poisson(rng, -1.0), std::invalid_argument);
}

TEST(Noise, PoissonizeIsSeededAndScaled) {
  Sinogram s(3, 4, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  const NoiseConfig cfg{100.0, 5};
  const Sinogram a = poissonize(s, cfg), b = poissonize(s, cfg);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(a.data()[i], b.data()[i]);
    // values are integer counts divided by the scale
    const double k = a.data()[i] * 100.0;
    EXPECT_NEAR(k, std::round(k), 1e-9);
  }
  EXPECT_EQ(a.data()[0], 0.0);
  EXPECT_DOUBLE_EQ(counts_scale_for_peak(s, 500.0), 500.0 / 11.0);
  EXPECT_THROW(poissonize(s, {0.0, 1}), std::invalid_argument);
}

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "flare/error.hpp"
#include "flare/synthesis.hpp"
#include "oracles.hpp"

namespace sy = flare::synthesis;
using flare::LinearImage;

namespace {

LinearImage gaussian_blob(std::uint32_t n, double sigma) {
  LinearImage img(n, n, 3);
  for (std::uint32_t y = 0; y < n; ++y)
    for (std::uint32_t x = 0; x < n; ++x) {
      const double r2 = std::pow(x - n / 2.0, 2) + std::pow(y - n / 2.0 + 3, 2);
      for (std::uint32_t c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>((1.0 + c) * std::exp(-r2 / (2 * sigma * sigma)));
    }
  return img;
}

}  // namespace

TEST(SceneAug, NeutralAugmentationIsIdentity) {
  std::mt19937_64 rng(20);
  const auto img = oracle::random_image(16, 12, 3, rng);
  EXPECT_EQ(sy::apply_scene_aug(img, {false, false, 1.0, 1.0}), img);
}

TEST(SceneAug, GammaAndGainRangesOverTenThousandSeeds) {
  int flips_h = 0, flips_v = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto a = sy::sample_scene_aug(s);
    ASSERT_GE(a.gamma, 1.8);
    ASSERT_LE(a.gamma, 2.2);
    ASSERT_GE(a.gain, 0.8);
    ASSERT_LE(a.gain, 1.2);
    flips_h += a.flip_h;
    flips_v += a.flip_v;
  }
  EXPECT_NEAR(flips_h / 10000.0, 0.5, 0.03);
  EXPECT_NEAR(flips_v / 10000.0, 0.5, 0.03);
}

TEST(SceneAug, OutputClippedLinearAndDeterministic) {
  std::mt19937_64 rng(21);
  const auto img = oracle::random_image(16, 16, 3, rng);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto out = sy::augment_scene(img, s);
    EXPECT_EQ(out, sy::augment_scene(img, s));
    for (float v : out.samples()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
  // Gain then gamma, applied to the encoded value.
  LinearImage one(1, 1, 3, 0.5f);
  EXPECT_NEAR(sy::apply_scene_aug(one, {false, false, 1.2, 2.0}).at(0, 0), 0.36f, 1e-6);
  EXPECT_THROW(sy::apply_scene_aug(LinearImage(2, 2, 1), {}), flare::ParameterError);
}

TEST(SceneAug, DoubleHorizontalFlip) {
  std::mt19937_64 rng(22);
  const auto img = oracle::random_image(9, 7, 3, rng);
  const sy::SceneAug flip{true, false, 1.0, 1.0};
  EXPECT_EQ(sy::apply_scene_aug(sy::apply_scene_aug(img, flip), flip), img);
}

TEST(FlareAug, IdentityLeavesFlareUnchanged) {
  const auto blob = gaussian_blob(64, 8);
  EXPECT_EQ(sy::apply_flare_aug(blob, sy::AffineAug::identity()), blob);
}

TEST(FlareAug, SampledRanges) {
  const sy::FlareAugConfig cfg;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto a = sy::sample_flare_aug(s, cfg);
    ASSERT_GE(a.rotation, 0.0);
    ASSERT_LE(a.rotation, 2 * std::numbers::pi);
    ASSERT_LE(std::abs(a.dx), 10.0);
    ASSERT_LE(std::abs(a.dy), 10.0);
    ASSERT_LE(std::abs(a.shear), std::numbers::pi / 9);
    ASSERT_GE(a.sx, 0.9);
    ASSERT_LE(a.sx, 1.2);
    ASSERT_GE(a.sy, 0.9);
    ASSERT_LE(a.sy, 1.2);
    for (double g : a.gains) {
      ASSERT_GE(g, 0.0);
      ASSERT_LE(g, 10.0);
    }
  }
}

TEST(FlareAug, HalfTurnTwiceRestoresSmoothFlare) {
  const auto blob = gaussian_blob(96, 6);
  const auto back = sy::rotate_about_center(sy::rotate_about_center(blob, std::numbers::pi), std::numbers::pi);
  for (std::size_t i = 0; i < blob.size(); ++i) ASSERT_NEAR(back.data()[i], blob.data()[i], 0.02);
}

TEST(FlareAug, TranslationMovesContent) {
  const auto blob = gaussian_blob(64, 4);
  sy::AffineAug a;
  a.dx = 5;
  a.dy = -3;
  const auto out = sy::apply_affine(blob, a);
  EXPECT_FLOAT_EQ(out.at(32 + 5, 29 - 3, 0), blob.at(32, 29, 0));
}

TEST(FlareAug, ZeroGainsGiveZeroFlareAndNoOpComposite) {
  const auto blob = gaussian_blob(32, 4);
  auto a = sy::sample_flare_aug(3);
  a.gains = {0, 0, 0};
  const auto f = sy::apply_flare_aug(blob, a);
  for (float v : f.samples()) ASSERT_EQ(v, 0.0f);
  std::mt19937_64 rng(23);
  const auto scene = oracle::random_image(32, 32, 3, rng);
  const auto s = sy::composite(scene, f, 0.0, 1);
  EXPECT_EQ(s.corrupted, s.scene);
}

TEST(FlareAug, Errors) {
  sy::AffineAug a;
  a.sx = 0;
  EXPECT_THROW(sy::apply_affine(LinearImage(4, 4, 3), a), flare::ParameterError);
  sy::AffineAug g;
  g.gains = {1, -1, 1};
  EXPECT_THROW(sy::apply_flare_aug(LinearImage(4, 4, 3), g), flare::ParameterError);
}

TEST(Noise, SigmaStatistics) {
  double sum = 0;
  const int N = 100000;
  for (int s = 0; s < N; ++s) {
    const double sigma = sy::sample_noise_sigma(s);
    ASSERT_GE(sigma, 0.0);
    sum += sigma * sigma;
  }
  EXPECT_NEAR(sum / N, 0.01, 0.0005);
  EXPECT_EQ(sy::sample_noise_sigma(5), sy::sample_noise_sigma(5));
}

TEST(Composite, BlackInBlackOut) {
  const LinearImage zero(8, 8, 3);
  EXPECT_EQ(sy::composite(zero, zero, 0.0, 1).corrupted, zero);
}

TEST(Composite, ClipsAtOne) {
  const auto s = sy::composite(LinearImage(2, 2, 3, 0.8f), LinearImage(2, 2, 3, 0.5f), 0.0, 1);
  for (float v : s.corrupted.samples()) EXPECT_EQ(v, 1.0f);
}

TEST(Composite, RoundTripIsBitExactProperty) {
  std::mt19937_64 rng(24);
  std::uniform_int_distribution<std::uint32_t> dim(1, 40);
  std::uniform_real_distribution<double> split(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = split(rng);
    const auto w = dim(rng), h = dim(rng);
    const auto scene = oracle::random_image(w, h, 3, rng, 0.0, a);
    const auto flare = oracle::random_image(w, h, 3, rng, 0.0, 1.0 - a);
    const auto s = sy::composite(scene, flare, 0.0, trial);
    for (std::size_t i = 0; i < scene.size(); ++i) {
      ASSERT_EQ(s.corrupted.data()[i] - s.flare.data()[i], s.scene.data()[i]);
      ASSERT_LE(std::abs(s.scene.data()[i] - scene.data()[i]), 0x1p-25f);
    }
  }
}

TEST(Composite, NoiseIsSeededAndBounded) {
  std::mt19937_64 rng(25);
  const auto scene = oracle::random_image(32, 32, 3, rng, 0.0, 0.5);
  const auto flare = oracle::random_image(32, 32, 3, rng, 0.0, 0.3);
  const auto a = sy::composite(scene, flare, 0.1, 7), b = sy::composite(scene, flare, 0.1, 7);
  EXPECT_EQ(a.corrupted, b.corrupted);
  EXPECT_NE(a.corrupted, sy::composite(scene, flare, 0.1, 8).corrupted);
  for (float v : a.corrupted.samples()) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
}

TEST(Composite, ShapeMismatchAndBadSigma) {
  EXPECT_THROW(sy::composite(LinearImage(2, 2, 3), LinearImage(3, 2, 3), 0, 0), flare::ParameterError);
  EXPECT_THROW(sy::composite(LinearImage(2, 2, 3), LinearImage(2, 2, 3), -1, 0), flare::ParameterError);
}

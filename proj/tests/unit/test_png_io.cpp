#include <gtest/gtest.h>

#include "flare/error.hpp"
#include "flare/png_io.hpp"
#include "flare/tensor_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using flare::LinearImage;

TEST(Png, EightBitRoundTripIsExactOnCodeValues) {
  testutil::TempDir dir;
  LinearImage img(5, 4, 3);
  int k = 0;
  for (float& v : img.samples()) v = static_cast<float>((k++ * 37) % 256) / 255.0f;
  flare::write_png(dir / "a.png", img);
  const auto back = flare::read_png(dir / "a.png");
  ASSERT_TRUE(back.same_shape(img));
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back.data()[i], img.data()[i], 1e-7);
}

TEST(Png, SixteenBitPrecision) {
  testutil::TempDir dir;
  std::mt19937_64 rng(9);
  const auto img = oracle::random_image(31, 17, 3, rng);
  flare::write_png(dir / "a.png", img, flare::PngDepth::k16);
  const auto back = flare::read_png(dir / "a.png");
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back.data()[i], img.data()[i], 0.5 / 65535 + 1e-7);
}

TEST(Png, GrayExpandsToRgb) {
  testutil::TempDir dir;
  LinearImage g(3, 2, 1, 0.4f);
  flare::write_png(dir / "g.png", g);
  const auto back = flare::read_png(dir / "g.png");
  EXPECT_EQ(back.channels(), 3u);
  EXPECT_NEAR(back.at(2, 1, 1), 102.0f / 255.0f, 1e-7);
}

TEST(Png, LinearHelpersApplyGamma) {
  testutil::TempDir dir;
  LinearImage img(1, 1, 3, 0.25f);
  flare::save_png_linear(dir / "a.png", img, 2.0, flare::PngDepth::k16);
  const auto enc = flare::read_png(dir / "a.png");
  EXPECT_NEAR(enc.at(0, 0), 0.5f, 1e-4);
  EXPECT_NEAR(flare::load_png_linear(dir / "a.png", 2.0).at(0, 0), 0.25f, 1e-4);
}

TEST(Png, MissingOrCorruptFile) {
  testutil::TempDir dir;
  EXPECT_THROW(flare::read_png(dir / "none.png"), flare::IoError);
  flare::write_file_atomic(dir / "bad.png", std::string("not a png at all"));
  EXPECT_THROW(flare::read_png(dir / "bad.png"), std::runtime_error);
}

TEST(ImageAny, DispatchesOnExtension) {
  testutil::TempDir dir;
  std::mt19937_64 rng(10);
  const auto img = oracle::random_image(6, 5, 3, rng, 0.0, 2.0);
  flare::save_image_any(dir / "a.flt", img);
  EXPECT_EQ(flare::load_image_any(dir / "a.flt"), img);
  EXPECT_THROW(flare::load_image_any(dir / "a.bmp"), flare::ParameterError);
}

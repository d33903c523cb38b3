#include <cstring>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "flare/error.hpp"
#include "flare/tensor_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using flare::Tensor;

namespace {

std::vector<char> header(const char magic[4], std::vector<std::uint32_t> dims) {
  std::vector<char> b(magic, magic + 4);
  auto put = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  put(static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put(d);
  return b;
}

}  // namespace

TEST(TensorFile, RoundTrip512x512x3IsBitIdentical) {
  testutil::TempDir dir;
  std::mt19937_64 rng(7);
  const auto img = oracle::random_image(512, 512, 3, rng, -3.0, 3.0);
  flare::write_image_tensor(dir / "a.flt", img);
  EXPECT_EQ(std::filesystem::file_size(dir / "a.flt"), 4u + 4u + 12u + 3145728u);
  const auto back = flare::read_image_tensor(dir / "a.flt");
  ASSERT_TRUE(back.same_shape(img));
  EXPECT_EQ(std::memcmp(back.data().data(), img.data().data(), img.size() * 4), 0);
}

TEST(TensorFile, HeaderLayout) {
  Tensor t{{512, 512, 3}, std::vector<float>(512 * 512 * 3, 1.0f)};
  const auto bytes = flare::encode_tensor(t);
  EXPECT_EQ(bytes.size() - 20, 3145728u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FLT1");
  const auto expected = header("FLT1", {512, 512, 3});
  EXPECT_TRUE(std::equal(expected.begin(), expected.end(), bytes.begin()));
  // 1.0f little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(bytes[23]), 0x3f);
}

TEST(TensorFile, BitExactForArbitraryFinitePayloadsProperty) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::uint32_t> bits;
  std::uniform_int_distribution<int> nd(1, 4), dd(1, 9);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor t;
    for (int i = nd(rng); i > 0; --i) t.dims.push_back(dd(rng));
    t.data.resize(t.element_count());
    for (float& v : t.data) {
      do {
        const std::uint32_t b = bits(rng);
        std::memcpy(&v, &b, 4);
      } while (!std::isfinite(v));
    }
    const auto back = flare::decode_tensor(flare::encode_tensor(t));
    ASSERT_EQ(back.dims, t.dims);
    ASSERT_EQ(std::memcmp(back.data.data(), t.data.data(), t.data.size() * 4), 0);
  }
}

TEST(TensorFile, BadMagicIsFormatError) {
  auto bytes = header("XXXX", {1});
  bytes.resize(bytes.size() + 4, 0);
  try {
    flare::decode_tensor(bytes);
    FAIL() << "expected FormatError";
  } catch (const flare::FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(TensorFile, TruncatedPayloadReportsOffset) {
  auto bytes = header("FLT1", {2, 3});
  bytes.resize(bytes.size() + 20, 0);  // 24 needed
  try {
    flare::decode_tensor(bytes);
    FAIL() << "expected FormatError";
  } catch (const flare::FormatError& e) {
    EXPECT_EQ(e.offset(), 36u);  // where the data ran out
  }
}

TEST(TensorFile, TruncatedHeaderAndDims) {
  EXPECT_THROW(flare::decode_tensor(std::vector<char>{'F', 'L'}), flare::FormatError);
  auto bytes = header("FLT1", {2, 3});
  bytes.resize(10);
  EXPECT_THROW(flare::decode_tensor(bytes), flare::FormatError);
}

TEST(TensorFile, DimOverflowIsFormatError) {
  auto bytes = header("FLT1", {0xffffffffu, 0xffffffffu, 0xffffffffu});
  EXPECT_THROW(flare::decode_tensor(bytes), flare::FormatError);
  auto many = header("FLT1", std::vector<std::uint32_t>(flare::kMaxTensorDims + 1, 1));
  EXPECT_THROW(flare::decode_tensor(many), flare::FormatError);
}

TEST(TensorFile, TrailingBytesRejected) {
  auto bytes = flare::encode_tensor(Tensor{{2}, {1.0f, 2.0f}});
  bytes.push_back(0);
  EXPECT_THROW(flare::decode_tensor(bytes), flare::FormatError);
}

TEST(TensorFile, MissingFileIsIoError) {
  EXPECT_THROW(flare::read_tensor("/nonexistent/x.flt"), flare::IoError);
}

TEST(TensorFile, ImageTensorShapeChecks) {
  EXPECT_THROW(flare::image_from_tensor(Tensor{{2, 2, 1, 1}, std::vector<float>(4)}), flare::FormatError);
  EXPECT_EQ(flare::image_from_tensor(Tensor{{2, 2}, std::vector<float>(4)}).channels(), 1u);
  EXPECT_THROW(flare::image_from_tensor(Tensor{{2, 2, 2}, std::vector<float>(8)}), flare::FormatError);
  const auto img = flare::image_from_tensor(Tensor{{2, 3, 1}, {0, 1, 2, 3, 4, 5}});
  EXPECT_EQ(img.width(), 3u);
  EXPECT_EQ(img.height(), 2u);
  EXPECT_EQ(img.at(2, 1), 5.0f);
}

TEST(AtomicWrite, LeavesNoTemporaries) {
  testutil::TempDir dir;
  flare::write_file_atomic(dir / "x.txt", std::string("hello"));
  flare::write_file_atomic(dir / "x.txt", std::string("world"));
  std::ifstream f(dir / "x.txt");
  std::string s;
  f >> s;
  EXPECT_EQ(s, "world");
  EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir.path()), {}), 1);
}

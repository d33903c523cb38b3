#include "flare/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "flare/error.hpp"
#include "flare/tensor_io.hpp"

namespace flare {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

LinearImage read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  std::vector<unsigned char> buf;
  png_uint_32 w = 0, h = 0;
  int depth = 8;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  if (png_get_bit_depth(png, info) == 16) png_set_swap(png);
  png_read_update_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  depth = png_get_bit_depth(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  buf.resize(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = buf.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  LinearImage out(w, h, 3);
  auto dst = out.samples();
  if (depth == 16) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const unsigned v = buf[2 * i] | (unsigned{buf[2 * i + 1]} << 8);
      dst[i] = static_cast<float>(v / 65535.0);
    }
  } else {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(buf[i] / 255.0);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const LinearImage& encoded, PngDepth depth) {
  const int bits = static_cast<int>(depth);
  const int color = encoded.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  const double maxv = bits == 16 ? 65535.0 : 255.0;

  auto tmp = path;
  tmp += ".tmp";
  {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) throw IoError("cannot open " + tmp.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw IoError("PNG encode failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, encoded.width(), encoded.height(), bits, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bits == 16) png_set_swap(png);

    const std::size_t row_samples = std::size_t{encoded.width()} * encoded.channels();
    std::vector<unsigned char> row(row_samples * (bits / 8));
    auto src = encoded.samples();
    for (std::uint32_t y = 0; y < encoded.height(); ++y) {
      for (std::size_t i = 0; i < row_samples; ++i) {
        const float v = std::clamp(src[y * row_samples + i], 0.0f, 1.0f);
        const auto q = static_cast<unsigned>(std::lround(v * maxv));
        if (bits == 16) {
          row[2 * i] = static_cast<unsigned char>(q & 0xff);
          row[2 * i + 1] = static_cast<unsigned char>(q >> 8);
        } else {
          row[i] = static_cast<unsigned char>(q);
        }
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into " + path.string());
}

LinearImage load_png_linear(const std::filesystem::path& path, double gamma) {
  return linearize(read_png(path), gamma);
}

void save_png_linear(const std::filesystem::path& path, const LinearImage& linear, double gamma,
                     PngDepth depth) {
  write_png(path, delinearize(linear, gamma), depth);
}

LinearImage load_image_any(const std::filesystem::path& path, double gamma) {
  if (path.extension() == ".flt") return read_image_tensor(path);
  if (path.extension() == ".png") return load_png_linear(path, gamma);
  throw ParameterError("unsupported image extension: " + path.string());
}

void save_image_any(const std::filesystem::path& path, const LinearImage& linear, double gamma) {
  if (path.extension() == ".flt") {
    write_image_tensor(path, linear);
  } else if (path.extension() == ".png") {
    save_png_linear(path, linear, gamma);
  } else {
    throw ParameterError("unsupported image extension: " + path.string());
  }
}

}  // namespace flare

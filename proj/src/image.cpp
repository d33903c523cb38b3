#include "flare/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flare/error.hpp"

namespace flare {

LinearImage::LinearImage(std::uint32_t width, std::uint32_t height, std::uint32_t channels,
                         float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width == 0 || height == 0) throw ParameterError("image dimensions must be >= 1");
  if (channels != 1 && channels != 3) throw ParameterError("image must have 1 or 3 channels");
  data_.assign(std::size_t{width} * height * channels, fill);
}

LinearImage::LinearImage(std::uint32_t width, std::uint32_t height, std::uint32_t channels,
                         std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width == 0 || height == 0) throw ParameterError("image dimensions must be >= 1");
  if (channels != 1 && channels != 3) throw ParameterError("image must have 1 or 3 channels");
  if (data_.size() != std::size_t{width} * height * channels) {
    throw ParameterError("image data length does not match width*height*channels");
  }
}

bool LinearImage::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void require_same_shape(const LinearImage& a, const LinearImage& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ParameterError(std::string(what) + ": shape mismatch (" + std::to_string(a.width()) +
                         "x" + std::to_string(a.height()) + "x" + std::to_string(a.channels()) +
                         " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()) +
                         "x" + std::to_string(b.channels()) + ")");
  }
}

namespace {

void require_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be positive");
}

}  // namespace

LinearImage linearize(const LinearImage& encoded, double gamma) {
  require_gamma(gamma);
  LinearImage out = encoded;
  if (gamma == 1.0) return out;
  for (float& v : out.samples()) {
    v = static_cast<float>(std::pow(static_cast<double>(std::max(v, 0.0f)), gamma));
  }
  return out;
}

LinearImage delinearize(const LinearImage& linear, double gamma) {
  require_gamma(gamma);
  LinearImage out = linear;
  const double inv = 1.0 / gamma;
  for (float& v : out.samples()) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    v = gamma == 1.0 ? c : static_cast<float>(std::pow(static_cast<double>(c), inv));
  }
  return out;
}

LinearImage bilinear_resample(const LinearImage& img, std::uint32_t out_w, std::uint32_t out_h) {
  if (out_w == 0 || out_h == 0) throw ParameterError("resample target must be >= 1x1");
  if (out_w == img.width() && out_h == img.height()) return img;

  const std::uint32_t C = img.channels();
  const double sx = static_cast<double>(img.width()) / out_w;
  const double sy = static_cast<double>(img.height()) / out_h;
  const double max_x = img.width() - 1.0;
  const double max_y = img.height() - 1.0;

  // Precompute the horizontal taps once per column.
  std::vector<std::uint32_t> x0(out_w), x1(out_w);
  std::vector<double> tx(out_w);
  for (std::uint32_t x = 0; x < out_w; ++x) {
    const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, max_x);
    x0[x] = static_cast<std::uint32_t>(fx);
    x1[x] = std::min(x0[x] + 1, img.width() - 1);
    tx[x] = fx - x0[x];
  }

  LinearImage out(out_w, out_h, C);
  for (std::uint32_t y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::uint32_t>(fy);
    const std::uint32_t y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = fy - y0;
    for (std::uint32_t x = 0; x < out_w; ++x) {
      for (std::uint32_t c = 0; c < C; ++c) {
        // a + t*(b - a) keeps constant regions exactly constant.
        const double a = img.at(x0[x], y0, c), b = img.at(x1[x], y0, c);
        const double d = img.at(x0[x], y1, c), e = img.at(x1[x], y1, c);
        const double top = a + tx[x] * (b - a);
        const double bot = d + tx[x] * (e - d);
        out.at(x, y, c) = static_cast<float>(top + ty * (bot - top));
      }
    }
  }
  return out;
}

float sample_bilinear_zero(const LinearImage& img, double x, double y, std::uint32_t c) {
  const double fx = std::floor(x), fy = std::floor(y);
  const double tx = x - fx, ty = y - fy;
  const auto ix = static_cast<long long>(fx), iy = static_cast<long long>(fy);
  const long long w = img.width(), h = img.height();
  auto fetch = [&](long long px, long long py) -> double {
    if (px < 0 || py < 0 || px >= w || py >= h) return 0.0;
    return img.at(static_cast<std::uint32_t>(px), static_cast<std::uint32_t>(py), c);
  };
  if (ix < -1 || iy < -1 || ix >= w || iy >= h) return 0.0f;
  const double a = fetch(ix, iy), b = fetch(ix + 1, iy);
  const double d = fetch(ix, iy + 1), e = fetch(ix + 1, iy + 1);
  const double top = a + tx * (b - a);
  const double bot = d + tx * (e - d);
  return static_cast<float>(top + ty * (bot - top));
}

LinearImage luminance(const LinearImage& rgb) {
  if (rgb.channels() != 3) throw ParameterError("luminance requires a 3-channel image");
  LinearImage out(rgb.width(), rgb.height(), 1);
  auto src = rgb.samples();
  auto dst = out.samples();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = kLumaR * src[3 * i] + kLumaG * src[3 * i + 1] + kLumaB * src[3 * i + 2];
  }
  return out;
}

LinearImage clip(const LinearImage& img, float lo, float hi) {
  LinearImage out = img;
  for (float& v : out.samples()) v = std::clamp(v, lo, hi);
  return out;
}

LinearImage flip_horizontal(const LinearImage& img) {
  LinearImage out(img.width(), img.height(), img.channels());
  const std::uint32_t W = img.width();
  for (std::uint32_t y = 0; y < img.height(); ++y)
    for (std::uint32_t x = 0; x < W; ++x)
      for (std::uint32_t c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(W - 1 - x, y, c);
  return out;
}

LinearImage flip_vertical(const LinearImage& img) {
  LinearImage out(img.width(), img.height(), img.channels());
  const std::uint32_t H = img.height();
  for (std::uint32_t y = 0; y < H; ++y)
    for (std::uint32_t x = 0; x < img.width(); ++x)
      for (std::uint32_t c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(x, H - 1 - y, c);
  return out;
}

}  // namespace flare

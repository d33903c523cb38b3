#include "flare/maskblend.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flare/error.hpp"

namespace flare::maskblend {

std::size_t SaturationMask::count() const {
  return static_cast<std::size_t>(std::count(values.begin(), values.end(), std::uint8_t{1}));
}

SaturationMask threshold_mask(const LinearImage& img, double threshold, SaturationMeasure measure) {
  if (img.channels() != 3) throw ParameterError("saturation mask requires an RGB image");
  SaturationMask m(img.width(), img.height());
  auto px = img.samples();
  for (std::size_t p = 0; p < m.values.size(); ++p) {
    const float r = px[3 * p], g = px[3 * p + 1], b = px[3 * p + 2];
    const double v = measure == SaturationMeasure::kLuminance
                         ? double{kLumaR * r + kLumaG * g + kLumaB * b}
                         : double{std::max({r, g, b})};
    m.values[p] = v > threshold ? 1 : 0;
  }
  return m;
}

int opening_diameter(std::uint32_t width, std::uint32_t height) {
  return std::max(1, static_cast<int>(std::lround(kOpeningFraction * std::min(width, height))));
}

DiskElement disk_element(double diameter) {
  if (!(diameter > 0.0)) throw ParameterError("disk diameter must be positive");
  const double r = diameter / 2.0;
  DiskElement e;
  e.radius = static_cast<int>(std::floor(r + 1e-9));
  for (int dy = -e.radius; dy <= e.radius; ++dy) {
    e.half_widths.push_back(static_cast<int>(std::floor(std::sqrt(r * r - dy * dy) + 1e-9)));
  }
  return e;
}

namespace {

// Per-row prefix counts of set pixels: pre[y][x] = count in [0, x).
std::vector<std::uint32_t> row_prefix(const SaturationMask& m) {
  const std::size_t W1 = std::size_t{m.width} + 1;
  std::vector<std::uint32_t> pre(W1 * m.height, 0);
  for (std::uint32_t y = 0; y < m.height; ++y) {
    for (std::uint32_t x = 0; x < m.width; ++x) {
      pre[y * W1 + x + 1] = pre[y * W1 + x] + m.at(x, y);
    }
  }
  return pre;
}

}  // namespace

SaturationMask erode(const SaturationMask& m, const DiskElement& e) {
  // Pixels outside the image count as set, so erosion does not eat borders.
  const auto pre = row_prefix(m);
  const std::size_t W1 = std::size_t{m.width} + 1;
  SaturationMask out(m.width, m.height);
  for (std::uint32_t y = 0; y < m.height; ++y) {
    for (std::uint32_t x = 0; x < m.width; ++x) {
      if (!m.at(x, y)) continue;
      bool keep = true;
      for (int dy = -e.radius; dy <= e.radius && keep; ++dy) {
        const long long yy = static_cast<long long>(y) + dy;
        if (yy < 0 || yy >= m.height) continue;
        const int hw = e.half_widths[dy + e.radius];
        const long long x0 = std::max<long long>(0, static_cast<long long>(x) - hw);
        const long long x1 = std::min<long long>(m.width, static_cast<long long>(x) + hw + 1);
        const auto ones = pre[yy * W1 + x1] - pre[yy * W1 + x0];
        keep = ones == static_cast<std::uint32_t>(x1 - x0);
      }
      out.at(x, y) = keep ? 1 : 0;
    }
  }
  return out;
}

SaturationMask dilate(const SaturationMask& m, const DiskElement& e) {
  const auto pre = row_prefix(m);
  const std::size_t W1 = std::size_t{m.width} + 1;
  SaturationMask out(m.width, m.height);
  for (std::uint32_t y = 0; y < m.height; ++y) {
    for (std::uint32_t x = 0; x < m.width; ++x) {
      bool hit = false;
      for (int dy = -e.radius; dy <= e.radius && !hit; ++dy) {
        const long long yy = static_cast<long long>(y) + dy;
        if (yy < 0 || yy >= m.height) continue;
        const int hw = e.half_widths[dy + e.radius];
        const long long x0 = std::max<long long>(0, static_cast<long long>(x) - hw);
        const long long x1 = std::min<long long>(m.width, static_cast<long long>(x) + hw + 1);
        hit = pre[yy * W1 + x1] > pre[yy * W1 + x0];
      }
      out.at(x, y) = hit ? 1 : 0;
    }
  }
  return out;
}

SaturationMask open(const SaturationMask& m, const DiskElement& e) { return dilate(erode(m, e), e); }

SaturationMask saturation_mask(const LinearImage& img, double threshold, SaturationMeasure measure) {
  return open(threshold_mask(img, threshold, measure),
              disk_element(opening_diameter(img.width(), img.height())));
}

std::vector<std::size_t> component_areas(const SaturationMask& m) {
  std::vector<std::int32_t> label(m.values.size(), -1);
  std::vector<std::size_t> areas;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < m.values.size(); ++start) {
    if (!m.values[start] || label[start] >= 0) continue;
    const auto id = static_cast<std::int32_t>(areas.size());
    std::size_t area = 0;
    label[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++area;
      const long long px = static_cast<long long>(p % m.width), py = static_cast<long long>(p / m.width);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const long long nx = px + dx, ny = py + dy;
          if (nx < 0 || ny < 0 || nx >= m.width || ny >= m.height) continue;
          const std::size_t q = static_cast<std::size_t>(ny) * m.width + static_cast<std::size_t>(nx);
          if (m.values[q] && label[q] < 0) {
            label[q] = id;
            stack.push_back(q);
          }
        }
      }
    }
    areas.push_back(area);
  }
  return areas;
}

FeatheredMask disk_blur(const SaturationMask& m, double diameter) {
  const DiskElement e = disk_element(diameter);
  std::size_t count = 0;
  for (int hw : e.half_widths) count += 2 * static_cast<std::size_t>(hw) + 1;
  const double inv = 1.0 / static_cast<double>(count);

  const auto pre = row_prefix(m);
  const std::size_t W1 = std::size_t{m.width} + 1;
  FeatheredMask out(m.width, m.height);
  for (std::uint32_t y = 0; y < m.height; ++y) {
    for (std::uint32_t x = 0; x < m.width; ++x) {
      std::size_t sum = 0;
      for (int dy = -e.radius; dy <= e.radius; ++dy) {
        const long long yy = static_cast<long long>(y) + dy;
        if (yy < 0 || yy >= m.height) continue;
        const int hw = e.half_widths[dy + e.radius];
        const long long x0 = std::max<long long>(0, static_cast<long long>(x) - hw);
        const long long x1 = std::min<long long>(m.width, static_cast<long long>(x) + hw + 1);
        if (x1 > x0) sum += pre[yy * W1 + x1] - pre[yy * W1 + x0];
      }
      out.at(x, y) = static_cast<float>(sum * inv);
    }
  }
  return out;
}

FeatheredMask feather_mask(const SaturationMask& thresholded, const SaturationMask& opened) {
  if (thresholded.width != opened.width || thresholded.height != opened.height) {
    throw ParameterError("feather_mask: mask dimensions differ");
  }
  const auto areas = component_areas(opened);
  if (areas.empty()) return to_float(opened);
  const std::size_t largest = *std::max_element(areas.begin(), areas.end());
  const double diameter = std::sqrt(4.0 * static_cast<double>(largest) / std::numbers::pi);
  FeatheredMask mf = disk_blur(thresholded, diameter);
  for (float& v : mf.values) v = std::min(1.0f, 3.0f * v);
  return mf;
}

FeatheredMask feather_mask(const SaturationMask& opened) { return feather_mask(opened, opened); }

FeatheredMask feathered_saturation(const LinearImage& img, double threshold, SaturationMeasure measure) {
  const SaturationMask raw = threshold_mask(img, threshold, measure);
  const SaturationMask opened = open(raw, disk_element(opening_diameter(img.width(), img.height())));
  return feather_mask(raw, opened);
}

namespace {

template <typename Mask>
void require_mask_shape(const LinearImage& img, const Mask& m, const char* what) {
  if (img.width() != m.width || img.height() != m.height) {
    throw ParameterError(std::string(what) + ": mask dimensions differ from image");
  }
}

}  // namespace

LinearImage masked_prediction(const LinearImage& pred, const LinearImage& truth, const SaturationMask& m) {
  require_same_shape(pred, truth, "masked_prediction");
  require_mask_shape(pred, m, "masked_prediction");
  LinearImage out = pred;
  const std::uint32_t C = pred.channels();
  for (std::size_t p = 0; p < m.values.size(); ++p) {
    if (!m.values[p]) continue;
    for (std::uint32_t c = 0; c < C; ++c) out.samples()[p * C + c] = truth.samples()[p * C + c];
  }
  return out;
}

LinearImage flare_residual(const LinearImage& input, const LinearImage& pred, const SaturationMask& m) {
  require_same_shape(input, pred, "flare_residual");
  require_mask_shape(input, m, "flare_residual");
  LinearImage out = input;
  const std::uint32_t C = input.channels();
  for (std::size_t p = 0; p < m.values.size(); ++p) {
    if (m.values[p]) continue;
    for (std::uint32_t c = 0; c < C; ++c) out.samples()[p * C + c] -= pred.samples()[p * C + c];
  }
  return out;
}

namespace {

// a * w + b * (1 - w) per pixel, evaluated in double.
LinearImage mix(const LinearImage& a, const LinearImage& b, const FeatheredMask& w) {
  LinearImage out(a.width(), a.height(), a.channels());
  const std::uint32_t C = a.channels();
  for (std::size_t p = 0; p < w.values.size(); ++p) {
    const double m = w.values[p];
    for (std::uint32_t c = 0; c < C; ++c) {
      const std::size_t i = p * C + c;
      out.samples()[i] = static_cast<float>(a.samples()[i] * m + b.samples()[i] * (1.0 - m));
    }
  }
  return out;
}

}  // namespace

LinearImage masked_prediction(const LinearImage& pred, const LinearImage& truth, const FeatheredMask& m) {
  require_same_shape(pred, truth, "masked_prediction");
  require_mask_shape(pred, m, "masked_prediction");
  return mix(truth, pred, m);
}

LinearImage flare_residual(const LinearImage& input, const LinearImage& pred, const FeatheredMask& m) {
  require_same_shape(input, pred, "flare_residual");
  require_mask_shape(input, m, "flare_residual");
  LinearImage out = input;
  const std::uint32_t C = input.channels();
  for (std::size_t p = 0; p < m.values.size(); ++p) {
    const double keep = 1.0 - m.values[p];
    for (std::uint32_t c = 0; c < C; ++c) {
      const std::size_t i = p * C + c;
      out.samples()[i] = static_cast<float>(input.samples()[i] - pred.samples()[i] * keep);
    }
  }
  return out;
}

LinearImage blend_light_source(const LinearImage& input, const LinearImage& pred, const FeatheredMask& mf) {
  require_same_shape(input, pred, "blend_light_source");
  require_mask_shape(input, mf, "blend_light_source");
  return mix(input, pred, mf);
}

FeatheredMask to_float(const SaturationMask& m) {
  FeatheredMask f(m.width, m.height);
  for (std::size_t i = 0; i < m.values.size(); ++i) f.values[i] = m.values[i];
  return f;
}

LinearImage mask_image(const FeatheredMask& m) { return LinearImage(m.width, m.height, 1, m.values); }

}  // namespace flare::maskblend

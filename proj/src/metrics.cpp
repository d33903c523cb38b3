#include "flare/metrics.hpp"

#include <cmath>

#include "flare/error.hpp"

namespace flare::pipeline {

double mse(const LinearImage& a, const LinearImage& b) {
  require_same_shape(a, b, "mse");
  double s = 0.0;
  auto pa = a.samples(), pb = b.samples();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = double{pa[i]} - double{pb[i]};
    s += d * d;
  }
  return s / static_cast<double>(pa.size());
}

double psnr(const LinearImage& a, const LinearImage& b) {
  const double e = mse(a, b);
  if (e < kPsnrMinMse) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / e));
}

namespace {

std::vector<double> gray_plane(const LinearImage& img) {
  const LinearImage y = img.channels() == 3 ? luminance(img) : img;
  return {y.samples().begin(), y.samples().end()};
}

// Separable "valid" filtering of a W x H plane with a 1D kernel of length K.
std::vector<double> filter_valid(const std::vector<double>& src, std::uint32_t W, std::uint32_t H,
                                 const std::vector<double>& k) {
  const std::size_t K = k.size();
  const std::size_t Wo = W - K + 1, Ho = H - K + 1;
  std::vector<double> tmp(std::size_t{H} * Wo);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < Wo; ++x) {
      double s = 0.0;
      for (std::size_t t = 0; t < K; ++t) s += k[t] * src[y * W + x + t];
      tmp[y * Wo + x] = s;
    }
  }
  std::vector<double> out(Ho * Wo);
  for (std::size_t y = 0; y < Ho; ++y) {
    for (std::size_t x = 0; x < Wo; ++x) {
      double s = 0.0;
      for (std::size_t t = 0; t < K; ++t) s += k[t] * tmp[(y + t) * Wo + x];
      out[y * Wo + x] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const LinearImage& a, const LinearImage& b, const SsimParams& p) {
  require_same_shape(a, b, "ssim");
  const auto K = static_cast<std::uint32_t>(p.window);
  if (p.window < 1 || a.width() < K || a.height() < K) {
    throw ParameterError("ssim: image smaller than the " + std::to_string(p.window) + "px window");
  }
  std::vector<double> kernel(K);
  double ksum = 0.0;
  const double c = (K - 1) / 2.0;
  for (std::uint32_t i = 0; i < K; ++i) {
    kernel[i] = std::exp(-(i - c) * (i - c) / (2.0 * p.sigma * p.sigma));
    ksum += kernel[i];
  }
  for (double& v : kernel) v /= ksum;

  const auto x = gray_plane(a), y = gray_plane(b);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto W = a.width(), H = a.height();
  const auto mx = filter_valid(x, W, H, kernel), my = filter_valid(y, W, H, kernel);
  const auto sxx = filter_valid(xx, W, H, kernel), syy = filter_valid(yy, W, H, kernel);
  const auto sxy = filter_valid(xy, W, H, kernel);

  const double C1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double C2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double va = sxx[i] - mx[i] * mx[i];
    const double vb = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + C1) * (2.0 * cov + C2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + C1) * (va + vb + C2));
  }
  return total / static_cast<double>(mx.size());
}

Metrics eval_masked(const LinearImage& pred, const LinearImage& truth, const LinearImage& input,
                    double threshold, maskblend::SaturationMeasure measure) {
  require_same_shape(pred, truth, "eval_masked");
  require_same_shape(pred, input, "eval_masked");
  const auto m = maskblend::saturation_mask(input, threshold, measure);
  const LinearImage masked = maskblend::masked_prediction(pred, truth, m);
  return {psnr(masked, truth), ssim(masked, truth)};
}

void to_json(nlohmann::json& j, const Metrics& m) { j = {{"psnr", m.psnr}, {"ssim", m.ssim}}; }

}  // namespace flare::pipeline

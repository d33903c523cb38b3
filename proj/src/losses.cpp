#include "flare/losses.hpp"

#include <algorithm>
#include <cmath>

#include "flare/error.hpp"

namespace flare::losses {

FeatureMap to_feature_map(const LinearImage& img) {
  FeatureMap f{img.channels(), img.height(), img.width(), std::vector<float>(img.size())};
  for (std::uint32_t c = 0; c < img.channels(); ++c)
    for (std::uint32_t y = 0; y < img.height(); ++y)
      for (std::uint32_t x = 0; x < img.width(); ++x)
        f.data[(std::size_t{c} * img.height() + y) * img.width() + x] = img.at(x, y, c);
  return f;
}

std::vector<FeatureMap> IdentityExtractor::extract(const LinearImage& img) const {
  return {to_feature_map(img)};
}

GaussianPyramidExtractor::GaussianPyramidExtractor(int levels) : levels_(levels) {
  if (levels < 1) throw ParameterError("pyramid needs at least one level");
}

std::vector<std::string> GaussianPyramidExtractor::layers() const {
  std::vector<std::string> names;
  for (int i = 0; i < levels_; ++i) names.push_back("level" + std::to_string(i));
  return names;
}

FeatureMap pyramid_down(const FeatureMap& f) {
  static constexpr double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const std::uint32_t W = f.width, H = f.height;
  const std::uint32_t W2 = (W + 1) / 2, H2 = (H + 1) / 2;
  auto clampi = [](long long v, std::uint32_t n) {
    return static_cast<std::uint32_t>(std::clamp<long long>(v, 0, static_cast<long long>(n) - 1));
  };
  FeatureMap out{f.channels, H2, W2, std::vector<float>(std::size_t{f.channels} * H2 * W2)};
  std::vector<double> row(W);
  for (std::uint32_t c = 0; c < f.channels; ++c) {
    for (std::uint32_t y2 = 0; y2 < H2; ++y2) {
      // Vertical pass at source row 2*y2, then horizontal at even columns.
      for (std::uint32_t x = 0; x < W; ++x) {
        double s = 0.0;
        for (int t = -2; t <= 2; ++t) s += k[t + 2] * f.at(c, clampi(2LL * y2 + t, H), x);
        row[x] = s;
      }
      for (std::uint32_t x2 = 0; x2 < W2; ++x2) {
        double s = 0.0;
        for (int t = -2; t <= 2; ++t) s += k[t + 2] * row[clampi(2LL * x2 + t, W)];
        out.data[(std::size_t{c} * H2 + y2) * W2 + x2] = static_cast<float>(s);
      }
    }
  }
  return out;
}

std::vector<FeatureMap> GaussianPyramidExtractor::extract(const LinearImage& img) const {
  std::vector<FeatureMap> maps;
  maps.push_back(to_feature_map(img));
  for (int i = 1; i < levels_; ++i) maps.push_back(pyramid_down(maps.back()));
  return maps;
}

double l1(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ParameterError("l1: shape mismatch");
  if (a.empty()) throw ParameterError("l1: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(double{a[i]} - double{b[i]});
  return s / static_cast<double>(a.size());
}

double l1(const LinearImage& a, const LinearImage& b) {
  require_same_shape(a, b, "l1");
  return l1(a.samples(), b.samples());
}

double l1(const FeatureMap& a, const FeatureMap& b) {
  if (a.channels != b.channels || a.height != b.height || a.width != b.width) {
    throw ParameterError("l1: feature shape mismatch");
  }
  return l1(std::span<const float>(a.data), std::span<const float>(b.data));
}

std::vector<double> perceptual_terms(const LinearImage& a, const LinearImage& b,
                                     const FeatureExtractor& extractor, std::span<const double> weights) {
  require_same_shape(a, b, "perceptual");
  const auto names = extractor.layers();
  if (weights.size() != names.size()) {
    throw ParameterError("perceptual: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(names.size()) + " layers");
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw ParameterError("perceptual: layer weights must be non-negative");
  }
  const auto fa = extractor.extract(a);
  const auto fb = extractor.extract(b);
  std::vector<double> terms(names.size());
  for (std::size_t l = 0; l < names.size(); ++l) terms[l] = weights[l] * l1(fa[l], fb[l]);
  return terms;
}

double perceptual(const LinearImage& a, const LinearImage& b, const FeatureExtractor& extractor,
                  std::span<const double> weights) {
  double s = 0.0;
  for (double t : perceptual_terms(a, b, extractor, weights)) s += t;
  return s;
}

std::vector<double> unit_weights(const FeatureExtractor& extractor) {
  return std::vector<double>(extractor.layers().size(), 1.0);
}

LossReport total_loss(const LinearImage& pred, const LinearImage& input, const LinearImage& truth,
                      const LinearImage& true_flare, const maskblend::SaturationMask& mask,
                      const FeatureExtractor& extractor, std::span<const double> weights) {
  require_same_shape(pred, input, "total_loss");
  require_same_shape(pred, truth, "total_loss");
  require_same_shape(pred, true_flare, "total_loss");

  const LinearImage masked = maskblend::masked_prediction(pred, truth, mask);
  const LinearImage flare_hat = maskblend::flare_residual(input, pred, mask);
  const auto names = extractor.layers();

  LossReport r;
  r.image_l1 = l1(masked, truth);
  const auto image_terms = perceptual_terms(masked, truth, extractor, weights);
  r.flare_l1 = l1(flare_hat, true_flare);
  const auto flare_terms = perceptual_terms(flare_hat, true_flare, extractor, weights);
  for (std::size_t l = 0; l < names.size(); ++l) {
    r.image_perceptual += image_terms[l];
    r.flare_perceptual += flare_terms[l];
    r.per_layer["image/" + names[l]] = image_terms[l];
    r.per_layer["flare/" + names[l]] = flare_terms[l];
  }
  r.total = r.image_l1 + r.image_perceptual + r.flare_l1 + r.flare_perceptual;
  return r;
}

void to_json(nlohmann::json& j, const LossReport& r) {
  j = {{"total", r.total},
       {"image_l1", r.image_l1},
       {"image_perceptual", r.image_perceptual},
       {"flare_l1", r.flare_l1},
       {"flare_perceptual", r.flare_perceptual},
       {"per_layer", r.per_layer}};
}

}  // namespace flare::losses

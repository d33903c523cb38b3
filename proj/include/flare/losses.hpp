#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "flare/image.hpp"
#include "flare/maskblend.hpp"

namespace flare::losses {

/// Channels x height x width feature tensor.
struct FeatureMap {
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<float> data;

  float at(std::uint32_t c, std::uint32_t y, std::uint32_t x) const {
    return data[(std::size_t{c} * height + y) * width + x];
  }
};

FeatureMap to_feature_map(const LinearImage& img);

/// Deterministic, thread-safe mapping from an image to a fixed list of
/// feature maps.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<std::string> layers() const = 0;
  virtual std::vector<FeatureMap> extract(const LinearImage& img) const = 0;
};

/// One layer: the image itself.
class IdentityExtractor final : public FeatureExtractor {
 public:
  std::vector<std::string> layers() const override { return {"identity"}; }
  std::vector<FeatureMap> extract(const LinearImage& img) const override;
};

/// Gaussian pyramid: level 0 is the image, each further level is the previous
/// one blurred with the 5-tap binomial kernel and decimated by 2.
class GaussianPyramidExtractor final : public FeatureExtractor {
 public:
  explicit GaussianPyramidExtractor(int levels = 5);
  std::vector<std::string> layers() const override;
  std::vector<FeatureMap> extract(const LinearImage& img) const override;

 private:
  int levels_;
};

/// One pyramid reduction step (exposed for tests).
FeatureMap pyramid_down(const FeatureMap& f);

/// Mean absolute difference.
double l1(std::span<const float> a, std::span<const float> b);
double l1(const LinearImage& a, const LinearImage& b);
double l1(const FeatureMap& a, const FeatureMap& b);

/// Per-layer weighted L1 terms lambda_l * L1(phi_l(a), phi_l(b)).
std::vector<double> perceptual_terms(const LinearImage& a, const LinearImage& b,
                                     const FeatureExtractor& extractor, std::span<const double> weights);
double perceptual(const LinearImage& a, const LinearImage& b, const FeatureExtractor& extractor,
                  std::span<const double> weights);

struct LossReport {
  double total = 0.0;
  double image_l1 = 0.0;
  double image_perceptual = 0.0;
  double flare_l1 = 0.0;
  double flare_perceptual = 0.0;
  /// "image/<layer>" and "flare/<layer>" -> weighted contribution.
  std::map<std::string, double> per_layer;
};

/// Image loss on the masked prediction plus flare loss on the predicted flare
/// residual.
LossReport total_loss(const LinearImage& pred, const LinearImage& input, const LinearImage& truth,
                      const LinearImage& true_flare, const maskblend::SaturationMask& mask,
                      const FeatureExtractor& extractor, std::span<const double> weights);

/// Unit weights for every layer of `extractor`.
std::vector<double> unit_weights(const FeatureExtractor& extractor);

void to_json(nlohmann::json& j, const LossReport& r);

}  // namespace flare::losses

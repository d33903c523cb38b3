#pragma once

#include <cstdint>

#include "flare/image.hpp"
#include "flare/maskblend.hpp"
#include "flare/predictor.hpp"

namespace flare::pipeline {

struct HighResOptions {
  std::uint32_t lowres = 512;
  double threshold = maskblend::kSaturationThreshold;
  maskblend::SaturationMeasure measure = maskblend::SaturationMeasure::kLuminance;
};

struct HighResResult {
  LinearImage output;        // final blended image
  LinearImage flare_low;     // predicted flare at low resolution
  LinearImage unblended;     // clip(input - upsampled flare)
  maskblend::FeatheredMask feathered;
};

/// Predicts the flare at low resolution, upsamples and subtracts it, then
/// blends the input's light sources back in at full resolution.
HighResResult remove_flare_highres_detailed(const LinearImage& input, Predictor& predictor,
                                            const HighResOptions& opts = {});

LinearImage remove_flare_highres(const LinearImage& input, Predictor& predictor,
                                 const HighResOptions& opts = {});

}  // namespace flare::pipeline

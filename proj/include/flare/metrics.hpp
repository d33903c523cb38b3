#pragma once

#include <json.hpp>

#include "flare/image.hpp"
#include "flare/maskblend.hpp"

namespace flare::pipeline {

inline constexpr double kPsnrCapDb = 99.0;
inline constexpr double kPsnrMinMse = 1e-10;

double mse(const LinearImage& a, const LinearImage& b);

/// 10 log10(1 / MSE) over all samples, capped at 99 dB.
double psnr(const LinearImage& a, const LinearImage& b);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over all valid (fully inside) Gaussian windows, computed on
/// luminance for RGB inputs.
double ssim(const LinearImage& a, const LinearImage& b, const SsimParams& params = {});

struct Metrics {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Replaces pred inside the saturation mask of `input` with `truth`, then
/// scores against `truth`.
Metrics eval_masked(const LinearImage& pred, const LinearImage& truth, const LinearImage& input,
                    double threshold = maskblend::kSaturationThreshold,
                    maskblend::SaturationMeasure measure = maskblend::SaturationMeasure::kLuminance);

void to_json(nlohmann::json& j, const Metrics& m);

}  // namespace flare::pipeline

#pragma once

#include <cstdint>
#include <vector>

#include "flare/image.hpp"

namespace flare::maskblend {

/// Binary per-pixel mask (0 or 1).
struct SaturationMask {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> values;

  SaturationMask() = default;
  SaturationMask(std::uint32_t w, std::uint32_t h, std::uint8_t fill = 0)
      : width(w), height(h), values(std::size_t{w} * h, fill) {}

  std::uint8_t& at(std::uint32_t x, std::uint32_t y) { return values[std::size_t{y} * width + x]; }
  std::uint8_t at(std::uint32_t x, std::uint32_t y) const { return values[std::size_t{y} * width + x]; }
  std::size_t count() const;
  friend bool operator==(const SaturationMask&, const SaturationMask&) = default;
};

/// Soft mask in [0, 1].
struct FeatheredMask {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> values;

  FeatheredMask() = default;
  FeatheredMask(std::uint32_t w, std::uint32_t h, float fill = 0.0f)
      : width(w), height(h), values(std::size_t{w} * h, fill) {}

  float& at(std::uint32_t x, std::uint32_t y) { return values[std::size_t{y} * width + x]; }
  float at(std::uint32_t x, std::uint32_t y) const { return values[std::size_t{y} * width + x]; }
};

enum class SaturationMeasure { kLuminance, kMaxChannel };

inline constexpr double kSaturationThreshold = 0.99;
inline constexpr double kOpeningFraction = 0.005;

/// Thresholded pixels before any morphology.
SaturationMask threshold_mask(const LinearImage& img, double threshold = kSaturationThreshold,
                              SaturationMeasure measure = SaturationMeasure::kLuminance);

/// Opening kernel diameter for an image: round(0.005 * min(w, h)), at least 1.
int opening_diameter(std::uint32_t width, std::uint32_t height);

/// Pixels whose centers lie within diameter/2 of the origin.
struct DiskElement {
  int radius = 0;
  std::vector<int> half_widths;  // indexed by dy + radius
};
DiskElement disk_element(double diameter);

SaturationMask erode(const SaturationMask& m, const DiskElement& e);
SaturationMask dilate(const SaturationMask& m, const DiskElement& e);
SaturationMask open(const SaturationMask& m, const DiskElement& e);

/// M: threshold on `measure`, then morphological opening with a disk of
/// opening_diameter().
SaturationMask saturation_mask(const LinearImage& img, double threshold = kSaturationThreshold,
                               SaturationMeasure measure = SaturationMeasure::kLuminance);

/// Areas of the 8-connected components of `m`, in label order.
std::vector<std::size_t> component_areas(const SaturationMask& m);

/// Mean of `m` over a disk of `diameter` centered on every pixel, with zero
/// outside the image and the full disk pixel count as denominator.
FeatheredMask disk_blur(const SaturationMask& m, double diameter);

/// M_f from the thresholded mask. `thresholded` is blurred with a disk whose
/// diameter equals the equivalent diameter of the largest 8-connected
/// component of `opened`; the blur is scaled by 3 and clipped to [0, 1].
FeatheredMask feather_mask(const SaturationMask& thresholded, const SaturationMask& opened);
/// Convenience overload for masks that are already opened.
FeatheredMask feather_mask(const SaturationMask& opened);

/// Feathered mask of an input image: threshold, open, feather.
FeatheredMask feathered_saturation(const LinearImage& img, double threshold = kSaturationThreshold,
                                   SaturationMeasure measure = SaturationMeasure::kLuminance);

/// truth * M + pred * (1 - M), M broadcast across channels.
LinearImage masked_prediction(const LinearImage& pred, const LinearImage& truth, const SaturationMask& m);
/// input - pred * (1 - M); not clipped.
LinearImage flare_residual(const LinearImage& input, const LinearImage& pred, const SaturationMask& m);
/// input * Mf + pred * (1 - Mf).
LinearImage blend_light_source(const LinearImage& input, const LinearImage& pred, const FeatheredMask& mf);

/// Float-mask variants used by tests and callers holding soft masks.
LinearImage masked_prediction(const LinearImage& pred, const LinearImage& truth, const FeatheredMask& m);
LinearImage flare_residual(const LinearImage& input, const LinearImage& pred, const FeatheredMask& m);

FeatheredMask to_float(const SaturationMask& m);
/// Mask as a single-channel image for export.
LinearImage mask_image(const FeatheredMask& m);

}  // namespace flare::maskblend

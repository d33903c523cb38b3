#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace flare {

/// Row-major, channel-interleaved float raster in linear radiance.
///
/// Samples are nominally in [0, 1] after clipping stages but may exceed 1
/// before them (flare layers with large channel gains, raw PSFs).
class LinearImage {
 public:
  LinearImage() = default;
  LinearImage(std::uint32_t width, std::uint32_t height, std::uint32_t channels, float fill = 0.0f);
  LinearImage(std::uint32_t width, std::uint32_t height, std::uint32_t channels,
              std::vector<float> data);

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }
  std::uint32_t channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return std::size_t{width_} * height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) {
    return data_[(std::size_t{y} * width_ + x) * channels_ + c];
  }
  float at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) const {
    return data_[(std::size_t{y} * width_ + x) * channels_ + c];
  }

  std::span<float> samples() noexcept { return data_; }
  std::span<const float> samples() const noexcept { return data_; }
  const std::vector<float>& data() const noexcept { return data_; }

  bool same_shape(const LinearImage& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  /// True when every sample is finite.
  bool all_finite() const noexcept;

  friend bool operator==(const LinearImage&, const LinearImage&) = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::uint32_t channels_ = 0;
  std::vector<float> data_;
};

/// Throws ParameterError unless `a` and `b` have identical shapes.
void require_same_shape(const LinearImage& a, const LinearImage& b, const char* what);

/// Inverse gamma: out = in^gamma. Inputs are expected in [0, 1].
LinearImage linearize(const LinearImage& encoded, double gamma);

/// Forward gamma for export: out = clip(in, 0, 1)^(1/gamma).
LinearImage delinearize(const LinearImage& linear, double gamma);

/// Bilinear resampling with half-pixel-centered sample positions and edge
/// clamping. Same-size resampling returns the input unchanged.
LinearImage bilinear_resample(const LinearImage& img, std::uint32_t out_w, std::uint32_t out_h);

/// Bilinear lookup at a continuous pixel position, zero outside the raster.
float sample_bilinear_zero(const LinearImage& img, double x, double y, std::uint32_t c);

inline constexpr float kLumaR = 0.2126f;
inline constexpr float kLumaG = 0.7152f;
inline constexpr float kLumaB = 0.0722f;

/// Rec. 709 luminance of a 3-channel linear image.
LinearImage luminance(const LinearImage& rgb);

LinearImage clip(const LinearImage& img, float lo = 0.0f, float hi = 1.0f);
LinearImage flip_horizontal(const LinearImage& img);
LinearImage flip_vertical(const LinearImage& img);

}  // namespace flare

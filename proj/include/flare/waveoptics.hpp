#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <vector>

#include <json.hpp>

#include "flare/aperture.hpp"
#include "flare/image.hpp"

namespace flare::waveoptics {

/// Wavelength sampling. The standard configuration is 380..740 nm in 5 nm
/// steps (73 samples) with a 550 nm reference.
struct SpectralConfig {
  std::vector<double> lambdas_nm;
  double reference_nm = 550.0;

  static SpectralConfig standard();
  std::size_t count() const { return lambdas_nm.size(); }
};

inline constexpr std::size_t kStandardWavelengths = 73;

inline constexpr double wavenumber(double lambda_nm) { return 2.0 * std::numbers::pi / lambda_nm; }

/// Standard deviation of the sampled defocus amount: 5 / k(550 nm).
inline constexpr double kDefocusSigmaNm = 5.0 / wavenumber(550.0);

/// 3 x N sensor spectral response; row c holds the Gaussian pdf of channel c
/// evaluated at each wavelength.
struct SRF {
  std::array<std::vector<double>, 3> rows;
  std::array<double, 3> mus{};
  std::array<double, 3> sigmas{};

  std::size_t columns() const { return rows[0].size(); }
  double operator()(std::size_t c, std::size_t j) const { return rows[c][j]; }
};

SRF make_srf(const std::array<double, 3>& mus, const std::array<double, 3>& sigmas,
             const SpectralConfig& cfg = SpectralConfig::standard());

/// mu_R ~ U(620,640), mu_G ~ U(540,560), mu_B ~ U(460,480), sigma_c ~ U(50,60).
SRF sample_srf(std::uint64_t seed, const SpectralConfig& cfg = SpectralConfig::standard());

/// Uniform response (all entries equal to `value`).
SRF uniform_srf(double value = 1.0, const SpectralConfig& cfg = SpectralConfig::standard());

struct LightSource {
  /// PSF center offset from the sensor center, in sensor pixels.
  double x = 0.0;
  double y = 0.0;
  /// Defocus amount W_m in nanometers; the sign selects front/back focus.
  double wm_nm = 0.0;
};

/// Square real plane matching an aperture grid.
struct Plane {
  std::uint32_t grid_size = 0;
  std::vector<double> values;

  double at(std::uint32_t row, std::uint32_t col) const { return values[std::size_t{row} * grid_size + col]; }
  double sum() const;
};

/// phi(u, v) = k_lambda * r^2 * W_m with r normalized to the rasterized disk
/// radius.
Plane defocus_phase(std::uint32_t grid_size, double wm_nm, double lambda_nm);

/// |DFT{A e^{i phi}}|^2, unnormalized forward DFT, fftshifted so DC sits at
/// (grid/2, grid/2).
Plane monochromatic_psf(const aperture::ApertureMask& mask, const Plane& phase);

struct SpectralOptions {
  /// Magnify each wavelength's PSF by lambda / reference about its center.
  bool chromatic_scale = false;
  unsigned jobs = 1;
};

/// RGB PSF seen by the sensor. Each wavelength's PSF is normalized to unit
/// energy over the full grid, translated by the source position and cropped
/// to the centered sensor window before SRF weighting.
LinearImage spectral_psf(const aperture::ApertureMask& mask, const LightSource& source,
                         const SRF& srf, const SpectralConfig& cfg, std::uint32_t sensor_w,
                         std::uint32_t sensor_h, const SpectralOptions& opts = {});

inline constexpr double kMaxDistortion = 0.5;

/// Single-coefficient radial distortion. A destination pixel at normalized
/// radius r (relative to half the shorter side, centered on pixel (w/2, h/2))
/// samples the source at radius r (1 + k1 r^2). Out-of-range samples are 0.
LinearImage apply_distortion(const LinearImage& img, double k1);

/// Scales the image so its maximum Rec. 709 luminance is 1. All-black images
/// are returned unchanged.
LinearImage normalize_max_luminance(const LinearImage& rgb);

/// A fixed, lazily rasterized set of apertures.
class ApertureBank {
 public:
  ApertureBank(std::vector<aperture::ApertureSpec> specs, std::uint32_t grid_size, unsigned jobs = 1);

  /// Bank of `count` apertures sampled with seeds derived from `bank_seed`.
  static ApertureBank sampled(std::uint64_t bank_seed, std::size_t count,
                              const aperture::ApertureConfig& cfg, std::uint32_t grid_size,
                              unsigned jobs = 1);

  ApertureBank(ApertureBank&& other) noexcept;
  ApertureBank(const ApertureBank&) = delete;
  ApertureBank& operator=(const ApertureBank&) = delete;

  std::size_t size() const { return specs_.size(); }
  std::uint32_t grid_size() const { return grid_; }
  const aperture::ApertureSpec& spec(std::size_t i) const { return specs_.at(i); }
  std::shared_ptr<const aperture::ApertureMask> mask(std::size_t i) const;

 private:
  std::vector<aperture::ApertureSpec> specs_;
  std::uint32_t grid_;
  unsigned jobs_;
  mutable std::mutex mutex_;
  mutable std::map<std::size_t, std::shared_ptr<const aperture::ApertureMask>> cache_;
};

struct FlareConfig {
  std::uint32_t grid_size = 2048;
  std::uint32_t sensor_w = 800;
  std::uint32_t sensor_h = 800;
  /// Source centers are drawn from U(-f*w, f*w) x U(-f*h, f*h); 500/800 for
  /// an 800 px sensor.
  double source_range_fraction = 500.0 / 800.0;
  double defocus_sigma_nm = kDefocusSigmaNm;
  double max_abs_k1 = 0.3;
  bool chromatic_scale = false;
  unsigned jobs = 1;
  SpectralConfig spectral = SpectralConfig::standard();
};

struct FlareParams {
  std::size_t aperture_index = 0;
  LightSource source;
  std::uint64_t srf_seed = 0;
  std::array<double, 3> srf_mus{};
  std::array<double, 3> srf_sigmas{};
  double k1 = 0.0;
};

struct RenderedFlare {
  LinearImage image;
  FlareParams params;
};

/// Samples flare parameters from `seed` (aperture index from the bank,
/// source position, defocus, SRF and distortion).
FlareParams sample_flare_params(std::uint64_t seed, const FlareConfig& cfg, std::size_t bank_size);

/// Full scattering-flare render; deterministic in (seed, cfg, bank).
RenderedFlare render_scattering_flare(std::uint64_t seed, const FlareConfig& cfg,
                                      const ApertureBank& bank);

void to_json(nlohmann::json& j, const FlareParams& p);
void to_json(nlohmann::json& j, const FlareConfig& c);

}  // namespace flare::waveoptics

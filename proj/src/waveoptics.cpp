#include "flare/waveoptics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <thread>

#include "flare/error.hpp"
#include "flare/fft.hpp"
#include "flare/rng.hpp"

namespace flare::waveoptics {

using aperture::ApertureMask;

SpectralConfig SpectralConfig::standard() {
  SpectralConfig cfg;
  cfg.lambdas_nm.reserve(kStandardWavelengths);
  for (std::size_t j = 0; j < kStandardWavelengths; ++j) cfg.lambdas_nm.push_back(380.0 + 5.0 * j);
  return cfg;
}

SRF make_srf(const std::array<double, 3>& mus, const std::array<double, 3>& sigmas,
             const SpectralConfig& cfg) {
  SRF srf;
  srf.mus = mus;
  srf.sigmas = sigmas;
  for (int c = 0; c < 3; ++c) {
    if (!(sigmas[c] > 0.0)) throw ParameterError("SRF sigma must be positive");
    const double norm = 1.0 / (sigmas[c] * std::sqrt(2.0 * std::numbers::pi));
    srf.rows[c].reserve(cfg.count());
    for (double lambda : cfg.lambdas_nm) {
      const double z = (lambda - mus[c]) / sigmas[c];
      srf.rows[c].push_back(norm * std::exp(-0.5 * z * z));
    }
  }
  return srf;
}

SRF sample_srf(std::uint64_t seed, const SpectralConfig& cfg) {
  Rng rng(seed);
  std::array<double, 3> mus{};
  mus[0] = uniform(rng, 620.0, 640.0);
  mus[1] = uniform(rng, 540.0, 560.0);
  mus[2] = uniform(rng, 460.0, 480.0);
  std::array<double, 3> sigmas{};
  for (double& s : sigmas) s = uniform(rng, 50.0, 60.0);
  return make_srf(mus, sigmas, cfg);
}

SRF uniform_srf(double value, const SpectralConfig& cfg) {
  SRF srf;
  for (auto& row : srf.rows) row.assign(cfg.count(), value);
  return srf;
}

double Plane::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

namespace {

// Squared radius of every cell normalized to the rasterized disk radius.
std::vector<double> normalized_r2(std::uint32_t grid) {
  const double half = grid / 2.0;
  const double inv_r2 = 1.0 / (aperture::disk_radius_cells(grid) * aperture::disk_radius_cells(grid));
  std::vector<double> r2(std::size_t{grid} * grid);
  for (std::uint32_t i = 0; i < grid; ++i) {
    const double y = i - half;
    for (std::uint32_t j = 0; j < grid; ++j) {
      const double x = j - half;
      r2[std::size_t{i} * grid + j] = (x * x + y * y) * inv_r2;
    }
  }
  return r2;
}

// |DFT{A e^{i phase_scale r^2}}|^2 left in FFT (unshifted) order.
void psf_unshifted(const ApertureMask& mask, const std::vector<double>& r2, double phase_scale,
                   ComplexGrid& work, std::vector<double>& out) {
  const std::size_t n = mask.values.size();
  auto* w = work.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = mask.values[i];
    w[i] = a == 0.0 ? std::complex<double>{} : std::polar(a, phase_scale * r2[i]);
  }
  fft2d_forward(work);
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::norm(w[i]);
}

void require_grid(std::uint32_t grid) {
  if (grid == 0 || !std::has_single_bit(grid)) throw ParameterError("grid size must be a power of two");
}

}  // namespace

Plane defocus_phase(std::uint32_t grid_size, double wm_nm, double lambda_nm) {
  if (!(lambda_nm > 0.0)) throw ParameterError("wavelength must be positive");
  if (grid_size < aperture::kMinApertureGrid) throw ParameterError("phase grid must be >= 64");
  Plane phase{grid_size, normalized_r2(grid_size)};
  const double scale = wavenumber(lambda_nm) * wm_nm;
  for (double& v : phase.values) v *= scale;
  return phase;
}

Plane monochromatic_psf(const ApertureMask& mask, const Plane& phase) {
  aperture::validate_mask(mask);
  if (phase.grid_size != mask.grid_size || phase.values.size() != mask.values.size()) {
    throw ParameterError("aperture and phase grids differ in size");
  }
  const std::uint32_t G = mask.grid_size;
  ComplexGrid work(G);
  auto* w = work.data();
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    const double a = mask.values[i];
    w[i] = a == 0.0 ? std::complex<double>{} : std::polar(a, phase.values[i]);
  }
  fft2d_forward(work);

  Plane psf{G, std::vector<double>(mask.values.size())};
  const std::uint32_t h = G / 2;
  for (std::uint32_t i = 0; i < G; ++i) {
    for (std::uint32_t j = 0; j < G; ++j) {
      psf.values[std::size_t{(i + h) % G} * G + (j + h) % G] = std::norm(w[std::size_t{i} * G + j]);
    }
  }
  return psf;
}

LinearImage spectral_psf(const ApertureMask& mask, const LightSource& source, const SRF& srf,
                         const SpectralConfig& cfg, std::uint32_t sensor_w, std::uint32_t sensor_h,
                         const SpectralOptions& opts) {
  aperture::validate_mask(mask);
  require_grid(mask.grid_size);
  const std::uint32_t G = mask.grid_size;
  if (sensor_w == 0 || sensor_h == 0 || sensor_w > G || sensor_h > G) {
    throw ParameterError("sensor window must fit within the PSF grid");
  }
  if (srf.columns() != cfg.count()) throw ParameterError("SRF columns must match wavelength count");
  if (!std::isfinite(source.x) || !std::isfinite(source.y) || !std::isfinite(source.wm_nm)) {
    throw ParameterError("light source parameters must be finite");
  }
  const double energy = mask.energy();
  if (!(energy > 0.0)) throw ParameterError("aperture transmits no light");
  const double norm = 1.0 / (static_cast<double>(G) * G * energy);

  const std::vector<double> r2 = normalized_r2(G);
  const std::size_t L = cfg.count();
  const std::size_t npix = std::size_t{sensor_w} * sensor_h;
  const double cx = sensor_w / 2 + source.x;
  const double cy = sensor_h / 2 + source.y;

  // Crops one wavelength: sensor pixel -> offset from the PSF center ->
  // cyclic lookup in the unshifted DFT output.
  auto crop = [&](const std::vector<double>& psf, double lambda, std::vector<double>& out) {
    const double mag = opts.chromatic_scale ? cfg.reference_nm / lambda : 1.0;
    out.resize(npix);
    auto wrap = [G](long long v) { return static_cast<std::size_t>(((v % G) + G) % G); };
    for (std::uint32_t sy = 0; sy < sensor_h; ++sy) {
      const double dy = (sy - cy) * mag;
      const double fy = std::floor(dy);
      const double ty = dy - fy;
      const std::size_t y0 = wrap(static_cast<long long>(fy)), y1 = wrap(static_cast<long long>(fy) + 1);
      for (std::uint32_t sx = 0; sx < sensor_w; ++sx) {
        const double dx = (sx - cx) * mag;
        const double fx = std::floor(dx);
        const double tx = dx - fx;
        const std::size_t x0 = wrap(static_cast<long long>(fx)), x1 = wrap(static_cast<long long>(fx) + 1);
        const double a = psf[y0 * G + x0], b = psf[y0 * G + x1];
        const double c = psf[y1 * G + x0], d = psf[y1 * G + x1];
        const double top = a + tx * (b - a);
        const double bot = c + tx * (d - c);
        out[std::size_t{sy} * sensor_w + sx] = (top + ty * (bot - top)) * norm;
      }
    }
  };

  std::array<std::vector<double>, 3> acc;
  for (auto& a : acc) a.assign(npix, 0.0);
  auto accumulate = [&](std::size_t j, const std::vector<double>& plane) {
    for (int c = 0; c < 3; ++c) {
      const double wgt = srf(c, j);
      if (wgt == 0.0) continue;
      auto& dst = acc[c];
      for (std::size_t p = 0; p < npix; ++p) dst[p] += wgt * plane[p];
    }
  };

  // Without defocus every wavelength shares one PSF on the common DFT grid.
  if (source.wm_nm == 0.0) {
    ComplexGrid work(G);
    std::vector<double> psf, plane;
    psf_unshifted(mask, r2, 0.0, work, psf);
    for (std::size_t j = 0; j < L; ++j) {
      if (j == 0 || opts.chromatic_scale) crop(psf, cfg.lambdas_nm[j], plane);
      accumulate(j, plane);
    }
  } else {
    // Wavelengths are processed in chunks of `jobs`; the reduction always
    // runs in wavelength order so the result is independent of `jobs`.
    const unsigned jobs = std::max(1u, opts.jobs);
    std::vector<std::vector<double>> planes(jobs);
    auto work_one = [&](std::size_t j, std::vector<double>& plane) {
      ComplexGrid work(G);
      std::vector<double> psf;
      psf_unshifted(mask, r2, wavenumber(cfg.lambdas_nm[j]) * source.wm_nm, work, psf);
      crop(psf, cfg.lambdas_nm[j], plane);
    };
    for (std::size_t base = 0; base < L; base += jobs) {
      const std::size_t n = std::min<std::size_t>(jobs, L - base);
      if (n == 1) {
        work_one(base, planes[0]);
      } else {
        std::vector<std::jthread> workers;
        for (std::size_t k = 0; k < n; ++k) {
          workers.emplace_back([&, k] { work_one(base + k, planes[k]); });
        }
      }
      for (std::size_t k = 0; k < n; ++k) accumulate(base + k, planes[k]);
    }
  }

  LinearImage out(sensor_w, sensor_h, 3);
  for (std::size_t p = 0; p < npix; ++p) {
    for (int c = 0; c < 3; ++c) out.samples()[3 * p + c] = static_cast<float>(std::max(0.0, acc[c][p]));
  }
  return out;
}

LinearImage apply_distortion(const LinearImage& img, double k1) {
  if (!(std::abs(k1) <= kMaxDistortion)) throw ParameterError("|k1| must be <= 0.5");
  if (k1 == 0.0) return img;
  const double cx = img.width() / 2, cy = img.height() / 2;
  const double inv_norm = 1.0 / (0.5 * std::min(img.width(), img.height()));
  LinearImage out(img.width(), img.height(), img.channels());
  for (std::uint32_t y = 0; y < img.height(); ++y) {
    for (std::uint32_t x = 0; x < img.width(); ++x) {
      const double dx = x - cx, dy = y - cy;
      const double r2 = (dx * dx + dy * dy) * inv_norm * inv_norm;
      const double f = 1.0 + k1 * r2;
      for (std::uint32_t c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = sample_bilinear_zero(img, cx + dx * f, cy + dy * f, c);
      }
    }
  }
  return out;
}

LinearImage normalize_max_luminance(const LinearImage& rgb) {
  const LinearImage y = luminance(rgb);
  const float peak = *std::max_element(y.samples().begin(), y.samples().end());
  if (!(peak > 0.0f)) return rgb;
  LinearImage out = rgb;
  const double inv = 1.0 / peak;
  for (float& v : out.samples()) v = static_cast<float>(v * inv);
  return out;
}

ApertureBank::ApertureBank(std::vector<aperture::ApertureSpec> specs, std::uint32_t grid_size,
                           unsigned jobs)
    : specs_(std::move(specs)), grid_(grid_size), jobs_(jobs) {
  if (specs_.empty()) throw ParameterError("aperture bank is empty");
}

ApertureBank::ApertureBank(ApertureBank&& other) noexcept
    : specs_(std::move(other.specs_)), grid_(other.grid_), jobs_(other.jobs_) {
  std::lock_guard lock(other.mutex_);
  cache_ = std::move(other.cache_);
}

ApertureBank ApertureBank::sampled(std::uint64_t bank_seed, std::size_t count,
                                   const aperture::ApertureConfig& cfg, std::uint32_t grid_size,
                                   unsigned jobs) {
  std::vector<aperture::ApertureSpec> specs;
  specs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    specs.push_back(aperture::sample_aperture_spec(derive_seed(bank_seed, i), cfg));
  }
  return ApertureBank(std::move(specs), grid_size, jobs);
}

std::shared_ptr<const ApertureMask> ApertureBank::mask(std::size_t i) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(i); it != cache_.end()) return it->second;
  }
  auto m = std::make_shared<const ApertureMask>(aperture::rasterize_aperture(specs_.at(i), grid_, jobs_));
  std::lock_guard lock(mutex_);
  return cache_.emplace(i, std::move(m)).first->second;
}

FlareParams sample_flare_params(std::uint64_t seed, const FlareConfig& cfg, std::size_t bank_size) {
  if (bank_size == 0) throw ParameterError("aperture bank is empty");
  Rng rng(seed);
  FlareParams p;
  p.aperture_index = std::uniform_int_distribution<std::size_t>(0, bank_size - 1)(rng);
  const double rx = cfg.source_range_fraction * cfg.sensor_w;
  const double ry = cfg.source_range_fraction * cfg.sensor_h;
  p.source.x = uniform(rng, -rx, rx);
  p.source.y = uniform(rng, -ry, ry);
  p.source.wm_nm = cfg.defocus_sigma_nm > 0.0 ? normal(rng, 0.0, cfg.defocus_sigma_nm) : 0.0;
  p.srf_seed = rng();
  p.k1 = cfg.max_abs_k1 > 0.0 ? uniform(rng, -cfg.max_abs_k1, cfg.max_abs_k1) : 0.0;
  const SRF srf = sample_srf(p.srf_seed, cfg.spectral);
  p.srf_mus = srf.mus;
  p.srf_sigmas = srf.sigmas;
  return p;
}

RenderedFlare render_scattering_flare(std::uint64_t seed, const FlareConfig& cfg,
                                      const ApertureBank& bank) {
  if (bank.grid_size() != cfg.grid_size) throw ParameterError("aperture bank grid does not match config");
  FlareParams params = sample_flare_params(seed, cfg, bank.size());
  const auto mask = bank.mask(params.aperture_index);
  const SRF srf = sample_srf(params.srf_seed, cfg.spectral);
  LinearImage psf = spectral_psf(*mask, params.source, srf, cfg.spectral, cfg.sensor_w, cfg.sensor_h,
                                 {cfg.chromatic_scale, cfg.jobs});
  psf = apply_distortion(psf, params.k1);
  return {normalize_max_luminance(psf), params};
}

void to_json(nlohmann::json& j, const FlareParams& p) {
  j = {{"aperture_index", p.aperture_index},
       {"source_x", p.source.x},
       {"source_y", p.source.y},
       {"wm_nm", p.source.wm_nm},
       {"srf_seed", p.srf_seed},
       {"srf_mus", p.srf_mus},
       {"srf_sigmas", p.srf_sigmas},
       {"k1", p.k1}};
}

void to_json(nlohmann::json& j, const FlareConfig& c) {
  j = {{"grid_size", c.grid_size},
       {"sensor_w", c.sensor_w},
       {"sensor_h", c.sensor_h},
       {"source_range_fraction", c.source_range_fraction},
       {"defocus_sigma_nm", c.defocus_sigma_nm},
       {"max_abs_k1", c.max_abs_k1},
       {"chromatic_scale", c.chromatic_scale},
       {"wavelengths", c.spectral.count()},
       {"reference_nm", c.spectral.reference_nm}};
}

}  // namespace flare::waveoptics

#include "flare/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flare/error.hpp"
#include "flare/rng.hpp"

namespace flare::synthesis {

SceneAug sample_scene_aug(std::uint64_t seed, const SceneAugConfig& cfg) {
  Rng rng(seed);
  SceneAug a;
  a.flip_h = uniform(rng, 0.0, 1.0) < cfg.flip_probability;
  a.flip_v = uniform(rng, 0.0, 1.0) < cfg.flip_probability;
  a.gain = uniform(rng, cfg.gain_min, cfg.gain_max);
  a.gamma = uniform(rng, cfg.gamma_min, cfg.gamma_max);
  return a;
}

LinearImage apply_scene_aug(const LinearImage& encoded, const SceneAug& aug) {
  if (encoded.channels() != 3) throw ParameterError("scene must be RGB");
  LinearImage img = encoded;
  if (aug.flip_h) img = flip_horizontal(img);
  if (aug.flip_v) img = flip_vertical(img);
  if (aug.gain != 1.0) {
    for (float& v : img.samples()) v = static_cast<float>(v * aug.gain);
  }
  return clip(linearize(clip(img), aug.gamma));
}

LinearImage augment_scene(const LinearImage& encoded, std::uint64_t seed, const SceneAugConfig& cfg) {
  return apply_scene_aug(encoded, sample_scene_aug(seed, cfg));
}

AffineAug sample_flare_aug(std::uint64_t seed, const FlareAugConfig& cfg) {
  Rng rng(seed);
  AffineAug a;
  a.rotation = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  a.dx = uniform(rng, -cfg.max_translation, cfg.max_translation);
  a.dy = uniform(rng, -cfg.max_translation, cfg.max_translation);
  a.shear = uniform(rng, -cfg.max_shear, cfg.max_shear);
  a.sx = uniform(rng, cfg.scale_min, cfg.scale_max);
  a.sy = uniform(rng, cfg.scale_min, cfg.scale_max);
  for (double& g : a.gains) g = uniform(rng, 0.0, cfg.gain_max);
  return a;
}

LinearImage apply_affine(const LinearImage& img, const AffineAug& aug) {
  if (!(aug.sx > 0.0) || !(aug.sy > 0.0)) throw ParameterError("affine scale must be positive");
  // Forward linear part A = R(theta) * Shear(phi) * S(sx, sy).
  const double c = std::cos(aug.rotation), s = std::sin(aug.rotation), t = std::tan(aug.shear);
  const double a00 = c * aug.sx, a01 = (c * t - s) * aug.sy;
  const double a10 = s * aug.sx, a11 = (s * t + c) * aug.sy;
  const double det = a00 * a11 - a01 * a10;
  if (std::abs(det) < 1e-12) throw ParameterError("affine transform is singular");
  const double i00 = a11 / det, i01 = -a01 / det, i10 = -a10 / det, i11 = a00 / det;

  const double cx = img.width() / 2, cy = img.height() / 2;
  LinearImage out(img.width(), img.height(), img.channels());
  for (std::uint32_t y = 0; y < img.height(); ++y) {
    for (std::uint32_t x = 0; x < img.width(); ++x) {
      const double px = x - cx - aug.dx, py = y - cy - aug.dy;
      const double sx = cx + i00 * px + i01 * py;
      const double sy = cy + i10 * px + i11 * py;
      for (std::uint32_t ch = 0; ch < img.channels(); ++ch) {
        out.at(x, y, ch) = sample_bilinear_zero(img, sx, sy, ch);
      }
    }
  }
  return out;
}

LinearImage apply_flare_aug(const LinearImage& flare, const AffineAug& aug) {
  if (flare.channels() != 3) throw ParameterError("flare must be RGB");
  for (double g : aug.gains) {
    if (!(g >= 0.0)) throw ParameterError("channel gains must be non-negative");
  }
  LinearImage out = apply_affine(flare, aug);
  auto px = out.samples();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(px[i] * aug.gains[i % 3]);
  return out;
}

LinearImage augment_flare(const LinearImage& flare, std::uint64_t seed, const FlareAugConfig& cfg) {
  return apply_flare_aug(flare, sample_flare_aug(seed, cfg));
}

LinearImage rotate_about_center(const LinearImage& img, double radians) {
  AffineAug a;
  a.rotation = radians;
  return apply_affine(img, a);
}

double sample_noise_sigma(std::uint64_t seed, const NoiseConfig& cfg) {
  if (!(cfg.dof > 0.0) || !(cfg.scale >= 0.0)) throw ParameterError("invalid noise distribution");
  Rng rng(seed);
  const double chi2 = std::chi_squared_distribution<double>(cfg.dof)(rng);
  return std::sqrt(cfg.scale * chi2);
}

float snap_to_lattice(float v) {
  return static_cast<float>(std::ldexp(std::nearbyint(std::ldexp(static_cast<double>(v), 24)), -24));
}

FlareSample composite(const LinearImage& scene, const LinearImage& flare, double sigma,
                      std::uint64_t seed) {
  require_same_shape(scene, flare, "composite");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("noise sigma must be >= 0");
  FlareSample s;
  s.sigma = sigma;
  s.seed = seed;
  s.scene = scene;
  s.flare = flare;
  for (float& v : s.scene.samples()) v = snap_to_lattice(v);
  for (float& v : s.flare.samples()) v = snap_to_lattice(v);
  s.corrupted = LinearImage(scene.width(), scene.height(), scene.channels());

  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto a = s.scene.samples();
  auto b = s.flare.samples();
  auto out = s.corrupted.samples();
  for (std::size_t i = 0; i < out.size(); ++i) {
    float v = a[i] + b[i];
    if (sigma > 0.0) v = static_cast<float>(v + sigma * gauss(rng));
    out[i] = std::clamp(v, 0.0f, 1.0f);
  }
  return s;
}

nlohmann::json to_json(const SceneAug& a) {
  return {{"flip_h", a.flip_h}, {"flip_v", a.flip_v}, {"gain", a.gain}, {"gamma", a.gamma}};
}

nlohmann::json to_json(const AffineAug& a) {
  return {{"rotation", a.rotation}, {"dx", a.dx}, {"dy", a.dy}, {"shear", a.shear},
          {"sx", a.sx}, {"sy", a.sy}, {"gains", a.gains}};
}

}  // namespace flare::synthesis

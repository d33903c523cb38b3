#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flare/image.hpp"

namespace flare::synthesis {

/// Scene augmentation: flips, brightness gain on the encoded image, then
/// inverse gamma.
struct SceneAug {
  bool flip_h = false;
  bool flip_v = false;
  double gain = 1.0;
  double gamma = 1.0;
};

struct SceneAugConfig {
  double flip_probability = 0.5;
  double gain_min = 0.8;
  double gain_max = 1.2;
  double gamma_min = 1.8;
  double gamma_max = 2.2;
};

SceneAug sample_scene_aug(std::uint64_t seed, const SceneAugConfig& cfg = {});
LinearImage apply_scene_aug(const LinearImage& encoded, const SceneAug& aug);
/// Returns a linear scene in [0, 1].
LinearImage augment_scene(const LinearImage& encoded, std::uint64_t seed, const SceneAugConfig& cfg = {});

/// Affine and white-balance augmentation of a flare layer.
struct AffineAug {
  double rotation = 0.0;  // radians
  double dx = 0.0;        // pixels
  double dy = 0.0;
  double shear = 0.0;  // radians
  double sx = 1.0;
  double sy = 1.0;
  std::array<double, 3> gains{1.0, 1.0, 1.0};

  static AffineAug identity() { return {}; }
};

struct FlareAugConfig {
  double max_translation = 10.0;
  double max_shear = 3.14159265358979323846 / 9.0;
  double scale_min = 0.9;
  double scale_max = 1.2;
  double gain_max = 10.0;
};

AffineAug sample_flare_aug(std::uint64_t seed, const FlareAugConfig& cfg = {});

/// Geometric part only: rotation, shear and scale about pixel (w/2, h/2),
/// then translation. Bilinear sampling with zero outside.
LinearImage apply_affine(const LinearImage& img, const AffineAug& aug);

/// Geometric transform followed by per-channel gains. No clipping.
LinearImage apply_flare_aug(const LinearImage& flare, const AffineAug& aug);
LinearImage augment_flare(const LinearImage& flare, std::uint64_t seed, const FlareAugConfig& cfg = {});

/// Rotation about pixel (w/2, h/2) with bilinear sampling and zero fill.
LinearImage rotate_about_center(const LinearImage& img, double radians);

struct NoiseConfig {
  double scale = 0.01;
  double dof = 1.0;
};

/// sigma with sigma^2 = scale * chi2(dof).
double sample_noise_sigma(std::uint64_t seed, const NoiseConfig& cfg = {});

struct FlareSample {
  LinearImage scene;
  LinearImage flare;
  LinearImage corrupted;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Rounds to the nearest multiple of 2^-24. Sums of lattice values that stay
/// within [0, 1] are exact in float32.
float snap_to_lattice(float v);

/// corrupted = clip(scene + flare + N(0, sigma^2), 0, 1). Scene and flare are
/// snapped to the 2^-24 lattice first (and stored snapped), so with sigma = 0
/// and no clipping, corrupted - flare == scene exactly.
FlareSample composite(const LinearImage& scene, const LinearImage& flare, double sigma,
                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// Dataset generation

struct DatasetConfig {
  std::filesystem::path scene_dir;
  std::optional<std::filesystem::path> flare_sim_dir;
  std::optional<std::filesystem::path> flare_captured_dir;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  /// Probability of drawing a simulated flare when both sources exist.
  double sim_ratio = 0.5;
  std::uint32_t size = 512;
  /// Gamma used when reading captured PNG flares (1 = already linear).
  double captured_gamma = 1.0;
  bool rotate_captured = true;
  SceneAugConfig scene_aug;
  FlareAugConfig flare_aug;
  NoiseConfig noise;
  unsigned jobs = 1;
};

struct DatasetResult {
  std::size_t written = 0;
  std::size_t failed = 0;
  std::vector<nlohmann::json> records;
};

/// Writes `count` samples as TensorFiles plus `manifest.jsonl` and
/// `dataset_config.json` into `out_dir`. Output depends only on the config
/// (never on `jobs`). Throws if every sample fails.
DatasetResult generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir);

nlohmann::json to_json(const DatasetConfig& cfg);
nlohmann::json to_json(const SceneAug& a);
nlohmann::json to_json(const AffineAug& a);

/// Sorted regular files in `dir` whose extension is in `exts`.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              const std::vector<std::string>& exts);

}  // namespace flare::synthesis

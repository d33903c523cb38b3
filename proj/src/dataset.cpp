#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <thread>

#include "flare/error.hpp"
#include "flare/png_io.hpp"
#include "flare/rng.hpp"
#include "flare/synthesis.hpp"
#include "flare/tensor_io.hpp"

namespace flare::synthesis {

namespace fs = std::filesystem;

std::vector<fs::path> list_files(const fs::path& dir, const std::vector<std::string>& exts) {
  std::vector<fs::path> files;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (std::find(exts.begin(), exts.end(), ext) != exts.end()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

namespace {

LinearImage center_square(const LinearImage& img) {
  const std::uint32_t side = std::min(img.width(), img.height());
  if (img.width() == img.height()) return img;
  const std::uint32_t ox = (img.width() - side) / 2, oy = (img.height() - side) / 2;
  LinearImage out(side, side, img.channels());
  for (std::uint32_t y = 0; y < side; ++y)
    for (std::uint32_t x = 0; x < side; ++x)
      for (std::uint32_t c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(ox + x, oy + y, c);
  return out;
}

LinearImage crop(const LinearImage& img, std::uint32_t ox, std::uint32_t oy, std::uint32_t side) {
  LinearImage out(side, side, img.channels());
  for (std::uint32_t y = 0; y < side; ++y)
    for (std::uint32_t x = 0; x < side; ++x)
      for (std::uint32_t c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(ox + x, oy + y, c);
  return out;
}

LinearImage to_rgb(const LinearImage& img) {
  if (img.channels() == 3) return img;
  LinearImage out(img.width(), img.height(), 3);
  for (std::size_t p = 0; p < img.pixel_count(); ++p)
    for (int c = 0; c < 3; ++c) out.samples()[3 * p + c] = img.samples()[p];
  return out;
}

struct Sources {
  std::vector<fs::path> scenes;
  std::vector<fs::path> sim;
  std::vector<fs::path> captured;
};

std::string index_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

nlohmann::json make_sample(const DatasetConfig& cfg, const Sources& src, std::size_t index,
                           const fs::path& out_dir) {
  const std::uint64_t seed = derive_seed(cfg.seed, index);
  Rng rng(seed);
  nlohmann::json rec;
  rec["index"] = index;
  rec["seed"] = seed;

  // Draw every random quantity up front so the stream layout does not depend
  // on which inputs fail to load.
  const std::size_t scene_idx = std::uniform_int_distribution<std::size_t>(0, src.scenes.size() - 1)(rng);
  const double crop_u = uniform(rng, 0.0, 1.0), crop_v = uniform(rng, 0.0, 1.0);
  const std::uint64_t scene_aug_seed = rng();
  const double source_draw = uniform(rng, 0.0, 1.0);
  const std::uint64_t flare_pick = rng();
  const double captured_rotation = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const std::uint64_t flare_aug_seed = rng();
  const std::uint64_t noise_seed = rng();
  const std::uint64_t composite_seed = rng();

  bool use_sim;
  if (src.captured.empty()) {
    use_sim = true;
  } else if (src.sim.empty()) {
    use_sim = false;
  } else {
    use_sim = source_draw < cfg.sim_ratio;
  }
  const auto& pool = use_sim ? src.sim : src.captured;
  const fs::path& flare_path = pool[flare_pick % pool.size()];
  const fs::path& scene_path = src.scenes[scene_idx];
  rec["scene_file"] = scene_path.filename().string();
  rec["flare_source"] = use_sim ? "simulated" : "captured";
  rec["flare_file"] = flare_path.filename().string();

  // Scene: random square crop of the shorter side, resized to the training size.
  LinearImage scene_enc = to_rgb(read_png(scene_path));
  const std::uint32_t side = std::min(scene_enc.width(), scene_enc.height());
  const auto ox = static_cast<std::uint32_t>(crop_u * (scene_enc.width() - side + 1));
  const auto oy = static_cast<std::uint32_t>(crop_v * (scene_enc.height() - side + 1));
  scene_enc = bilinear_resample(crop(scene_enc, std::min(ox, scene_enc.width() - side),
                                     std::min(oy, scene_enc.height() - side), side),
                                cfg.size, cfg.size);
  const SceneAug scene_aug = sample_scene_aug(scene_aug_seed, cfg.scene_aug);
  const LinearImage scene = apply_scene_aug(scene_enc, scene_aug);
  rec["scene_crop"] = {{"x", ox}, {"y", oy}, {"side", side}};
  rec["scene_aug"] = to_json(scene_aug);

  LinearImage flare = flare_path.extension() == ".flt" ? read_image_tensor(flare_path)
                                                       : load_png_linear(flare_path, cfg.captured_gamma);
  flare = bilinear_resample(center_square(to_rgb(flare)), cfg.size, cfg.size);
  if (!use_sim && cfg.rotate_captured) {
    flare = rotate_about_center(flare, captured_rotation);
    rec["captured_rotation"] = captured_rotation;
  }
  const AffineAug flare_aug = sample_flare_aug(flare_aug_seed, cfg.flare_aug);
  flare = apply_flare_aug(flare, flare_aug);
  rec["flare_aug"] = to_json(flare_aug);

  const double sigma = sample_noise_sigma(noise_seed, cfg.noise);
  const FlareSample sample = composite(scene, flare, sigma, composite_seed);
  rec["sigma"] = sigma;
  rec["noise_seed"] = noise_seed;
  rec["composite_seed"] = composite_seed;

  const std::string stem = index_name(index);
  write_image_tensor(out_dir / (stem + "_scene.flt"), sample.scene);
  write_image_tensor(out_dir / (stem + "_flare.flt"), sample.flare);
  write_image_tensor(out_dir / (stem + "_corrupted.flt"), sample.corrupted);
  rec["files"] = {{"scene", stem + "_scene.flt"},
                  {"flare", stem + "_flare.flt"},
                  {"corrupted", stem + "_corrupted.flt"}};
  return rec;
}

}  // namespace

nlohmann::json to_json(const DatasetConfig& cfg) {
  nlohmann::json j;
  j["scene_dir"] = cfg.scene_dir.string();
  j["flare_sim_dir"] = cfg.flare_sim_dir ? nlohmann::json(cfg.flare_sim_dir->string()) : nlohmann::json();
  j["flare_captured_dir"] =
      cfg.flare_captured_dir ? nlohmann::json(cfg.flare_captured_dir->string()) : nlohmann::json();
  j["count"] = cfg.count;
  j["seed"] = cfg.seed;
  j["sim_ratio"] = cfg.sim_ratio;
  j["size"] = cfg.size;
  j["captured_gamma"] = cfg.captured_gamma;
  j["rotate_captured"] = cfg.rotate_captured;
  j["scene_aug"] = {{"flip_probability", cfg.scene_aug.flip_probability},
                    {"gain", {cfg.scene_aug.gain_min, cfg.scene_aug.gain_max}},
                    {"gamma", {cfg.scene_aug.gamma_min, cfg.scene_aug.gamma_max}}};
  j["flare_aug"] = {{"max_translation", cfg.flare_aug.max_translation},
                    {"max_shear", cfg.flare_aug.max_shear},
                    {"scale", {cfg.flare_aug.scale_min, cfg.flare_aug.scale_max}},
                    {"gain_max", cfg.flare_aug.gain_max}};
  j["noise"] = {{"scale", cfg.noise.scale}, {"dof", cfg.noise.dof}};
  return j;
}

DatasetResult generate_dataset(const DatasetConfig& cfg, const fs::path& out_dir) {
  if (cfg.size == 0) throw ParameterError("dataset image size must be >= 1");
  if (!(cfg.sim_ratio >= 0.0 && cfg.sim_ratio <= 1.0)) throw ParameterError("ratio must be in [0, 1]");
  Sources src;
  src.scenes = list_files(cfg.scene_dir, {".png"});
  if (src.scenes.empty()) throw IoError("no scene images found in " + cfg.scene_dir.string());
  // A source whose ratio share is zero is never listed, so it is never read.
  if (cfg.flare_sim_dir && cfg.sim_ratio > 0.0) src.sim = list_files(*cfg.flare_sim_dir, {".flt"});
  if (cfg.flare_captured_dir && cfg.sim_ratio < 1.0) {
    src.captured = list_files(*cfg.flare_captured_dir, {".flt", ".png"});
  }
  if (src.sim.empty() && src.captured.empty()) throw IoError("no flare images available");

  fs::create_directories(out_dir);
  DatasetResult result;
  result.records.resize(cfg.count);

  auto run = [&](std::size_t i) {
    try {
      result.records[i] = make_sample(cfg, src, i, out_dir);
    } catch (const std::exception& e) {
      result.records[i] = {{"index", i}, {"seed", derive_seed(cfg.seed, i)}, {"error", e.what()}};
    }
  };
  const unsigned jobs = std::max(1u, cfg.jobs);
  if (jobs == 1 || cfg.count < 2) {
    for (std::size_t i = 0; i < cfg.count; ++i) run(i);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < cfg.count; i += jobs) run(i);
      });
    }
  }

  std::string manifest;
  for (const auto& rec : result.records) {
    if (rec.contains("error")) {
      ++result.failed;
    } else {
      ++result.written;
    }
    manifest += rec.dump() + "\n";
  }
  write_file_atomic(out_dir / "manifest.jsonl", manifest);
  write_file_atomic(out_dir / "dataset_config.json", to_json(cfg).dump(2) + "\n");
  if (cfg.count > 0 && result.written == 0) throw IoError("every dataset sample failed");
  return result;
}

}  // namespace flare::synthesis

#include "flare/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flare/aperture.hpp"
#include "flare/error.hpp"
#include "flare/fft.hpp"
#include "flare/maskblend.hpp"
#include "flare/metrics.hpp"
#include "flare/pipeline.hpp"
#include "flare/png_io.hpp"
#include "flare/predictor.hpp"
#include "flare/rng.hpp"
#include "flare/synthesis.hpp"
#include "flare/tensor_io.hpp"
#include "flare/waveoptics.hpp"

namespace flare::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void log_event(const std::string& level, const std::string& cmd, const std::string& event,
               json fields = json::object()) {
  fields["level"] = level;
  fields["cmd"] = cmd;
  fields["event"] = event;
  std::cerr << fields.dump() << '\n';
}

std::string numbered(const std::string& prefix, std::size_t i, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return prefix + buf + ext;
}

struct Preset {
  std::uint32_t grid;
  double disk_radius_px;
};

Preset preset_values(const std::string& name) {
  if (name == "paper") return {8192, 3000.0};
  return {2048, 750.0};
}

void write_json_file(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

// --config FILE: JSON object whose keys are long flag names. Its values are
// expanded into arguments placed before the command-line flags, which
// therefore win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::vector<std::string> rest;
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config_path) return args;
  std::ifstream f(*config_path);
  if (!f) throw CLI::ValidationError("--config", "cannot read " + *config_path);
  json cfg;
  try {
    cfg = json::parse(f);
  } catch (const json::exception& e) {
    throw CLI::ValidationError("--config", e.what());
  }
  if (!cfg.is_object()) throw CLI::ValidationError("--config", "config must be a JSON object");
  // Subcommand name first, then config-derived flags, then the rest.
  if (!rest.empty()) out.push_back(rest.front());
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back(flag);
    } else if (value.is_array()) {
      out.push_back(flag);
      for (const auto& v : value) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    } else if (value.is_string()) {
      out.push_back(flag);
      out.push_back(value.get<std::string>());
    } else if (!value.is_null()) {
      out.push_back(flag);
      out.push_back(value.dump());
    }
  }
  out.insert(out.end(), rest.begin() + (rest.empty() ? 0 : 1), rest.end());
  return out;
}

// ---------------------------------------------------------------------------

struct CommonOpts {
  std::uint64_t seed = 0;
  std::string preset = "desk";
  unsigned jobs = 1;
};

void add_common(CLI::App* sub, CommonOpts& c, bool with_seed = true) {
  if (with_seed) sub->add_option("--seed", c.seed, "Master random seed");
  sub->add_option("--preset", c.preset, "Scale preset")->check(CLI::IsMember({"desk", "paper"}));
  sub->add_option("--jobs", c.jobs, "Worker threads (outputs do not depend on it)")->check(CLI::Range(1u, 256u));
}

struct AperturesOpts {
  CommonOpts common;
  std::size_t count = 125;
  std::string out;
  std::uint32_t grid = 0;
  bool no_masks = false;
};

int run_gen_apertures(const AperturesOpts& o) {
  const Preset p = preset_values(o.common.preset);
  const std::uint32_t grid = o.grid ? o.grid : p.grid;
  aperture::ApertureConfig acfg = o.common.preset == "paper" ? aperture::ApertureConfig::paper()
                                                             : aperture::ApertureConfig::desk();
  json config = {{"command", "gen-apertures"}, {"count", o.count}, {"seed", o.common.seed},
                 {"preset", o.common.preset},  {"grid", grid},     {"disk_radius_px", acfg.disk_radius_px},
                 {"masks", !o.no_masks}};
  log_event("info", "gen-apertures", "config", {{"config", config}, {"out", o.out}, {"jobs", o.common.jobs}});
  fs::create_directories(o.out);
  for (std::size_t i = 0; i < o.count; ++i) {
    const auto spec = aperture::sample_aperture_spec(derive_seed(o.common.seed, i), acfg);
    write_json_file(fs::path(o.out) / numbered("aperture_", i, ".json"), json(spec));
    if (!o.no_masks) {
      const auto mask = aperture::rasterize_aperture(spec, grid, o.common.jobs);
      write_tensor(fs::path(o.out) / numbered("aperture_", i, ".flt"), Tensor{{grid, grid}, mask.values});
    }
  }
  write_json_file(fs::path(o.out) / "run_config.json", config);
  log_event("info", "gen-apertures", "done", {{"written", o.count}});
  return kExitOk;
}

struct RenderOpts {
  CommonOpts common;
  std::size_t count = 1;
  std::string out;
  std::string apertures;
  std::size_t bank_size = 125;
  std::uint64_t bank_seed = 0;
  std::uint32_t grid = 0;
  std::uint32_t sensor = 800;
  bool chromatic = false;
  bool no_preview = false;
};

int run_render_flare(const RenderOpts& o) {
  const Preset p = preset_values(o.common.preset);
  waveoptics::FlareConfig fc;
  fc.grid_size = o.grid ? o.grid : p.grid;
  fc.sensor_w = fc.sensor_h = o.sensor;
  fc.chromatic_scale = o.chromatic;
  fc.jobs = o.common.jobs;

  aperture::ApertureConfig acfg = aperture::ApertureConfig::desk();
  acfg.disk_radius_px = p.disk_radius_px;
  std::optional<waveoptics::ApertureBank> bank;
  json bank_desc;
  if (!o.apertures.empty()) {
    std::vector<aperture::ApertureSpec> specs;
    for (const auto& f : synthesis::list_files(o.apertures, {".json"})) {
      if (f.filename() == "run_config.json") continue;
      std::ifstream in(f);
      specs.push_back(json::parse(in).get<aperture::ApertureSpec>());
    }
    if (specs.empty()) throw IoError("no aperture specs in " + o.apertures);
    bank_desc = {{"source", o.apertures}, {"size", specs.size()}};
    bank.emplace(std::move(specs), fc.grid_size, o.common.jobs);
  } else {
    bank_desc = {{"bank_seed", o.bank_seed}, {"size", o.bank_size}, {"disk_radius_px", acfg.disk_radius_px}};
    bank.emplace(waveoptics::ApertureBank::sampled(o.bank_seed, o.bank_size, acfg, fc.grid_size, o.common.jobs));
  }

  json config = {{"command", "render-flare"}, {"count", o.count},   {"seed", o.common.seed},
                 {"preset", o.common.preset}, {"bank", bank_desc}, {"flare", json(fc)},
                 {"preview", !o.no_preview}};
  log_event("info", "render-flare", "config", {{"config", config}, {"out", o.out}, {"jobs", o.common.jobs}});
  fs::create_directories(o.out);
  std::string index;
  for (std::size_t i = 0; i < o.count; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto seed = derive_seed(o.common.seed, i);
    const auto flare = waveoptics::render_scattering_flare(seed, fc, *bank);
    write_image_tensor(fs::path(o.out) / numbered("flare_", i, ".flt"), flare.image);
    if (!o.no_preview) save_png_linear(fs::path(o.out) / numbered("flare_", i, ".png"), flare.image, 2.2);
    json rec = {{"index", i}, {"seed", seed}, {"file", numbered("flare_", i, ".flt")}, {"params", json(flare.params)}};
    index += rec.dump() + "\n";
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log_event("info", "render-flare", "rendered", {{"index", i}, {"seconds", secs}});
  }
  write_file_atomic(fs::path(o.out) / "flares.jsonl", index);
  write_json_file(fs::path(o.out) / "run_config.json", config);
  return kExitOk;
}

struct DatasetOpts {
  CommonOpts common;
  std::string scenes, flares_sim, flares_captured, out;
  std::size_t count = 0;
  double ratio = 0.5;
  std::uint32_t size = 512;
  double noise_dof = 1.0;
};

int run_gen_dataset(const DatasetOpts& o) {
  synthesis::DatasetConfig cfg;
  cfg.scene_dir = o.scenes;
  if (!o.flares_sim.empty()) cfg.flare_sim_dir = o.flares_sim;
  if (!o.flares_captured.empty()) cfg.flare_captured_dir = o.flares_captured;
  cfg.count = o.count;
  cfg.seed = o.common.seed;
  cfg.sim_ratio = o.ratio;
  cfg.size = o.size;
  cfg.noise.dof = o.noise_dof;
  cfg.jobs = o.common.jobs;
  if (!cfg.flare_sim_dir && !cfg.flare_captured_dir) {
    throw CLI::ValidationError("gen-dataset", "at least one of --flares-sim / --flares-captured is required");
  }
  log_event("info", "gen-dataset", "config", {{"config", synthesis::to_json(cfg)}, {"out", o.out}, {"jobs", o.common.jobs}});
  const auto result = synthesis::generate_dataset(cfg, o.out);
  log_event(result.failed ? "warn" : "info", "gen-dataset", "done",
            {{"written", result.written}, {"failed", result.failed}});
  return kExitOk;
}

struct BlendOpts {
  std::string input, pred, out, mask_out;
  double threshold = maskblend::kSaturationThreshold;
  std::string measure = "luminance";
  double gamma = kDefaultGamma;
};

maskblend::SaturationMeasure parse_measure(const std::string& m) {
  return m == "max" ? maskblend::SaturationMeasure::kMaxChannel : maskblend::SaturationMeasure::kLuminance;
}

int run_blend(const BlendOpts& o) {
  json config = {{"command", "blend"}, {"input", o.input}, {"pred", o.pred},       {"threshold", o.threshold},
                 {"measure", o.measure}, {"gamma", o.gamma}};
  log_event("info", "blend", "config", {{"config", config}, {"out", o.out}});
  const LinearImage input = load_image_any(o.input, o.gamma);
  const LinearImage pred = load_image_any(o.pred, o.gamma);
  require_same_shape(input, pred, "blend");
  const auto mf = maskblend::feathered_saturation(input, o.threshold, parse_measure(o.measure));
  save_image_any(o.out, maskblend::blend_light_source(input, pred, mf), o.gamma);
  if (!o.mask_out.empty()) write_png(o.mask_out, maskblend::mask_image(mf));
  write_json_file(fs::path(o.out + ".config.json"), config);
  return kExitOk;
}

struct RemoveOpts {
  std::string input, predictor, out;
  std::uint32_t lowres = 512;
  double threshold = maskblend::kSaturationThreshold;
  double gamma = kDefaultGamma;
  int timeout_s = 120;
};

int run_remove(const RemoveOpts& o) {
  json config = {{"command", "remove"}, {"input", o.input},         {"predictor", o.predictor},
                 {"lowres", o.lowres},  {"threshold", o.threshold}, {"gamma", o.gamma}};
  log_event("info", "remove", "config", {{"config", config}, {"out", o.out}});
  const LinearImage input = load_image_any(o.input, o.gamma);
  pipeline::SubprocessPredictor predictor(o.predictor, std::chrono::seconds(o.timeout_s));
  const auto t0 = std::chrono::steady_clock::now();
  pipeline::HighResOptions hopts;
  hopts.lowres = o.lowres;
  hopts.threshold = o.threshold;
  const LinearImage out = pipeline::remove_flare_highres(input, predictor, hopts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_image_any(o.out, out, o.gamma);
  write_json_file(fs::path(o.out + ".config.json"), config);
  log_event("info", "remove", "done", {{"seconds", secs}});
  return kExitOk;
}

struct EvalOpts {
  std::string pred, truth, input, report;
  double threshold = maskblend::kSaturationThreshold;
  double gamma = kDefaultGamma;
};

int run_eval(const EvalOpts& o) {
  json config = {{"command", "eval"}, {"pred", o.pred}, {"truth", o.truth}, {"input", o.input},
                 {"threshold", o.threshold}, {"gamma", o.gamma}};
  log_event("info", "eval", "config", {{"config", config}, {"report", o.report}});
  const auto preds = synthesis::list_files(o.pred, {".png", ".flt"});
  if (preds.empty()) throw IoError("no predictions found in " + o.pred);
  json images = json::array();
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (const auto& p : preds) {
    const auto name = p.filename();
    const LinearImage pred = load_image_any(p, o.gamma);
    const LinearImage truth = load_image_any(fs::path(o.truth) / name, o.gamma);
    const LinearImage input = load_image_any(fs::path(o.input) / name, o.gamma);
    const auto m = pipeline::eval_masked(pred, truth, input, o.threshold);
    images.push_back({{"file", name.string()}, {"psnr", m.psnr}, {"ssim", m.ssim}});
    psnr_sum += m.psnr;
    ssim_sum += m.ssim;
  }
  const double n = static_cast<double>(images.size());
  json report = {{"config", config},
                 {"count", images.size()},
                 {"mean_psnr", psnr_sum / n},
                 {"mean_ssim", ssim_sum / n},
                 {"images", images}};
  write_json_file(o.report, report);
  log_event("info", "eval", "done", {{"mean_psnr", psnr_sum / n}, {"mean_ssim", ssim_sum / n}});
  return kExitOk;
}

struct BenchOpts {
  std::vector<std::uint32_t> grids{1024, 2048, 4096};
  std::size_t wavelengths = 4;
  int fft_reps = 3;
  std::string report;
};

int run_bench_psf(const BenchOpts& o) {
  using clock = std::chrono::steady_clock;
  json results = json::array();
  const auto spectral = waveoptics::SpectralConfig::standard();
  for (std::uint32_t g : o.grids) {
    aperture::ApertureSpec clean;
    clean.disk_radius_px = 750.0;
    const auto mask = aperture::rasterize_aperture(clean, g);

    ComplexGrid work(g);
    fft2d_forward(work);  // plan outside the timed region
    auto t0 = clock::now();
    for (int r = 0; r < o.fft_reps; ++r) fft2d_forward(work);
    const double fft_s = std::chrono::duration<double>(clock::now() - t0).count() / o.fft_reps;

    t0 = clock::now();
    const std::size_t L = std::min(o.wavelengths, spectral.count());
    for (std::size_t j = 0; j < L; ++j) {
      const auto phase = waveoptics::defocus_phase(g, waveoptics::kDefocusSigmaNm, spectral.lambdas_nm[j]);
      const auto psf = waveoptics::monochromatic_psf(mask, phase);
      (void)psf;
    }
    const double psf_s = std::chrono::duration<double>(clock::now() - t0).count();
    json row = {{"grid", g}, {"fft_seconds", fft_s}, {"wavelengths", L},
                {"wavelengths_per_second", L / psf_s}};
    log_event("info", "bench-psf", "grid", row);
    results.push_back(row);
  }
  json out = {{"command", "bench-psf"}, {"results", results}};
  std::cout << out.dump(2) << '\n';
  if (!o.report.empty()) write_json_file(o.report, out);
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& raw_args) {
  CLI::App app{"Lens-flare synthesis and removal toolkit", "flaretk"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", "JSON config file whose keys are long flag names");

  AperturesOpts ap;
  auto* s_ap = app.add_subcommand("gen-apertures", "Sample and rasterize dirty apertures");
  add_common(s_ap, ap.common);
  s_ap->add_option("--count", ap.count, "Number of apertures");
  s_ap->add_option("--out", ap.out, "Output directory")->required();
  s_ap->add_option("--grid", ap.grid, "Raster grid size (power of two)");
  s_ap->add_flag("--no-masks", ap.no_masks, "Write specs only");

  RenderOpts rf;
  auto* s_rf = app.add_subcommand("render-flare", "Render scattering-flare images");
  add_common(s_rf, rf.common);
  s_rf->add_option("--count", rf.count, "Number of flare images");
  s_rf->add_option("--out", rf.out, "Output directory")->required();
  s_rf->add_option("--apertures", rf.apertures, "Directory of aperture specs from gen-apertures");
  s_rf->add_option("--bank-size", rf.bank_size, "Size of the sampled aperture bank");
  s_rf->add_option("--bank-seed", rf.bank_seed, "Seed of the sampled aperture bank");
  s_rf->add_option("--grid", rf.grid, "FFT grid size (power of two)");
  s_rf->add_option("--sensor", rf.sensor, "Square sensor size in pixels");
  s_rf->add_flag("--chromatic-scale", rf.chromatic, "Scale each wavelength's PSF by lambda/550nm");
  s_rf->add_flag("--no-preview", rf.no_preview, "Skip the 8-bit PNG previews");

  DatasetOpts ds;
  auto* s_ds = app.add_subcommand("gen-dataset", "Composite flare-corrupted training pairs");
  add_common(s_ds, ds.common);
  s_ds->add_option("--scenes", ds.scenes, "Directory of flare-free PNG scenes")->required();
  s_ds->add_option("--flares-sim", ds.flares_sim, "Directory of simulated flare TensorFiles");
  s_ds->add_option("--flares-captured", ds.flares_captured, "Directory of captured flare images");
  s_ds->add_option("--count", ds.count, "Number of samples")->required();
  s_ds->add_option("--out", ds.out, "Output directory")->required();
  s_ds->add_option("--ratio", ds.ratio, "Probability of a simulated flare")->check(CLI::Range(0.0, 1.0));
  s_ds->add_option("--size", ds.size, "Output image size");
  s_ds->add_option("--noise-dof", ds.noise_dof, "Chi-square degrees of freedom of the noise variance");

  BlendOpts bl;
  auto* s_bl = app.add_subcommand("blend", "Blend input light sources back into a prediction");
  s_bl->add_option("--input", bl.input, "Flare-corrupted input image")->required();
  s_bl->add_option("--pred", bl.pred, "Network prediction")->required();
  s_bl->add_option("--out", bl.out, "Output image")->required();
  s_bl->add_option("--threshold", bl.threshold, "Saturation threshold");
  s_bl->add_option("--measure", bl.measure, "Saturation measure")->check(CLI::IsMember({"luminance", "max"}));
  s_bl->add_option("--gamma", bl.gamma, "PNG transfer gamma")->check(CLI::PositiveNumber);
  s_bl->add_option("--mask-out", bl.mask_out, "Write the feathered mask as PNG");

  RemoveOpts rm;
  auto* s_rm = app.add_subcommand("remove", "High-resolution flare removal with a predictor process");
  s_rm->add_option("--input", rm.input, "Input image")->required();
  s_rm->add_option("--predictor", rm.predictor, "Predictor command line")->required();
  s_rm->add_option("--out", rm.out, "Output image")->required();
  s_rm->add_option("--lowres", rm.lowres, "Prediction resolution");
  s_rm->add_option("--threshold", rm.threshold, "Saturation threshold");
  s_rm->add_option("--gamma", rm.gamma, "PNG transfer gamma")->check(CLI::PositiveNumber);
  s_rm->add_option("--timeout", rm.timeout_s, "Predictor timeout in seconds");

  EvalOpts ev;
  auto* s_ev = app.add_subcommand("eval", "Masked PSNR/SSIM over a directory of predictions");
  s_ev->add_option("--pred", ev.pred, "Prediction directory")->required();
  s_ev->add_option("--truth", ev.truth, "Ground-truth directory")->required();
  s_ev->add_option("--input", ev.input, "Input directory")->required();
  s_ev->add_option("--report", ev.report, "Report JSON path")->required();
  s_ev->add_option("--threshold", ev.threshold, "Saturation threshold");
  s_ev->add_option("--gamma", ev.gamma, "PNG transfer gamma")->check(CLI::PositiveNumber);

  BenchOpts bp;
  auto* s_bp = app.add_subcommand("bench-psf", "Time FFT and PSF throughput per grid size");
  s_bp->add_option("--grids", bp.grids, "Grid sizes")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  s_bp->add_option("--wavelengths", bp.wavelengths, "Wavelengths per grid");
  s_bp->add_option("--reps", bp.fft_reps, "FFT repetitions")->check(CLI::PositiveNumber);
  s_bp->add_option("--report", bp.report, "Also write results to this JSON file");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc != 0 && e.get_exit_code() != 0) {
      std::cerr << app.help();
      return kExitUsage;
    }
    return kExitOk;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "gen-apertures") return run_gen_apertures(ap);
    if (name == "render-flare") return run_render_flare(rf);
    if (name == "gen-dataset") return run_gen_dataset(ds);
    if (name == "blend") return run_blend(bl);
    if (name == "remove") return run_remove(rm);
    if (name == "eval") return run_eval(ev);
    if (name == "bench-psf") return run_bench_psf(bp);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    log_event("error", name, "failed", {{"error", e.what()}});
    return kExitRuntime;
  }
  return kExitUsage;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args);
}

}  // namespace flare::cli

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Every check compares the library against the
// independent implementations in tests/oracles.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "flare/aperture.hpp"
#include "flare/losses.hpp"
#include "flare/maskblend.hpp"
#include "flare/metrics.hpp"
#include "flare/pipeline.hpp"
#include "flare/png_io.hpp"
#include "flare/rng.hpp"
#include "flare/synthesis.hpp"
#include "flare/tensor_io.hpp"
#include "flare/waveoptics.hpp"
#include "oracles.hpp"

namespace ap = flare::aperture;
namespace wo = flare::waveoptics;
namespace sy = flare::synthesis;
namespace mb = flare::maskblend;
namespace ls = flare::losses;
namespace pl = flare::pipeline;
namespace fs = std::filesystem;
using flare::LinearImage;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome parseval() {
  const std::uint32_t G = 1024;
  flare::Rng rng(2024);
  const auto t0 = Clock::now();
  double worst = 0;
  bool nonneg = true;
  for (int trial = 0; trial < 100; ++trial) {
    const auto mask = ap::rasterize_aperture(ap::sample_aperture_spec(rng(), ap::ApertureConfig::desk()), G);
    const auto phase =
        wo::defocus_phase(G, flare::normal(rng, 0, wo::kDefocusSigmaNm), flare::uniform(rng, 380, 740));
    const auto psf = wo::monochromatic_psf(mask, phase);
    long double sum = 0;
    for (double v : psf.values) {
      sum += v;
      nonneg &= v >= 0;
    }
    long double energy = 0;
    for (float a : mask.values) energy += static_cast<long double>(a) * a;
    const long double expect = static_cast<long double>(G) * G * energy;
    worst = std::max(worst, static_cast<double>(std::fabs(sum / expect - 1)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && nonneg && secs < 30,
          fmt("max rel err %.3g, non-negative %d, %.1f s", worst, int(nonneg), secs)};
}

// First minimum along the +v axis, refined by a parabola through the
// three samples around the discrete minimum.
double refined_axis_minimum(const wo::Plane& psf) {
  const std::uint32_t c = psf.grid_size / 2;
  std::uint32_t k = 1;
  while (psf.at(c, c + k + 1) < psf.at(c, c + k)) ++k;
  const double a = psf.at(c, c + k - 1), b = psf.at(c, c + k), d = psf.at(c, c + k + 1);
  return k + 0.5 * (a - d) / (a - 2 * b + d);
}

Outcome airy() {
  const std::uint32_t G = 2048;
  const auto t0 = Clock::now();
  // The grid's own clean disk: its first zero (about 1.34 cells) falls
  // between FFT samples, so the minimum is located by a dense scan of the
  // continuous spectrum of the rasterized aperture, and the FFT samples are
  // checked against that spectrum.
  const auto mask = ap::rasterize_aperture(ap::ApertureSpec{}, G);
  const auto psf = wo::monochromatic_psf(mask, wo::defocus_phase(G, 0.0, 550.0));
  const double R = ap::disk_radius_cells(G);
  const double predicted = 1.2196699 * G / (2 * R);
  std::vector<double> proj(G, 0.0);
  for (std::uint32_t y = 0; y < G; ++y)
    for (std::uint32_t x = 0; x < G; ++x) proj[x] += mask.at(y, x);
  double best_u = 0, best = 1e300;
  for (double u = 0.5 * predicted; u < 1.5 * predicted; u += 1e-4) {
    const double p = oracle::projected_power(proj, u, G);
    if (p < best) best = p, best_u = u;
  }
  const std::uint32_t c = G / 2;
  double sample_err = 0;
  for (std::uint32_t k = 0; k < 8; ++k)
    sample_err = std::max(sample_err, std::fabs(psf.at(c, c + k) - oracle::projected_power(proj, k, G)) / psf.at(c, c));
  const double full_err = std::fabs(best_u / predicted - 1);

  // A smaller explicit disk on the same grid resolves the zero on FFT
  // samples directly (zero near 19.5 cells).
  const double r2 = 64.0;
  std::vector<float> small = oracle::disk_mask(G, r2);
  const auto psf2 = wo::monochromatic_psf(ap::ApertureMask{G, std::move(small)}, wo::defocus_phase(G, 0.0, 550.0));
  const double predicted2 = 1.2196699 * G / (2 * r2);
  const double small_err = std::fabs(refined_axis_minimum(psf2) / predicted2 - 1);

  const double secs = seconds_since(t0);
  return {full_err <= 0.02 && small_err <= 0.02 && sample_err <= 1e-9 && secs < 10,
          fmt("disk r=%.1f: scan min %.4f vs %.4f (%.2f%%), samples rel err %.2g; r=64: %.2f%%; %.1f s", R, best_u,
              predicted, 100 * full_err, sample_err, 100 * small_err, secs)};
}

// Phase-ramp oracle for one wavelength, cropped to the sensor window.
std::vector<double> ramped_plane(const ap::ApertureMask& m, double phase_scale, int sx, int sy, std::uint32_t w,
                                 std::uint32_t h) {
  const std::size_t G = m.grid_size;
  const double R = ap::disk_radius_cells(m.grid_size);
  std::vector<oracle::cd> pupil(G * G);
  double energy = 0;
  for (std::size_t y = 0; y < G; ++y)
    for (std::size_t x = 0; x < G; ++x) {
      const double a = m.values[y * G + x];
      energy += a * a;
      const double dx = x - G / 2.0, dy = y - G / 2.0;
      const double phi = phase_scale * (dx * dx + dy * dy) / (R * R) +
                         2 * std::numbers::pi * (static_cast<double>(sx) * x + static_cast<double>(sy) * y) / G;
      pupil[y * G + x] = std::polar(a, phi);
    }
  const auto p = oracle::power_spectrum(pupil, G);
  std::vector<double> out(std::size_t{w} * h);
  for (std::uint32_t py = 0; py < h; ++py)
    for (std::uint32_t px = 0; px < w; ++px) {
      const long ky = ((static_cast<long>(py) - h / 2) % long(G) + long(G)) % long(G);
      const long kx = ((static_cast<long>(px) - w / 2) % long(G) + long(G)) % long(G);
      out[std::size_t{py} * w + px] = p[ky * G + kx] / (double(G) * G * energy);
    }
  return out;
}

Outcome shift_theorem() {
  const std::uint32_t G = 64, W = 48, H = 40;
  flare::Rng rng(77);
  double worst = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto mask = ap::rasterize_aperture(ap::sample_aperture_spec(rng(), ap::ApertureConfig::desk()), G);
    const auto srf = wo::sample_srf(rng());
    wo::SpectralConfig cfg;
    cfg.lambdas_nm = {430.0, 550.0, 650.0};
    wo::SRF sub;
    for (int c = 0; c < 3; ++c) sub.rows[c] = {srf(c, 10), srf(c, 34), srf(c, 54)};
    const int sx = static_cast<int>(std::floor(flare::uniform(rng, -20, 21)));
    const int sy = static_cast<int>(std::floor(flare::uniform(rng, -20, 21)));
    const double wm = flare::normal(rng, 0, wo::kDefocusSigmaNm);
    const auto img = wo::spectral_psf(mask, {double(sx), double(sy), wm}, sub, cfg, W, H);
    std::array<std::vector<double>, 3> ref;
    for (auto& r : ref) r.assign(std::size_t{W} * H, 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
      const auto plane = ramped_plane(mask, wo::wavenumber(cfg.lambdas_nm[j]) * wm, sx, sy, W, H);
      for (int c = 0; c < 3; ++c)
        for (std::size_t p = 0; p < plane.size(); ++p) ref[c][p] += sub(c, j) * plane[p];
    }
    for (std::uint32_t y = 0; y < H; ++y)
      for (std::uint32_t x = 0; x < W; ++x)
        for (int c = 0; c < 3; ++c)
          worst = std::max(worst, std::fabs(img.at(x, y, c) - ref[c][std::size_t{y} * W + x]));
  }
  return {worst <= 1e-5, fmt("10 cases, max abs err %.3g", worst)};
}

Outcome distribution_audit() {
  const auto t0 = Clock::now();
  const auto cfg = ap::ApertureConfig::desk();
  double nd = 0, np = 0;
  bool nl_ok = true, mu_ok = true;
  const int N = 10000;
  for (int s = 0; s < N; ++s) {
    const auto spec = ap::sample_aperture_spec(flare::derive_seed(11, s), cfg);
    nd += spec.dots.size();
    np += spec.polylines.size();
    for (const auto& p : spec.polylines) {
      const auto nl = p.vertices.size() - 1;
      nl_ok &= nl >= 1 && nl <= 16;
    }
    const auto srf = wo::sample_srf(flare::derive_seed(12, s));
    mu_ok &= srf.mus[0] >= 620 && srf.mus[0] <= 640;
    mu_ok &= srf.mus[1] >= 540 && srf.mus[1] <= 560;
    mu_ok &= srf.mus[2] >= 460 && srf.mus[2] <= 480;
  }
  nd /= N;
  np /= N;
  const double secs = seconds_since(t0);
  return {std::fabs(nd - 30) <= 1 && std::fabs(np - 30) <= 1 && nl_ok && mu_ok && secs < 20,
          fmt("mean n_d %.3f, mean n_p %.3f, n_l in range %d, mu in range %d, %.1f s", nd, np, int(nl_ok), int(mu_ok),
              secs)};
}

Outcome composite_round_trip() {
  std::mt19937_64 rng(88);
  std::uniform_int_distribution<std::uint32_t> dim(8, 96);
  std::size_t checked = 0, bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::uint32_t w = dim(rng), h = dim(rng);
    const auto scene = oracle::random_image(w, h, 3, rng, 0.0, 0.6);
    const auto flare = oracle::random_image(w, h, 3, rng, 0.0, 0.4);
    const auto s = sy::composite(scene, flare, 0.0, trial);
    for (std::size_t i = 0; i < s.scene.size(); ++i) {
      ++checked;
      bad += (s.corrupted.data()[i] - s.flare.data()[i]) != s.scene.data()[i];
    }
  }
  return {bad == 0, fmt("100 samples, %zu of %zu samples differ", bad, checked)};
}

Outcome feathering() {
  const std::uint32_t N = 512;
  const int cx = 256, cy = 256;
  double worst_oracle = 0;
  std::size_t inside_bad = 0, ray_bad = 0, nonzero_tail = 0;
  for (double d : {10.0, 40.0, 100.0}) {
    LinearImage img(N, N, 3, 0.3f);
    const double r = d / 2;
    for (std::uint32_t y = 0; y < N; ++y)
      for (std::uint32_t x = 0; x < N; ++x)
        if (std::pow(int(x) - cx, 2) + std::pow(int(y) - cy, 2) <= r * r)
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = 1.0f;
    const auto mf = mb::feathered_saturation(img);
    const auto raw = mb::threshold_mask(img);
    const double od = mb::opening_diameter(N, N);
    const auto opened = oracle::brute_dilate(oracle::brute_erode(raw.values, N, N, od), N, N, od);
    std::size_t area = 0;
    for (auto v : opened) area += v;
    const double D = std::sqrt(4.0 * area / std::numbers::pi);
    const auto conv = oracle::disk_convolve(raw.values, N, N, D);
    for (std::size_t i = 0; i < conv.size(); ++i)
      worst_oracle = std::max(worst_oracle, std::fabs(mf.values[i] - std::min(1.0, 3 * conv[i])));
    for (std::size_t i = 0; i < raw.values.size(); ++i) inside_bad += raw.values[i] && mf.values[i] != 1.0f;
    // Rays from the center at 360 angles; consecutive distinct pixels along a
    // ray must never increase once outside the disk.
    for (int a = 0; a < 360; ++a) {
      const double th = a * std::numbers::pi / 180;
      float prev = 1.0f;
      long last = -1;
      for (double t = r; t < 250; t += 0.25) {
        const long x = std::lround(cx + t * std::cos(th)), y = std::lround(cy + t * std::sin(th));
        const long idx = y * N + x;
        if (idx == last) continue;
        last = idx;
        const float v = mf.values[idx];
        ray_bad += v > prev;
        prev = v;
      }
      nonzero_tail += prev != 0.0f;
    }
  }
  return {worst_oracle <= 1e-6 && inside_bad == 0 && ray_bad == 0 && nonzero_tail == 0,
          fmt("max |M_f - oracle| %.3g, disk pixels below 1: %zu, radial increases: %zu, rays not reaching 0: %zu",
              worst_oracle, inside_bad, ray_bad, nonzero_tail)};
}

Outcome loss_suite() {
  const ls::GaussianPyramidExtractor pyr;
  const auto weights = ls::unit_weights(pyr);
  std::mt19937_64 rng(99);
  const std::uint32_t W = 64, H = 48;
  const auto s = sy::composite(oracle::random_image(W, H, 3, rng, 0.0, 0.5), oracle::random_image(W, H, 3, rng, 0.0, 0.5),
                               0.0, 1);
  mb::SaturationMask mask(W, H);
  std::bernoulli_distribution bit(0.4);
  for (auto& v : mask.values) v = bit(rng);

  // Perfect prediction, with the true flare being the residual it implies.
  const auto true_flare = mb::flare_residual(s.corrupted, s.scene, mask);
  const double zero_unmasked =
      ls::total_loss(s.scene, s.corrupted, s.scene, s.flare, mb::SaturationMask(W, H), pyr, weights).total;
  const double zero_masked = ls::total_loss(s.scene, s.corrupted, s.scene, true_flare, mask, pyr, weights).total;

  // 1000 random masked pixels perturbed.
  std::vector<std::size_t> masked;
  for (std::size_t i = 0; i < mask.values.size(); ++i)
    if (mask.values[i]) masked.push_back(i);
  const auto pred = oracle::random_image(W, H, 3, rng);
  const double base = ls::total_loss(pred, s.corrupted, s.scene, s.flare, mask, pyr, weights).total;
  auto perturbed = pred;
  std::uniform_int_distribution<std::size_t> pick(0, masked.size() - 1);
  std::uniform_real_distribution<float> val(-3, 3);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t p = masked[pick(rng)];
    for (int c = 0; c < 3; ++c) perturbed.samples()[3 * p + c] = val(rng);
  }
  const double delta = ls::total_loss(perturbed, s.corrupted, s.scene, s.flare, mask, pyr, weights).total - base;

  // Identity extractor: perceptual == l1.
  const ls::IdentityExtractor id;
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const auto a = oracle::random_image(W, H, 3, rng), b = oracle::random_image(W, H, 3, rng);
    worst = std::max(worst, std::fabs(ls::perceptual(a, b, id, ls::unit_weights(id)) - ls::l1(a, b)));
  }
  return {zero_unmasked == 0 && zero_masked == 0 && delta == 0 && worst <= 1e-7,
          fmt("perfect %.3g/%.3g, perturbation delta %.3g, |perceptual - l1| %.3g", zero_unmasked, zero_masked, delta,
              worst)};
}

Outcome highres() {
  const std::uint32_t N = 2048;
  std::mt19937_64 rng(5);
  auto scene = oracle::smooth_image(N, N, rng, 0.05, 0.7);
  for (std::uint32_t y = 0; y < N; ++y)
    for (std::uint32_t x = 0; x < N; ++x)
      if (std::hypot(x - 700.0, y - 1100.0) <= 90)
        for (int c = 0; c < 3; ++c) scene.at(x, y, c) = 1.0f;
  LinearImage input = scene;
  for (float& v : input.samples()) v = std::min(1.0f, v + 0.2f);

  pl::OraclePredictor oracle_pred(flare::bilinear_resample(scene, 512, 512));
  const auto r = pl::remove_flare_highres_detailed(input, oracle_pred);
  long double se = 0;
  std::size_t n = 0;
  for (std::uint32_t y = 0; y < N; ++y)
    for (std::uint32_t x = 0; x < N; ++x) {
      if (r.feathered.at(x, y) != 0.0f) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = r.output.at(x, y, c) - scene.at(x, y, c);
        se += d * d;
        ++n;
      }
    }
  const double psnr = se == 0 ? 99.0 : 10 * std::log10(static_cast<double>(n / se));

  pl::IdentityPredictor id;
  const bool identity_exact = pl::remove_flare_highres(input, id) == input;
  return {psnr >= 60 && identity_exact && n > 0,
          fmt("oracle PSNR outside M_f %.2f dB over %zu samples, identity exact %d", psnr, n, int(identity_exact))};
}

int run_tool(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("'") + FLARE_TOOL + "' " + args + " >/dev/null 2>'" + log.string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream f(e.path(), std::ios::binary);
    out[fs::relative(e.path(), root).string()] = {std::istreambuf_iterator<char>(f), {}};
  }
  return out;
}

Outcome determinism(const fs::path& work) {
  const auto scenes = work / "scenes", sim = work / "sim", captured = work / "captured", log = work / "log.txt";
  fs::create_directories(scenes);
  fs::create_directories(captured);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 6; ++i)
    flare::write_png(scenes / ("scene" + std::to_string(i) + ".png"),
                     oracle::smooth_image(560 + 16 * i, 540 + 8 * i, rng, 0.0, 1.0));
  for (int i = 0; i < 3; ++i)
    flare::write_png(captured / ("cap" + std::to_string(i) + ".png"), oracle::random_image(300, 280, 3, rng, 0.0, 0.3));
  auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  if (run_tool("render-flare --count 4 --grid 512 --sensor 256 --bank-size 3 --seed 1 --no-preview --out " + q(sim),
               log) != 0)
    return {false, "render-flare failed"};
  const std::string common = "gen-dataset --count 20 --seed 3 --scenes " + q(scenes) + " --flares-sim " + q(sim) +
                             " --flares-captured " + q(captured);
  if (run_tool(common + " --jobs 1 --out " + q(work / "a"), log) != 0) return {false, "first run failed"};
  if (run_tool(common + " --jobs 4 --out " + q(work / "b"), log) != 0) return {false, "second run failed"};
  const auto a = tree_contents(work / "a"), b = tree_contents(work / "b");
  fs::remove_all(work / "a");
  fs::remove_all(work / "b");
  const bool same = a == b && a.size() >= 61;  // 3 tensors per sample plus the manifest
  return {same, fmt("%zu vs %zu files, identical %d (jobs 1 vs 4)", a.size(), b.size(), int(a == b))};
}

Outcome metrics_oracle() {
  std::mt19937_64 rng(123);
  double psnr_err = 0, ssim_err = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = oracle::smooth_image(64, 48, rng, 0.0, 1.0);
    auto b = a;
    std::normal_distribution<double> n(0, 0.02 * (trial + 1));
    for (float& v : b.samples()) v = std::clamp<float>(v + n(rng), 0, 1);
    psnr_err = std::max(psnr_err, std::fabs(pl::psnr(a, b) - oracle::psnr(a, b)));
    ssim_err = std::max(ssim_err, std::fabs(pl::ssim(a, b) - oracle::ssim(a, b)));
  }
  return {psnr_err <= 1e-6 && ssim_err <= 1e-4, fmt("20 pairs, psnr err %.3g dB, ssim err %.3g", psnr_err, ssim_err)};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / ("flare_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(work);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks = {
      {"parseval_energy", parseval},
      {"airy_first_minimum", airy},
      {"shift_theorem", shift_theorem},
      {"distribution_audit", distribution_audit},
      {"composite_round_trip", composite_round_trip},
      {"feathering_guarantee", feathering},
      {"loss_suite", loss_suite},
      {"highres_pipeline", highres},
      {"dataset_determinism", [&] { return determinism(work); }},
      {"metrics_oracle", metrics_oracle},
  };
  int failures = 0;
  for (const auto& [name, fn] : checks) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(work);
  return failures == 0 ? 0 : 1;
}

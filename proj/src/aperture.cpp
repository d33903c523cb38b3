#include "flare/aperture.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <thread>

#include "flare/error.hpp"
#include "flare/rng.hpp"

namespace flare::aperture {

namespace {

int sample_count(Rng& rng, double mean, double sd) {
  return std::max(0, static_cast<int>(std::lround(normal(rng, mean, sd))));
}

double sample_nonneg(Rng& rng, double mean, double sd) {
  return std::max(0.0, normal(rng, mean, sd));
}

double uniform_upto(Rng& rng, double hi) { return hi > 0.0 ? uniform(rng, 0.0, hi) : 0.0; }

Point sample_position(Rng& rng, double R, Placement placement) {
  for (;;) {
    Point p{uniform(rng, -R, R), uniform(rng, -R, R)};
    if (placement == Placement::kBoundingSquare || p.u * p.u + p.v * p.v < R * R) return p;
  }
}

}  // namespace

ApertureSpec sample_aperture_spec(std::uint64_t seed, const ApertureConfig& cfg) {
  Rng rng(seed);
  const double R = cfg.disk_radius_px;
  const double ls = cfg.length_scale();
  ApertureSpec spec;
  spec.disk_radius_px = R;

  const int n_dots = sample_count(rng, cfg.dot_count_mean, cfg.dot_count_sd);
  const double r_max = sample_nonneg(rng, cfg.dot_max_radius_mean * ls, cfg.dot_max_radius_sd * ls);
  spec.dots.reserve(n_dots);
  for (int i = 0; i < n_dots; ++i) {
    Dot d;
    d.center = sample_position(rng, R, cfg.placement);
    d.radius = uniform_upto(rng, r_max);
    d.opacity = uniform(rng, 0.0, 1.0);
    spec.dots.push_back(d);
  }

  const int n_lines = sample_count(rng, cfg.polyline_count_mean, cfg.polyline_count_sd);
  const double w_max = sample_nonneg(rng, cfg.max_width_mean * ls, cfg.max_width_sd * ls);
  const double step = cfg.step_fraction * R;
  spec.polylines.reserve(n_lines);
  for (int i = 0; i < n_lines; ++i) {
    Polyline p;
    const int segments = std::uniform_int_distribution<int>(cfg.segments_min, cfg.segments_max)(rng);
    Point v = sample_position(rng, R, cfg.placement);
    p.vertices.push_back(v);
    for (int s = 0; s < segments; ++s) {
      v.u += uniform(rng, -step, step);
      v.v += uniform(rng, -step, step);
      p.vertices.push_back(v);
    }
    p.width = uniform_upto(rng, w_max);
    p.opacity = uniform(rng, 0.0, 1.0);
    spec.polylines.push_back(std::move(p));
  }
  return spec;
}

double ApertureMask::energy() const {
  double e = 0.0;
  for (float v : values) e += static_cast<double>(v) * v;
  return e;
}

void validate_mask(const ApertureMask& mask) {
  if (mask.grid_size == 0 || !std::has_single_bit(mask.grid_size)) {
    throw ParameterError("aperture grid size must be a power of two");
  }
  if (mask.values.size() != std::size_t{mask.grid_size} * mask.grid_size) {
    throw ParameterError("aperture mask values do not match grid size");
  }
}

namespace {

// Subsample k of a cell sits at offset (kOff[k & 1], kOff[k >> 1]) from the
// cell center.
constexpr double kOff[2] = {-0.25, 0.25};

struct Band {
  std::uint32_t row0;
  std::uint32_t row1;
};

struct ScaledSegment {
  double ax, ay, bx, by;
};

double segment_dist2(const ScaledSegment& s, double x, double y) {
  const double dx = s.bx - s.ax, dy = s.by - s.ay;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((x - s.ax) * dx + (y - s.ay) * dy) / len2, 0.0, 1.0);
  const double px = s.ax + t * dx - x, py = s.ay + t * dy - y;
  return px * px + py * py;
}

class Rasterizer {
 public:
  Rasterizer(const ApertureSpec& spec, std::uint32_t grid) : spec_(spec), grid_(grid) {
    scale_ = grid / (2.0 * spec.disk_radius_px * kApertureMargin);
    half_ = grid / 2.0;
  }

  void run(Band band, std::vector<float>& out) const {
    const std::uint32_t rows = band.row1 - band.row0;
    std::vector<float> sub(std::size_t{rows} * grid_ * 4);
    const double rdisk = spec_.disk_radius_px * scale_;
    const double rdisk2 = rdisk * rdisk;

    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < grid_; ++j) {
        for (int k = 0; k < 4; ++k) {
          const double x = j - half_ + kOff[k & 1];
          const double y = band.row0 + i - half_ + kOff[k >> 1];
          sub[(std::size_t{i} * grid_ + j) * 4 + k] = x * x + y * y < rdisk2 ? 1.0f : 0.0f;
        }
      }
    }

    for (const Dot& d : spec_.dots) apply_dot(d, band, sub);
    std::vector<std::uint8_t> hits(sub.size(), 0);
    for (const Polyline& p : spec_.polylines) apply_polyline(p, band, sub, hits);

    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < grid_; ++j) {
        const float* s = &sub[(std::size_t{i} * grid_ + j) * 4];
        const double mean = (double{s[0]} + s[1] + s[2] + s[3]) / 4.0;
        out[std::size_t{band.row0 + i} * grid_ + j] = static_cast<float>(mean);
      }
    }
  }

 private:
  // Cell index range [lo, hi) whose subsamples may fall within `reach` of `c`.
  std::pair<std::int64_t, std::int64_t> span(double c, double reach, std::int64_t lo,
                                             std::int64_t hi) const {
    const auto a = static_cast<std::int64_t>(std::floor(c + half_ - reach - 1.0));
    const auto b = static_cast<std::int64_t>(std::ceil(c + half_ + reach + 1.0)) + 1;
    return {std::clamp(a, lo, hi), std::clamp(b, lo, hi)};
  }

  void apply_dot(const Dot& d, Band band, std::vector<float>& sub) const {
    if (d.radius <= 0.0 || d.opacity <= 0.0) return;
    const double cx = d.center.u * scale_, cy = d.center.v * scale_, r = d.radius * scale_;
    const double r2 = r * r;
    const float keep = static_cast<float>(1.0 - d.opacity);
    auto [r0, r1] = span(cy, r, band.row0, band.row1);
    auto [c0, c1] = span(cx, r, 0, grid_);
    for (auto row = r0; row < r1; ++row) {
      for (auto col = c0; col < c1; ++col) {
        for (int k = 0; k < 4; ++k) {
          const double x = col - half_ + kOff[k & 1] - cx;
          const double y = row - half_ + kOff[k >> 1] - cy;
          if (x * x + y * y < r2) {
            sub[(static_cast<std::size_t>(row - band.row0) * grid_ + col) * 4 + k] *= keep;
          }
        }
      }
    }
  }

  void apply_polyline(const Polyline& p, Band band, std::vector<float>& sub,
                      std::vector<std::uint8_t>& hits) const {
    if (p.width <= 0.0 || p.opacity <= 0.0 || p.vertices.size() < 2) return;
    const double hw = 0.5 * p.width * scale_;
    const double hw2 = hw * hw;
    std::int64_t br0 = band.row1, br1 = band.row0, bc0 = grid_, bc1 = 0;

    for (std::size_t s = 0; s + 1 < p.vertices.size(); ++s) {
      const ScaledSegment seg{p.vertices[s].u * scale_, p.vertices[s].v * scale_,
                              p.vertices[s + 1].u * scale_, p.vertices[s + 1].v * scale_};
      const double ymin = std::min(seg.ay, seg.by), ymax = std::max(seg.ay, seg.by);
      const double xmin = std::min(seg.ax, seg.bx), xmax = std::max(seg.ax, seg.bx);
      auto [r0, r1a] = span(ymin, hw, band.row0, band.row1);
      auto [r0b, r1] = span(ymax, hw, band.row0, band.row1);
      auto [c0, c1a] = span(xmin, hw, 0, grid_);
      auto [c0b, c1] = span(xmax, hw, 0, grid_);
      if (r0 >= r1 || c0 >= c1) continue;
      br0 = std::min(br0, r0);
      br1 = std::max(br1, r1);
      bc0 = std::min(bc0, c0);
      bc1 = std::max(bc1, c1);
      for (auto row = r0; row < r1; ++row) {
        for (auto col = c0; col < c1; ++col) {
          for (int k = 0; k < 4; ++k) {
            const double x = col - half_ + kOff[k & 1];
            const double y = row - half_ + kOff[k >> 1];
            if (segment_dist2(seg, x, y) < hw2) {
              hits[(static_cast<std::size_t>(row - band.row0) * grid_ + col) * 4 + k] = 1;
            }
          }
        }
      }
    }

    // A polyline is a single defect: each covered subsample is attenuated
    // once even where its segments overlap.
    const float keep = static_cast<float>(1.0 - p.opacity);
    for (auto row = br0; row < br1; ++row) {
      for (auto col = bc0; col < bc1; ++col) {
        const std::size_t base = (static_cast<std::size_t>(row - band.row0) * grid_ + col) * 4;
        for (int k = 0; k < 4; ++k) {
          if (hits[base + k]) {
            sub[base + k] *= keep;
            hits[base + k] = 0;
          }
        }
      }
    }
  }

  const ApertureSpec& spec_;
  std::uint32_t grid_;
  double scale_;
  double half_;
};

}  // namespace

ApertureMask rasterize_aperture(const ApertureSpec& spec, std::uint32_t grid_size, unsigned jobs) {
  if (grid_size < kMinApertureGrid) {
    throw ParameterError("aperture grid must be >= " + std::to_string(kMinApertureGrid));
  }
  if (!std::has_single_bit(grid_size)) throw ParameterError("aperture grid must be a power of two");
  if (!(spec.disk_radius_px > 0.0)) throw ParameterError("disk radius must be positive");

  ApertureMask mask{grid_size, std::vector<float>(std::size_t{grid_size} * grid_size, 0.0f)};
  const Rasterizer raster(spec, grid_size);
  constexpr std::uint32_t kBandRows = 64;
  std::vector<Band> bands;
  for (std::uint32_t r = 0; r < grid_size; r += kBandRows) {
    bands.push_back({r, std::min(grid_size, r + kBandRows)});
  }

  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(bands.size())));
  if (jobs == 1) {
    for (const Band& b : bands) raster.run(b, mask.values);
  } else {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t b = w; b < bands.size(); b += jobs) raster.run(bands[b], mask.values);
      });
    }
  }
  return mask;
}

void to_json(nlohmann::json& j, const ApertureSpec& spec) {
  j = nlohmann::json::object();
  j["disk_radius_px"] = spec.disk_radius_px;
  auto& dots = j["dots"] = nlohmann::json::array();
  for (const Dot& d : spec.dots) {
    dots.push_back({{"center", {d.center.u, d.center.v}}, {"radius", d.radius}, {"opacity", d.opacity}});
  }
  auto& lines = j["polylines"] = nlohmann::json::array();
  for (const Polyline& p : spec.polylines) {
    nlohmann::json verts = nlohmann::json::array();
    for (const Point& v : p.vertices) verts.push_back({v.u, v.v});
    lines.push_back({{"vertices", verts}, {"width", p.width}, {"opacity", p.opacity}});
  }
}

void from_json(const nlohmann::json& j, ApertureSpec& spec) {
  spec = ApertureSpec{};
  spec.disk_radius_px = j.at("disk_radius_px").get<double>();
  for (const auto& d : j.at("dots")) {
    spec.dots.push_back({{d.at("center").at(0).get<double>(), d.at("center").at(1).get<double>()},
                         d.at("radius").get<double>(),
                         d.at("opacity").get<double>()});
  }
  for (const auto& p : j.at("polylines")) {
    Polyline line;
    for (const auto& v : p.at("vertices")) line.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    line.width = p.at("width").get<double>();
    line.opacity = p.at("opacity").get<double>();
    spec.polylines.push_back(std::move(line));
  }
  auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
  if (bad(spec.disk_radius_px) || spec.disk_radius_px == 0.0) {
    throw ParameterError("aperture spec: disk radius must be positive");
  }
  for (const Dot& d : spec.dots) {
    if (bad(d.radius) || bad(d.opacity) || d.opacity > 1.0) {
      throw ParameterError("aperture spec: dot radius/opacity out of range");
    }
  }
  for (const Polyline& p : spec.polylines) {
    if (bad(p.width) || bad(p.opacity) || p.opacity > 1.0) {
      throw ParameterError("aperture spec: polyline width/opacity out of range");
    }
  }
}

}  // namespace flare::aperture

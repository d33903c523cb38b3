#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

namespace flare::aperture {

struct Point {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Dot {
  Point center;
  double radius = 0.0;
  double opacity = 0.0;
  friend bool operator==(const Dot&, const Dot&) = default;
};

struct Polyline {
  std::vector<Point> vertices;
  double width = 0.0;
  double opacity = 0.0;
  friend bool operator==(const Polyline&, const Polyline&) = default;
};

/// Parametric dirty aperture. Coordinates are in aperture pixels relative to
/// the disk center.
struct ApertureSpec {
  double disk_radius_px = 3000.0;
  std::vector<Dot> dots;
  std::vector<Polyline> polylines;
  friend bool operator==(const ApertureSpec&, const ApertureSpec&) = default;
};

enum class Placement { kBoundingSquare, kDisk };

/// Sampling distributions for dust dots and scratch polylines. The length
/// parameters are stated for a disk of `reference_radius_px` and scale
/// linearly with `disk_radius_px`.
struct ApertureConfig {
  double disk_radius_px = 3000.0;
  double reference_radius_px = 3000.0;

  double dot_count_mean = 30.0;
  double dot_count_sd = 5.0;
  double dot_max_radius_mean = 100.0;
  double dot_max_radius_sd = 50.0;

  double polyline_count_mean = 30.0;
  double polyline_count_sd = 5.0;
  int segments_min = 1;
  int segments_max = 16;
  double max_width_mean = 20.0;
  double max_width_sd = 5.0;
  /// Each subsequent vertex steps by U(-f*R, f*R) per axis.
  double step_fraction = 0.5;

  Placement placement = Placement::kBoundingSquare;

  static ApertureConfig paper() { return {}; }
  static ApertureConfig desk() {
    ApertureConfig c;
    c.disk_radius_px = 750.0;
    return c;
  }
  double length_scale() const { return disk_radius_px / reference_radius_px; }
};

ApertureSpec sample_aperture_spec(std::uint64_t seed, const ApertureConfig& cfg = {});

/// The disk occupies 1/margin of the grid's half-width.
inline constexpr double kApertureMargin = 1.1;
inline constexpr std::uint32_t kMinApertureGrid = 64;

/// Disk radius in grid cells for a given grid size.
constexpr double disk_radius_cells(std::uint32_t grid_size) {
  return grid_size / (2.0 * kApertureMargin);
}

/// Square transmission grid in [0, 1]; the disk center sits at cell
/// (grid/2, grid/2).
struct ApertureMask {
  std::uint32_t grid_size = 0;
  std::vector<float> values;

  float at(std::uint32_t row, std::uint32_t col) const { return values[std::size_t{row} * grid_size + col]; }
  /// Sum of squared transmission.
  double energy() const;
};

/// Throws ParameterError unless `mask` is a square power-of-two grid.
void validate_mask(const ApertureMask& mask);

/// Rasterizes the disk and its defects with 2x2 supersampling. Each defect
/// scales the transmission of the subsamples it covers by (1 - opacity).
ApertureMask rasterize_aperture(const ApertureSpec& spec, std::uint32_t grid_size,
                                unsigned jobs = 1);

void to_json(nlohmann::json& j, const ApertureSpec& spec);
void from_json(const nlohmann::json& j, ApertureSpec& spec);

}  // namespace flare::aperture

#pragma once

#include <filesystem>

#include "flare/image.hpp"

namespace flare {

/// Decodes an 8- or 16-bit PNG into encoded [0, 1] samples. Gray and alpha
/// variants are expanded to RGB.
LinearImage read_png(const std::filesystem::path& path);

enum class PngDepth { k8 = 8, k16 = 16 };

/// Writes encoded samples (clipped to [0, 1], rounded to the bit depth).
/// 1- and 3-channel images are supported.
void write_png(const std::filesystem::path& path, const LinearImage& encoded,
               PngDepth depth = PngDepth::k8);

inline constexpr double kDefaultGamma = 2.2;

/// Reads a PNG and linearizes it with `gamma`.
LinearImage load_png_linear(const std::filesystem::path& path, double gamma = kDefaultGamma);
/// Delinearizes with `gamma` and writes a PNG.
void save_png_linear(const std::filesystem::path& path, const LinearImage& linear,
                     double gamma = kDefaultGamma, PngDepth depth = PngDepth::k8);

/// Loads `.flt` tensors as-is and `.png` files linearized with `gamma`.
LinearImage load_image_any(const std::filesystem::path& path, double gamma = kDefaultGamma);
void save_image_any(const std::filesystem::path& path, const LinearImage& linear,
                    double gamma = kDefaultGamma);

}  // namespace flare

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "flare/image.hpp"

namespace flare {

/// N-dimensional float32 tensor, row-major.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::uint64_t element_count() const;
};

// TensorFile layout (little-endian):
//   "FLT1" | u32 ndim | u32 dims[ndim] | f32 payload[prod(dims)]
inline constexpr char kTensorMagic[4] = {'F', 'L', 'T', '1'};
inline constexpr std::uint32_t kMaxTensorDims = 8;

std::vector<char> encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::vector<char>& bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

/// Images are stored as (height, width, channels); rank-2 tensors load as
/// single-channel images.
Tensor to_tensor(const LinearImage& img);
LinearImage image_from_tensor(Tensor t);

void write_image_tensor(const std::filesystem::path& path, const LinearImage& img);
LinearImage read_image_tensor(const std::filesystem::path& path);

/// Writes `bytes` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& bytes);

}  // namespace flare

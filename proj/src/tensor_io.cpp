#include "flare/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "flare/error.hpp"

namespace flare {

namespace {

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::vector<char>& in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::uint64_t Tensor::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<char> encode_tensor(const Tensor& t) {
  if (t.dims.empty() || t.dims.size() > kMaxTensorDims) {
    throw ParameterError("tensor must have 1.." + std::to_string(kMaxTensorDims) + " dims");
  }
  if (t.element_count() != t.data.size()) {
    throw ParameterError("tensor data length does not match dims");
  }
  std::vector<char> out;
  out.reserve(8 + 4 * t.dims.size() + 4 * t.data.size());
  out.insert(out.end(), kTensorMagic, kTensorMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  for (float f : t.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode_tensor(const std::vector<char>& bytes) {
  if (bytes.size() < 8) throw FormatError("truncated TensorFile header", bytes.size());
  if (std::memcmp(bytes.data(), kTensorMagic, 4) != 0) throw FormatError("bad TensorFile magic", 0);
  const std::uint32_t ndim = get_u32(bytes, 4);
  if (ndim == 0 || ndim > kMaxTensorDims) {
    throw FormatError("unsupported TensorFile rank " + std::to_string(ndim), 4);
  }
  const std::size_t header = 8 + 4 * std::size_t{ndim};
  if (bytes.size() < header) throw FormatError("truncated TensorFile dims", bytes.size());

  Tensor t;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    const std::uint32_t d = get_u32(bytes, 8 + 4 * i);
    if (d != 0 && count > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
      throw FormatError("TensorFile dims overflow", 8 + 4 * i);
    }
    count *= d;
    t.dims.push_back(d);
  }
  const std::uint64_t payload = 4 * count;
  if (bytes.size() - header < payload) {
    throw FormatError("truncated TensorFile payload: expected " + std::to_string(payload) +
                          " bytes",
                      bytes.size());
  }
  if (bytes.size() - header > payload) {
    throw FormatError("trailing bytes after TensorFile payload", header + payload);
  }
  t.data.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    t.data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
  }
  return t;
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& bytes) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  write_file_atomic(path, std::vector<char>(bytes.begin(), bytes.end()));
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file_atomic(path, encode_tensor(t));
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_tensor(bytes);
}

Tensor to_tensor(const LinearImage& img) {
  return Tensor{{img.height(), img.width(), img.channels()}, img.data()};
}

LinearImage image_from_tensor(Tensor t) {
  if (t.dims.size() == 2) t.dims.push_back(1);
  if (t.dims.size() != 3) throw FormatError("image tensor must be (height, width, channels)", 4);
  if (t.dims[2] != 1 && t.dims[2] != 3) throw FormatError("image tensor must have 1 or 3 channels", 16);
  return LinearImage(t.dims[1], t.dims[0], t.dims[2], std::move(t.data));
}

void write_image_tensor(const std::filesystem::path& path, const LinearImage& img) {
  write_tensor(path, to_tensor(img));
}

LinearImage read_image_tensor(const std::filesystem::path& path) {
  return image_from_tensor(read_tensor(path));
}

}  // namespace flare

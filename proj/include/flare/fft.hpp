#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace flare {

/// Square complex buffer with FFT-friendly alignment.
class ComplexGrid {
 public:
  explicit ComplexGrid(std::size_t size);
  ~ComplexGrid();
  ComplexGrid(ComplexGrid&&) noexcept;
  ComplexGrid& operator=(ComplexGrid&&) noexcept;
  ComplexGrid(const ComplexGrid&) = delete;
  ComplexGrid& operator=(const ComplexGrid&) = delete;

  std::size_t size() const noexcept { return size_; }
  std::complex<double>* data() noexcept { return data_; }
  const std::complex<double>* data() const noexcept { return data_; }
  std::span<std::complex<double>> values() noexcept { return {data_, size_ * size_}; }
  std::complex<double>& operator()(std::size_t row, std::size_t col) noexcept {
    return data_[row * size_ + col];
  }

 private:
  std::size_t size_ = 0;
  std::complex<double>* data_ = nullptr;
};

/// In-place unnormalized forward 2D DFT,
///   X[k,l] = sum_{m,n} x[m,n] exp(-2 pi i (k m + l n) / N).
/// Safe to call concurrently on distinct grids; plans are cached per size.
void fft2d_forward(ComplexGrid& grid);

}  // namespace flare

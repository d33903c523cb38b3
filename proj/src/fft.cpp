#include "flare/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace flare {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Plans use FFTW_ESTIMATE so the chosen algorithm, and hence every output
// bit, does not depend on timing measurements.
fftw_plan plan_for(std::size_t n, ComplexGrid& sample) {
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard lock(planner_mutex());
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  auto* p = reinterpret_cast<fftw_complex*>(sample.data());
  fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), p, p, FFTW_FORWARD,
                                    FFTW_ESTIMATE);
  plans.emplace(n, plan);
  return plan;
}

}  // namespace

ComplexGrid::ComplexGrid(std::size_t size) : size_(size) {
  data_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * size * size));
  if (data_ == nullptr) throw std::bad_alloc();
  std::fill(data_, data_ + size * size, std::complex<double>{});
}

ComplexGrid::~ComplexGrid() {
  if (data_ != nullptr) fftw_free(data_);
}

ComplexGrid::ComplexGrid(ComplexGrid&& other) noexcept
    : size_(other.size_), data_(std::exchange(other.data_, nullptr)) {}

ComplexGrid& ComplexGrid::operator=(ComplexGrid&& other) noexcept {
  if (this != &other) {
    if (data_ != nullptr) fftw_free(data_);
    size_ = other.size_;
    data_ = std::exchange(other.data_, nullptr);
  }
  return *this;
}

void fft2d_forward(ComplexGrid& grid) {
  fftw_plan plan = plan_for(grid.size(), grid);
  auto* p = reinterpret_cast<fftw_complex*>(grid.data());
  fftw_execute_dft(plan, p, p);
}

}  // namespace flare

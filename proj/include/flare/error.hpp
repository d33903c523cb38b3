#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace flare {

/// Invalid argument or violated precondition.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed on-disk or on-wire data. `offset` is the byte position at which
/// decoding failed; for truncated input, the end of the available data.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by predictors on protocol failure, timeout or shape violation.
class PredictionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flare

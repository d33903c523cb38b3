#pragma once

#include <chrono>
#include <functional>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flare/image.hpp"

namespace flare::pipeline {

/// Flare-free image estimator f(I_F).
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual LinearImage predict(const LinearImage& input) = 0;
};

/// Returns the input unchanged.
class IdentityPredictor final : public Predictor {
 public:
  LinearImage predict(const LinearImage& input) override { return input; }
};

/// Test predictor that answers with a fixed ground-truth image.
class OraclePredictor final : public Predictor {
 public:
  explicit OraclePredictor(LinearImage truth) : truth_(std::move(truth)) {}
  LinearImage predict(const LinearImage& input) override;

 private:
  LinearImage truth_;
};

/// Validates the input, runs the predictor and enforces the output contract
/// (same shape, finite). Failures surface as PredictionError.
LinearImage predict(Predictor& p, const LinearImage& input);

// ---------------------------------------------------------------------------
// Wire protocol. Every frame starts with a 17-byte little-endian header:
//   "FLR1" | u8 kind | u32 width | u32 height | u32 channels
// Request and response frames carry width*height*channels float32 samples,
// row-major and channel-interleaved. Error frames carry a UTF-8 message of
// `width` bytes with height = channels = 1.

enum class FrameKind : std::uint8_t { kRequest = 0, kResponse = 1, kError = 2 };

inline constexpr char kFrameMagic[4] = {'F', 'L', 'R', '1'};
inline constexpr std::size_t kFrameHeaderBytes = 17;
/// Upper bound on a single frame payload (256 MiB).
inline constexpr std::uint64_t kMaxFramePayload = 256ull << 20;

struct Frame {
  FrameKind kind = FrameKind::kRequest;
  LinearImage image;
  std::string message;
};

struct FrameHeader {
  char magic[4]{};
  std::uint8_t kind = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 0;

  bool magic_ok() const;
  /// Payload size in bytes implied by the header.
  std::uint64_t payload_bytes() const;
};

std::vector<char> encode_frame(FrameKind kind, const LinearImage& img);
std::vector<char> encode_error_frame(std::string_view message);

FrameHeader decode_header(const char* bytes);
/// Decodes one complete frame; throws FormatError on malformed input.
Frame decode_frame(const std::vector<char>& bytes);

/// Blocking I/O on file descriptors. `read_frame` returns nullopt on EOF
/// before any header byte; a negative timeout waits forever.
std::optional<Frame> read_frame(int fd, int timeout_ms = -1);
void write_frame(int fd, const std::vector<char>& bytes, int timeout_ms = -1);

/// Serves requests from `in_fd` until EOF. Malformed frames are answered
/// with an error frame and the loop continues when the stream can be
/// resynchronized. Returns the number of error frames sent.
std::size_t serve_frames(int in_fd, int out_fd,
                         const std::function<LinearImage(const LinearImage&)>& handler);

/// Predictor backed by a child process (`/bin/sh -c command`) speaking the
/// frame protocol on its stdin/stdout. One request in flight at a time.
class SubprocessPredictor final : public Predictor {
 public:
  explicit SubprocessPredictor(const std::string& command,
                               std::chrono::milliseconds timeout = std::chrono::seconds(120));
  ~SubprocessPredictor() override;
  SubprocessPredictor(const SubprocessPredictor&) = delete;
  SubprocessPredictor& operator=(const SubprocessPredictor&) = delete;

  LinearImage predict(const LinearImage& input) override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::chrono::milliseconds timeout_;
};

}  // namespace flare::pipeline

#include "flare/predictor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>

#include "flare/error.hpp"

namespace flare::pipeline {

LinearImage OraclePredictor::predict(const LinearImage& input) {
  if (!input.same_shape(truth_)) throw PredictionError("oracle predictor: input shape differs from truth");
  return truth_;
}

LinearImage predict(Predictor& p, const LinearImage& input) {
  if (input.empty() || input.channels() != 3) throw PredictionError("predictor input must be RGB");
  if (!input.all_finite()) throw PredictionError("predictor input contains non-finite samples");
  LinearImage out = p.predict(input);
  if (!out.same_shape(input)) throw PredictionError("predictor returned a different shape");
  if (!out.all_finite()) throw PredictionError("predictor returned non-finite samples");
  return out;
}

namespace {

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

std::vector<char> header(FrameKind kind, std::uint32_t w, std::uint32_t h, std::uint32_t c) {
  std::vector<char> out(kFrameMagic, kFrameMagic + 4);
  out.push_back(static_cast<char>(kind));
  put_u32(out, w);
  put_u32(out, h);
  put_u32(out, c);
  return out;
}

}  // namespace

bool FrameHeader::magic_ok() const { return std::memcmp(magic, kFrameMagic, 4) == 0; }

std::uint64_t FrameHeader::payload_bytes() const {
  if (kind == static_cast<std::uint8_t>(FrameKind::kError)) return width;
  return 4ull * width * height * channels;
}

std::vector<char> encode_frame(FrameKind kind, const LinearImage& img) {
  if (kind == FrameKind::kError) throw ParameterError("use encode_error_frame for error frames");
  auto out = header(kind, img.width(), img.height(), img.channels());
  out.reserve(kFrameHeaderBytes + 4 * img.size());
  for (float f : img.samples()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

std::vector<char> encode_error_frame(std::string_view message) {
  auto out = header(FrameKind::kError, static_cast<std::uint32_t>(message.size()), 1, 1);
  out.insert(out.end(), message.begin(), message.end());
  return out;
}

FrameHeader decode_header(const char* bytes) {
  FrameHeader h;
  std::memcpy(h.magic, bytes, 4);
  h.kind = static_cast<std::uint8_t>(bytes[4]);
  h.width = get_u32(bytes + 5);
  h.height = get_u32(bytes + 9);
  h.channels = get_u32(bytes + 13);
  return h;
}

namespace {

Frame frame_from(const FrameHeader& h, const char* payload) {
  if (!h.magic_ok()) throw FormatError("bad frame magic", 0);
  if (h.kind > 2) throw FormatError("unknown frame kind " + std::to_string(h.kind), 4);
  Frame f;
  f.kind = static_cast<FrameKind>(h.kind);
  if (f.kind == FrameKind::kError) {
    f.message.assign(payload, h.width);
    return f;
  }
  if (h.width == 0 || h.height == 0 || (h.channels != 1 && h.channels != 3)) {
    throw FormatError("invalid frame dimensions", 5);
  }
  std::vector<float> data(std::size_t{h.width} * h.height * h.channels);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::bit_cast<float>(get_u32(payload + 4 * i));
  f.image = LinearImage(h.width, h.height, h.channels, std::move(data));
  return f;
}

void check_payload(const FrameHeader& h) {
  if (h.payload_bytes() > kMaxFramePayload) throw FormatError("frame payload too large", 5);
}

}  // namespace

Frame decode_frame(const std::vector<char>& bytes) {
  if (bytes.size() < kFrameHeaderBytes) throw FormatError("truncated frame header", bytes.size());
  const FrameHeader h = decode_header(bytes.data());
  if (!h.magic_ok()) throw FormatError("bad frame magic", 0);
  check_payload(h);
  if (bytes.size() != kFrameHeaderBytes + h.payload_bytes()) {
    throw FormatError("frame length does not match header", std::min<std::uint64_t>(bytes.size(), kFrameHeaderBytes + h.payload_bytes()));
  }
  return frame_from(h, bytes.data() + kFrameHeaderBytes);
}

namespace {

// Reads exactly n bytes. Returns the count read before EOF.
std::size_t read_exact(int fd, char* buf, std::size_t n, int timeout_ms) {
  std::size_t got = 0;
  while (got < n) {
    if (timeout_ms >= 0) {
      pollfd pfd{fd, POLLIN, 0};
      const int r = ::poll(&pfd, 1, timeout_ms);
      if (r == 0) throw PredictionError("timed out waiting for predictor");
      if (r < 0) {
        if (errno == EINTR) continue;
        throw PredictionError(std::string("poll failed: ") + std::strerror(errno));
      }
    }
    const ssize_t k = ::read(fd, buf + got, n - got);
    if (k == 0) return got;
    if (k < 0) {
      if (errno == EINTR) continue;
      throw PredictionError(std::string("read failed: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(k);
  }
  return got;
}

}  // namespace

std::optional<Frame> read_frame(int fd, int timeout_ms) {
  char hdr[kFrameHeaderBytes];
  const std::size_t got = read_exact(fd, hdr, kFrameHeaderBytes, timeout_ms);
  if (got == 0) return std::nullopt;
  if (got < kFrameHeaderBytes) throw FormatError("truncated frame header", got);
  const FrameHeader h = decode_header(hdr);
  if (!h.magic_ok()) throw FormatError("bad frame magic", 0);
  check_payload(h);
  std::vector<char> payload(h.payload_bytes());
  if (read_exact(fd, payload.data(), payload.size(), timeout_ms) != payload.size()) {
    throw FormatError("truncated frame payload", kFrameHeaderBytes);
  }
  return frame_from(h, payload.data());
}

void write_frame(int fd, const std::vector<char>& bytes, int timeout_ms) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    if (timeout_ms >= 0) {
      pollfd pfd{fd, POLLOUT, 0};
      const int r = ::poll(&pfd, 1, timeout_ms);
      if (r == 0) throw PredictionError("timed out writing to predictor");
      if (r < 0) {
        if (errno == EINTR) continue;
        throw PredictionError(std::string("poll failed: ") + std::strerror(errno));
      }
    }
    const ssize_t k = ::write(fd, bytes.data() + sent, bytes.size() - sent);
    if (k < 0) {
      if (errno == EINTR) continue;
      throw PredictionError(std::string("write failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(k);
  }
}

std::size_t serve_frames(int in_fd, int out_fd,
                         const std::function<LinearImage(const LinearImage&)>& handler) {
  std::size_t errors = 0;
  char hdr[kFrameHeaderBytes];
  for (;;) {
    const std::size_t got = read_exact(in_fd, hdr, kFrameHeaderBytes, -1);
    if (got == 0) return errors;
    if (got < kFrameHeaderBytes) {
      write_frame(out_fd, encode_error_frame("truncated frame header"));
      return errors + 1;
    }
    const FrameHeader h = decode_header(hdr);
    const std::uint64_t n = h.kind <= 2 ? h.payload_bytes() : 0;
    if (n > kMaxFramePayload) {
      // Cannot skip an absurd payload safely; report and stop.
      write_frame(out_fd, encode_error_frame("frame payload too large"));
      return errors + 1;
    }
    std::vector<char> payload(n);
    if (read_exact(in_fd, payload.data(), n, -1) != n) {
      write_frame(out_fd, encode_error_frame("truncated frame payload"));
      return errors + 1;
    }
    try {
      if (!h.magic_ok()) throw FormatError("bad frame magic", 0);
      if (h.kind != static_cast<std::uint8_t>(FrameKind::kRequest)) {
        throw FormatError("expected a request frame", 4);
      }
      const Frame req = frame_from(h, payload.data());
      write_frame(out_fd, encode_frame(FrameKind::kResponse, handler(req.image)));
    } catch (const std::exception& e) {
      ++errors;
      write_frame(out_fd, encode_error_frame(e.what()));
    }
  }
}

SubprocessPredictor::SubprocessPredictor(const std::string& command, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  // A dead child must surface as an error, not terminate the caller.
  ::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0) throw PredictionError("pipe() failed");
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw PredictionError("pipe() failed");
  }
  pid_ = ::fork();
  if (pid_ < 0) throw PredictionError("fork() failed");
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
}

SubprocessPredictor::~SubprocessPredictor() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
      ::usleep(20000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }
}

LinearImage SubprocessPredictor::predict(const LinearImage& input) {
  write_frame(to_child_, encode_frame(FrameKind::kRequest, input), static_cast<int>(timeout_.count()));
  std::optional<Frame> resp;
  try {
    resp = read_frame(from_child_, static_cast<int>(timeout_.count()));
  } catch (const FormatError& e) {
    throw PredictionError(std::string("protocol error: ") + e.what());
  }
  if (!resp) throw PredictionError("predictor process closed its output");
  if (resp->kind == FrameKind::kError) throw PredictionError("predictor error: " + resp->message);
  if (resp->kind != FrameKind::kResponse) throw PredictionError("protocol error: expected a response frame");
  return std::move(resp->image);
}

}  // namespace flare::pipeline

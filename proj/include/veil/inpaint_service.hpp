// Copyright 2026 The Veil Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "veil/image.hpp"
#include "veil/inpaint/engine.hpp"

namespace veil {

inline constexpr std::uint8_t kServiceVersion = 1;
inline constexpr std::size_t kRequestHeaderBytes = 4 + 1 + 8 + 2 + 2;
inline constexpr std::size_t kResponseHeaderBytes = 4 + 1 + 8 + 1;
inline constexpr int kMaxServiceDim = 65535;

enum class ResponseStatus : std::uint8_t { kOk = 0, kError = 1 };

struct InpaintRequest {
  std::uint64_t frame_id = 0;
  RgbImage rgb;
  BinaryMask mask;
};

struct InpaintResponse {
  std::uint64_t frame_id = 0;
  ResponseStatus status = ResponseStatus::kOk;
  RgbImage rgb;  // empty unless status is kOk
  float inference_ms = 0.0f;
};

std::size_t request_size(int width, int height);
std::size_t response_size(int width, int height, ResponseStatus status);

std::vector<std::uint8_t> encode_request(const InpaintRequest& req);
// Throws ProtocolError naming "magic", "version", "length" or "mask".
InpaintRequest decode_request(std::span<const std::uint8_t> bytes);

// A response carries no dimensions, so decoding needs those of the request.
std::vector<std::uint8_t> encode_response(const InpaintResponse& resp);
InpaintResponse decode_response(std::span<const std::uint8_t> bytes, int width, int height);

// Blocking byte stream. read_exact returns false on a clean end of stream
// before the first byte; a short read after that is an IoError.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual bool read_exact(std::span<std::uint8_t> out) = 0;
  virtual void write_all(std::span<const std::uint8_t> data) = 0;
  virtual void close() = 0;
};

// Owns a connected stream socket descriptor.
class FdStream : public ByteStream {
 public:
  explicit FdStream(int fd) : fd_(fd) {}
  ~FdStream() override;
  FdStream(const FdStream&) = delete;
  FdStream& operator=(const FdStream&) = delete;

  bool read_exact(std::span<std::uint8_t> out) override;
  void write_all(std::span<const std::uint8_t> data) override;
  void close() override;
  // Half-closes the write side so the peer sees end of stream.
  void shutdown_write();
  int fd() const { return fd_; }

 private:
  int fd_;
};

// Connected pair of local stream sockets.
std::pair<std::unique_ptr<FdStream>, std::unique_ptr<FdStream>> make_stream_pair();

std::unique_ptr<FdStream> connect_unix(const std::string& path);

// Reads one whole request off the stream. Returns false on clean end of
// stream. Header errors throw ProtocolError; the stream is then unusable.
bool read_request(ByteStream& stream, InpaintRequest& out);
InpaintResponse read_response(ByteStream& stream, int width, int height);

// Answers requests in order until the peer closes. A fresh session (zeroed
// memory) is created per call. Engine errors become status-1 responses and the
// session continues; framing errors end the session.
void serve(std::shared_ptr<const InpaintEngine> engine, ByteStream& stream);

// Listens on a unix socket path and serves each accepted connection on its own
// thread with its own session.
class InpaintServer {
 public:
  InpaintServer(std::shared_ptr<const InpaintEngine> engine, std::string path);
  ~InpaintServer();
  InpaintServer(const InpaintServer&) = delete;
  InpaintServer& operator=(const InpaintServer&) = delete;

  const std::string& path() const { return path_; }
  void stop();

 private:
  void accept_loop();

  std::shared_ptr<const InpaintEngine> engine_;
  std::string path_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
  std::vector<std::thread> workers_;
};

struct BackendResult {
  bool ok = false;
  RgbImage rgb;
  double inference_ms = 0.0;
  double transport_ms = 0.0;
  std::string error;
};

// What the pipeline talks to: either the engine in-process or a remote server.
class InpaintBackend {
 public:
  virtual ~InpaintBackend() = default;
  virtual BackendResult process(std::uint64_t frame_id, const RgbImage& redacted, const BinaryMask& mask) = 0;
  virtual int width() const = 0;
  virtual int height() const = 0;
};

class LocalBackend : public InpaintBackend {
 public:
  explicit LocalBackend(std::shared_ptr<const InpaintEngine> engine) : session_(std::move(engine)) {}
  BackendResult process(std::uint64_t frame_id, const RgbImage& redacted, const BinaryMask& mask) override;
  int width() const override { return session_.engine().width(); }
  int height() const override { return session_.engine().height(); }
  const InpaintSession& session() const { return session_; }

 private:
  InpaintSession session_;
};

// Client side of the service protocol. Transport failures are reported as a
// failed result; the connection is not retried.
class StreamBackend : public InpaintBackend {
 public:
  StreamBackend(std::unique_ptr<ByteStream> stream, int width, int height)
      : stream_(std::move(stream)), width_(width), height_(height) {}
  BackendResult process(std::uint64_t frame_id, const RgbImage& redacted, const BinaryMask& mask) override;
  int width() const override { return width_; }
  int height() const override { return height_; }

 private:
  std::unique_ptr<ByteStream> stream_;
  int width_;
  int height_;
};

}  // namespace veil

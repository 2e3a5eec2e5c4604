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

#include "veil/inpaint_service.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include <spdlog/spdlog.h>

#include "veil/error.hpp"

namespace veil {
namespace {

constexpr std::uint8_t kMagic[4] = {'D', 'R', 'I', 'P'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

float get_f32(const std::uint8_t* p) {
  std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                    (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

void check_magic_version(std::span<const std::uint8_t> bytes, std::size_t header) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw ProtocolError("magic", "expected DRIP");
  if (bytes.size() < 5) throw ProtocolError("length", "truncated header");
  if (bytes[4] != kServiceVersion) throw ProtocolError("version", "unsupported version " + std::to_string(bytes[4]));
  if (bytes.size() < header) throw ProtocolError("length", "truncated header");
}

void put_header(std::vector<std::uint8_t>& out, std::uint64_t frame_id) {
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kServiceVersion);
  put_u64(out, frame_id);
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::size_t request_size(int width, int height) {
  return kRequestHeaderBytes + 4 * static_cast<std::size_t>(width) * height;
}

std::size_t response_size(int width, int height, ResponseStatus status) {
  const std::size_t rgb = status == ResponseStatus::kOk ? 3 * static_cast<std::size_t>(width) * height : 0;
  return kResponseHeaderBytes + rgb + 4;
}

std::vector<std::uint8_t> encode_request(const InpaintRequest& req) {
  const int w = req.rgb.width();
  const int h = req.rgb.height();
  if (w > kMaxServiceDim || h > kMaxServiceDim) throw InputError("frame dimensions exceed 65535");
  if (!req.mask.same_size(req.rgb)) throw InputError("mask and frame dimensions differ");
  std::vector<std::uint8_t> out;
  out.reserve(request_size(w, h));
  put_header(out, req.frame_id);
  put_u16(out, static_cast<std::uint16_t>(w));
  put_u16(out, static_cast<std::uint16_t>(h));
  auto rgb = req.rgb.data();
  out.insert(out.end(), rgb.begin(), rgb.end());
  for (auto b : req.mask.bits()) out.push_back(b ? 255 : 0);
  return out;
}

InpaintRequest decode_request(std::span<const std::uint8_t> bytes) {
  check_magic_version(bytes, kRequestHeaderBytes);
  InpaintRequest req;
  req.frame_id = get_u64(bytes.data() + 5);
  const int w = get_u16(bytes.data() + 13);
  const int h = get_u16(bytes.data() + 15);
  if (bytes.size() != request_size(w, h)) {
    throw ProtocolError("length", "expected " + std::to_string(request_size(w, h)) + " bytes, got " +
                                      std::to_string(bytes.size()));
  }
  req.rgb = RgbImage(w, h);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const std::uint8_t* p = bytes.data() + kRequestHeaderBytes;
  std::memcpy(req.rgb.data().data(), p, 3 * n);
  p += 3 * n;
  req.mask = BinaryMask(w, h);
  auto bits = req.mask.bits();
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] != 0 && p[i] != 255) throw ProtocolError("mask", "mask bytes must be 0 or 255");
    bits[i] = p[i] ? 1 : 0;
  }
  return req;
}

std::vector<std::uint8_t> encode_response(const InpaintResponse& resp) {
  std::vector<std::uint8_t> out;
  out.reserve(response_size(resp.rgb.width(), resp.rgb.height(), resp.status));
  put_header(out, resp.frame_id);
  out.push_back(static_cast<std::uint8_t>(resp.status));
  if (resp.status == ResponseStatus::kOk) {
    auto rgb = resp.rgb.data();
    out.insert(out.end(), rgb.begin(), rgb.end());
  }
  put_f32(out, resp.inference_ms);
  return out;
}

InpaintResponse decode_response(std::span<const std::uint8_t> bytes, int width, int height) {
  check_magic_version(bytes, kResponseHeaderBytes);
  InpaintResponse resp;
  resp.frame_id = get_u64(bytes.data() + 5);
  const std::uint8_t status = bytes[13];
  if (status > 1) throw ProtocolError("status", "unknown status " + std::to_string(status));
  resp.status = static_cast<ResponseStatus>(status);
  if (bytes.size() != response_size(width, height, resp.status)) {
    throw ProtocolError("length", "response length mismatch");
  }
  const std::uint8_t* p = bytes.data() + kResponseHeaderBytes;
  if (resp.status == ResponseStatus::kOk) {
    resp.rgb = RgbImage(width, height);
    std::memcpy(resp.rgb.data().data(), p, resp.rgb.data().size());
    p += resp.rgb.data().size();
  }
  resp.inference_ms = get_f32(p);
  return resp;
}

FdStream::~FdStream() { close(); }

bool FdStream::read_exact(std::span<std::uint8_t> out) {
  std::size_t got = 0;
  while (got < out.size()) {
    const ssize_t r = ::read(fd_, out.data() + got, out.size() - got);
    if (r < 0 && errno == EINTR) continue;
    if (r < 0) throw IoError(std::string("read failed: ") + std::strerror(errno));
    if (r == 0) {
      if (got == 0) return false;
      throw IoError("stream closed mid-message");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void FdStream::write_all(std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t r = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (r < 0 && errno == EINTR) continue;
    if (r < 0) throw IoError(std::string("write failed: ") + std::strerror(errno));
    sent += static_cast<std::size_t>(r);
  }
}

void FdStream::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void FdStream::shutdown_write() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

std::pair<std::unique_ptr<FdStream>, std::unique_ptr<FdStream>> make_stream_pair() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) throw IoError("socketpair failed");
  return {std::make_unique<FdStream>(fds[0]), std::make_unique<FdStream>(fds[1])};
}

namespace {

sockaddr_un unix_address(const std::string& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof(addr.sun_path)) throw ConfigError("socket path too long: " + path);
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  return addr;
}

}  // namespace

std::unique_ptr<FdStream> connect_unix(const std::string& path) {
  const sockaddr_un addr = unix_address(path);
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) throw IoError("socket failed");
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw IoError("cannot connect to " + path + ": " + std::strerror(errno));
  }
  return std::make_unique<FdStream>(fd);
}

bool read_request(ByteStream& stream, InpaintRequest& out) {
  std::vector<std::uint8_t> buf(kRequestHeaderBytes);
  if (!stream.read_exact(buf)) return false;
  check_magic_version(buf, kRequestHeaderBytes);
  const int w = get_u16(buf.data() + 13);
  const int h = get_u16(buf.data() + 15);
  buf.resize(request_size(w, h));
  if (buf.size() > kRequestHeaderBytes &&
      !stream.read_exact(std::span(buf).subspan(kRequestHeaderBytes))) {
    throw ProtocolError("length", "stream ended before payload");
  }
  out = decode_request(buf);
  return true;
}

InpaintResponse read_response(ByteStream& stream, int width, int height) {
  std::vector<std::uint8_t> buf(kResponseHeaderBytes);
  if (!stream.read_exact(buf)) throw IoError("inpaint service closed the connection");
  check_magic_version(buf, kResponseHeaderBytes);
  const auto status = buf[13] == 0 ? ResponseStatus::kOk : ResponseStatus::kError;
  buf.resize(response_size(width, height, status));
  if (!stream.read_exact(std::span(buf).subspan(kResponseHeaderBytes))) {
    throw ProtocolError("length", "stream ended before payload");
  }
  return decode_response(buf, width, height);
}

void serve(std::shared_ptr<const InpaintEngine> engine, ByteStream& stream) {
  InpaintSession session(std::move(engine));
  InpaintRequest req;
  while (true) {
    try {
      if (!read_request(stream, req)) return;
    } catch (const ProtocolError& e) {
      spdlog::warn("inpaint service: dropping session: {}", e.what());
      InpaintResponse err;
      err.status = ResponseStatus::kError;
      stream.write_all(encode_response(err));
      return;
    }
    InpaintResponse resp;
    resp.frame_id = req.frame_id;
    try {
      EngineResult r = session.step(req.rgb, req.mask);
      resp.rgb = std::move(r.rgb);
      resp.inference_ms = static_cast<float>(r.inference_ms);
    } catch (const Error& e) {
      spdlog::warn("inpaint service: frame {} failed: {}", req.frame_id, e.what());
      resp.status = ResponseStatus::kError;
    }
    stream.write_all(encode_response(resp));
  }
}

InpaintServer::InpaintServer(std::shared_ptr<const InpaintEngine> engine, std::string path)
    : engine_(std::move(engine)), path_(std::move(path)) {
  const sockaddr_un addr = unix_address(path_);
  ::unlink(path_.c_str());
  listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw IoError("socket failed");
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 4) != 0) {
    ::close(listen_fd_);
    throw IoError("cannot listen on " + path_ + ": " + std::strerror(errno));
  }
  thread_ = std::thread([this] { accept_loop(); });
}

InpaintServer::~InpaintServer() { stop(); }

void InpaintServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (thread_.joinable()) thread_.join();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  ::unlink(path_.c_str());
}

void InpaintServer::accept_loop() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    workers_.emplace_back([engine = engine_, fd] {
      FdStream stream(fd);
      try {
        serve(engine, stream);
      } catch (const std::exception& e) {
        spdlog::warn("inpaint service: connection ended: {}", e.what());
      }
    });
  }
}

BackendResult LocalBackend::process(std::uint64_t, const RgbImage& redacted, const BinaryMask& mask) {
  BackendResult out;
  try {
    EngineResult r = session_.step(redacted, mask);
    out.ok = true;
    out.rgb = std::move(r.rgb);
    out.inference_ms = r.inference_ms;
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

BackendResult StreamBackend::process(std::uint64_t frame_id, const RgbImage& redacted, const BinaryMask& mask) {
  BackendResult out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    stream_->write_all(encode_request({frame_id, redacted, mask}));
    InpaintResponse resp = read_response(*stream_, width_, height_);
    if (resp.frame_id != frame_id) throw ProtocolError("frame_id", "response out of order");
    out.inference_ms = resp.inference_ms;
    out.transport_ms = std::max(0.0, ms_since(t0) - out.inference_ms);
    if (resp.status != ResponseStatus::kOk) {
      out.error = "inpaint service reported an error";
      return out;
    }
    out.ok = true;
    out.rgb = std::move(resp.rgb);
  } catch (const Error& e) {
    out.error = e.what();
    out.transport_ms = ms_since(t0);
  }
  return out;
}

}  // namespace veil

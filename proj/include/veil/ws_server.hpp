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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "veil/pipeline.hpp"

namespace veil {

struct WsServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  std::filesystem::path static_root;  // served at "/"; empty disables static files
  std::chrono::milliseconds ping_interval{5000};
  std::size_t max_queued_frames = 4;  // per client; older frames are dropped first
};

// HTTP + websocket front end. `/ws` upgrades to a websocket; other GET paths
// are served from static_root. The first websocket client to connect is the
// operator and its messages go to the change queue; later clients are
// read-only viewers until the operator leaves. Malformed operator messages are
// answered with {"type":"error","reason":...}.
class WsServer {
 public:
  WsServer(WsServerOptions options, ChangeQueue& queue);
  ~WsServer();
  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  std::uint16_t port() const;
  std::size_t client_count() const;

  void broadcast_text(std::string text);
  void broadcast_binary(std::vector<std::uint8_t> data);

  void stop();

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace veil

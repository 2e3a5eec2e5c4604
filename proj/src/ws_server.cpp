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

#include "veil/ws_server.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <fstream>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "veil/error.hpp"
#include "veil/ws_protocol.hpp"

namespace veil {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::string mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

// Maps a request target onto a file below root; empty when the target tries
// to escape it.
std::filesystem::path resolve_static(const std::filesystem::path& root, std::string target) {
  if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
  if (target.empty() || target.front() != '/') return {};
  if (target.back() == '/') target += "index.html";
  std::filesystem::path rel(target.substr(1));
  for (const auto& part : rel) {
    if (part == "..") return {};
  }
  return root / rel;
}

struct Outgoing {
  std::shared_ptr<const std::string> payload;
  bool binary = false;
};

}  // namespace

class WsSessionBase;

struct WsServer::Impl {
  WsServerOptions options;
  ChangeQueue& queue;
  asio::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  std::thread thread;
  std::atomic<bool> stopped{false};
  std::atomic<std::size_t> clients{0};
  std::vector<std::shared_ptr<WsSessionBase>> sessions;  // connect order; front is the operator

  Impl(WsServerOptions o, ChangeQueue& q) : options(std::move(o)), queue(q) {}
  void do_accept();
  void add(const std::shared_ptr<WsSessionBase>& s) {
    sessions.push_back(s);
    clients = sessions.size();
  }
  void remove(const WsSessionBase* s) {
    std::erase_if(sessions, [s](const auto& p) { return p.get() == s; });
    clients = sessions.size();
  }
  bool is_operator(const WsSessionBase* s) const { return !sessions.empty() && sessions.front().get() == s; }
  void broadcast(Outgoing msg);
};

class WsSessionBase : public std::enable_shared_from_this<WsSessionBase> {
 public:
  WsSessionBase(tcp::socket socket, WsServer::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void run(http::request<http::string_body> req) {
    websocket::stream_base::timeout opt{};
    opt.handshake_timeout = std::chrono::seconds(30);
    // Beast pings after half the idle timeout without traffic from the peer.
    opt.idle_timeout = 2 * server_.options.ping_interval;
    opt.keep_alive_pings = true;
    ws_.set_option(opt);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->server_.add(self);
      self->do_read();
    });
  }

  void send(Outgoing msg) {
    if (closed_) return;
    if (msg.binary) {
      const std::size_t first = writing_ ? 1 : 0;
      std::size_t binaries = 0;
      for (std::size_t i = first; i < out_.size(); ++i) binaries += out_[i].binary ? 1 : 0;
      while (binaries >= server_.options.max_queued_frames) {
        auto it = std::find_if(out_.begin() + static_cast<std::ptrdiff_t>(first), out_.end(),
                               [](const Outgoing& o) { return o.binary; });
        if (it == out_.end()) break;
        out_.erase(it);
        --binaries;
      }
    }
    out_.push_back(std::move(msg));
    if (!writing_) do_write();
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->server_.remove(self.get());
        return;
      }
      self->on_message();
      self->do_read();
    });
  }

  void on_message() {
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    if (!server_.is_operator(this)) {
      reply_error("read-only viewer");
      return;
    }
    try {
      server_.queue.push(parse_client_message(text));
    } catch (const ProtocolError& e) {
      reply_error(e.field());
    }
  }

  void reply_error(const std::string& reason) {
    send({std::make_shared<const std::string>(canonical_dump({{"type", "error"}, {"reason", reason}})), false});
  }

  void do_write() {
    writing_ = true;
    const Outgoing& msg = out_.front();
    ws_.binary(msg.binary);
    ws_.async_write(asio::buffer(*msg.payload), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->out_.pop_front();
      self->writing_ = false;
      if (ec) {
        self->close();
        return;
      }
      if (!self->out_.empty()) self->do_write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  WsServer::Impl& server_;
  beast::flat_buffer buffer_;
  std::deque<Outgoing> out_;
  bool writing_ = false;
  bool closed_ = false;
};

namespace {

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, WsServer::Impl& server) : stream_(std::move(socket)), server_(server) {}

  void run() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->on_request();
    });
  }

  void on_request() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() != "/ws") return send_status(http::status::not_found, "no websocket here");
      stream_.expires_never();
      std::make_shared<WsSessionBase>(stream_.release_socket(), server_)->run(std::move(req_));
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      return send_status(http::status::method_not_allowed, "GET only");
    }
    const auto path = server_.options.static_root.empty()
                          ? std::filesystem::path{}
                          : resolve_static(server_.options.static_root, std::string(req_.target()));
    std::ifstream in(path, std::ios::binary);
    if (path.empty() || !std::filesystem::is_regular_file(path) || !in) {
      return send_status(http::status::not_found, "not found");
    }
    std::ostringstream body;
    body << in.rdbuf();
    auto res = std::make_shared<http::response<http::string_body>>(http::status::ok, req_.version());
    res->set(http::field::content_type, mime_type(path));
    res->body() = req_.method() == http::verb::head ? std::string{} : body.str();
    res->keep_alive(req_.keep_alive());
    res->prepare_payload();
    write(res);
  }

  void send_status(http::status status, const std::string& text) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, "text/plain");
    res->body() = text;
    res->keep_alive(req_.keep_alive());
    res->prepare_payload();
    write(res);
  }

  void write(const std::shared_ptr<http::response<http::string_body>>& res) {
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec || !res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  WsServer::Impl& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

void WsServer::Impl::do_accept() {
  acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (stopped) return;
    } else {
      std::make_shared<HttpSession>(std::move(socket), *this)->run();
    }
    do_accept();
  });
}

void WsServer::Impl::broadcast(Outgoing msg) {
  asio::post(ioc, [this, msg = std::move(msg)] {
    for (const auto& s : sessions) s->send(msg);
  });
}

WsServer::WsServer(WsServerOptions options, ChangeQueue& queue)
    : impl_(std::make_unique<Impl>(std::move(options), queue)) {
  beast::error_code ec;
  const tcp::endpoint ep(asio::ip::make_address(impl_->options.address, ec), impl_->options.port);
  if (ec) throw ConfigError("bad listen address " + impl_->options.address);
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw IoError("cannot listen on port " + std::to_string(impl_->options.port) + ": " + ec.message());
  impl_->do_accept();
  impl_->thread = std::thread([impl = impl_.get()] { impl->ioc.run(); });
}

WsServer::~WsServer() { stop(); }

std::uint16_t WsServer::port() const { return impl_->acceptor.local_endpoint().port(); }

std::size_t WsServer::client_count() const { return impl_->clients; }

void WsServer::broadcast_text(std::string text) {
  impl_->broadcast({std::make_shared<const std::string>(std::move(text)), false});
}

void WsServer::broadcast_binary(std::vector<std::uint8_t> data) {
  impl_->broadcast({std::make_shared<const std::string>(data.begin(), data.end()), true});
}

void WsServer::stop() {
  if (!impl_ || impl_->stopped.exchange(true)) return;
  asio::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    for (const auto& s : impl->sessions) s->close();
    impl->sessions.clear();
    impl->clients = 0;
    impl->ioc.stop();
  });
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace veil

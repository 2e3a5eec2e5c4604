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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <filesystem>
#include <fstream>
#include <thread>

#include "veil/inpaint/baseline.hpp"
#include "veil/ws_protocol.hpp"
#include "veil/ws_server.hpp"

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using namespace veil;

namespace {

class Client {
 public:
  explicit Client(std::uint16_t port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/ws");
  }
  void send(const std::string& text) {
    ws_.text(true);
    ws_.write(asio::buffer(text));
  }
  // Returns the payload and whether it was binary.
  std::pair<std::string, bool> read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return {beast::buffers_to_string(buf.data()), ws_.got_binary()};
  }
  std::string read_text() {
    for (;;) {
      auto [s, binary] = read();
      if (!binary) return s;
    }
  }
  void close() { ws_.close(websocket::close_code::normal); }

 private:
  asio::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

http::response<http::string_body> get(std::uint16_t port, const std::string& target) {
  asio::io_context ioc;
  beast::tcp_stream stream(ioc);
  tcp::resolver resolver(ioc);
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::string_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return res;
}

template <typename Pred>
bool wait_for(Pred pred) {
  for (int i = 0; i < 500; ++i) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return false;
}

std::filesystem::path make_static_root() {
  const auto root = std::filesystem::temp_directory_path() / ("veil_www_" + std::to_string(::getpid()));
  std::filesystem::create_directories(root / "js");
  std::ofstream(root / "index.html") << "<html>veil</html>";
  std::ofstream(root / "js" / "app.js") << "console.log(1);";
  return root;
}

}  // namespace

TEST_CASE("static files are served at /") {
  const auto root = make_static_root();
  ChangeQueue q;
  WsServer server({.static_root = root}, q);
  auto res = get(server.port(), "/");
  CHECK(res.result() == http::status::ok);
  CHECK(res.body() == "<html>veil</html>");
  CHECK(res[http::field::content_type].find("text/html") != beast::string_view::npos);
  res = get(server.port(), "/js/app.js?v=2");
  CHECK(res.result() == http::status::ok);
  CHECK(res.body() == "console.log(1);");
  CHECK(get(server.port(), "/missing.css").result() == http::status::not_found);
  CHECK(get(server.port(), "/../../etc/passwd").result() == http::status::not_found);
  server.stop();
  std::filesystem::remove_all(root);
}

TEST_CASE("operator and viewer roles") {
  ChangeQueue q;
  WsServer server({}, q);
  auto op = std::make_unique<Client>(server.port());
  REQUIRE(wait_for([&] { return server.client_count() == 1; }));
  Client viewer(server.port());
  REQUIRE(wait_for([&] { return server.client_count() == 2; }));

  viewer.send(R"({"type":"toggle","id":1})");
  CHECK(viewer.read_text() == R"({"reason":"read-only viewer","type":"error"})");
  op->send("not json");
  CHECK(op->read_text() == R"({"reason":"malformed json","type":"error"})");
  op->send(R"({"type":"toggle","id":-4})");
  CHECK(op->read_text() == R"({"reason":"bad id","type":"error"})");
  CHECK(q.pushed() == 0);

  op->send(R"({"type":"toggle","id":3})");
  op->send(R"({"type":"confirm"})");
  REQUIRE(wait_for([&] { return q.pushed() == 2; }));
  const auto msgs = q.drain();
  CHECK(msgs[0] == OperatorMessage{ToggleMsg{3}});
  CHECK(msgs[1] == OperatorMessage{ConfirmMsg{}});

  // Broadcasts reach everyone.
  server.broadcast_text(R"({"type":"objects"})");
  server.broadcast_binary(encode_frame_msg(77, std::vector<std::uint8_t>{0xFF, 0xD8}));
  for (Client* c : {op.get(), &viewer}) {
    auto [t, tb] = c->read();
    CHECK_FALSE(tb);
    CHECK(t == R"({"type":"objects"})");
    auto [b, bb] = c->read();
    CHECK(bb);
    CHECK(frame_msg_id(std::vector<std::uint8_t>(b.begin(), b.end())) == 77);
  }

  // Once the operator leaves the viewer takes over.
  op->close();
  op.reset();
  REQUIRE(wait_for([&] { return server.client_count() == 1; }));
  viewer.send(R"({"type":"toggle","id":9})");
  REQUIRE(wait_for([&] { return q.pushed() == 3; }));
  CHECK(q.drain().front() == OperatorMessage{ToggleMsg{9}});
  server.stop();
}

TEST_CASE("a toggle takes effect on the next frame") {
  Pipeline pipeline(PipelineConfig{}, std::make_unique<GroundTruthDetector>(DetectorNoise{}),
                    std::make_unique<LocalBackend>(std::make_shared<BaselineEngine>(640, 360)));
  WsServer server({}, pipeline.queue());
  Client op(server.port());
  REQUIRE(wait_for([&] { return server.client_count() == 1; }));

  const SceneSpec scene = default_desk_scene();
  RenderedFrame r = render_frame(scene, Pose::identity(), 0);
  StepOutput out = pipeline.step(r.frame, &r.truth);
  server.broadcast_binary(encode_frame_msg(0, encode_jpeg(out.privatized)));
  auto [frame, binary] = op.read();
  REQUIRE(binary);
  const std::vector<std::uint8_t> bytes(frame.begin(), frame.end());
  CHECK(frame_msg_id(bytes) == 0);
  const RgbImage shown = decode_jpeg(std::span(bytes).subspan(8));
  CHECK(shown.width() == 1280);
  CHECK(shown.height() == 720);
  CHECK(out.mask.none());

  int cup = -1;
  for (const auto& t : pipeline.tracker().tracks())
    if (t.class_label == "cup") cup = t.id;
  REQUIRE(cup > 0);
  op.send(nlohmann::json{{"type", "toggle"}, {"id", cup}}.dump());
  REQUIRE(wait_for([&] { return pipeline.queue().pushed() == 1; }));
  r = render_frame(scene, Pose::identity(), 1);
  out = pipeline.step(r.frame, &r.truth);
  CHECK(out.mask == r.truth.object_masks.at(2));
  server.stop();
}

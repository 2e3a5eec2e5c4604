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

#include <filesystem>
#include <fstream>
#include <iterator>

#include "support.hpp"
#include "veil/error.hpp"
#include "veil/ws_protocol.hpp"

using namespace veil;
using veil::testing::random_rgb;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::filesystem::path(VEIL_FIXTURES) / name);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), {}};
}

TrackedObject laptop() {
  TrackedObject t;
  t.id = 1;
  t.class_label = "laptop";
  t.state = PrivacyState::kPrivate;
  t.has_box3d = true;
  t.bbox3d_center = {0, 0, 2};
  t.bbox3d_size = {0.4, 0.3, 0.075};
  return t;
}

CalibrationState confirmed(const Pose& zedbox) {
  CalibrationState c;
  c.calibrate(zedbox, Pose::identity());
  c.confirm();
  return c;
}

std::string parse_field(const std::string& text) {
  try {
    parse_client_message(text);
  } catch (const ProtocolError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("object updates match the golden text") {
  const CalibrationState id = confirmed(Pose::identity());
  CHECK(serialize_object_update({}, id, 7) == fixture("objects_empty.json"));
  CHECK(serialize_object_update({laptop()}, id, 8) == fixture("objects_identity.json"));
  CHECK(serialize_object_update({laptop()}, confirmed(Pose::from_translation({1, 0, 0})), 8) ==
        fixture("objects_translated.json"));

  TrackedObject cup;
  cup.id = 5;
  cup.class_label = "cup";
  cup.missed_frames = 3;
  CHECK(serialize_object_update({cup}, id, 9) == fixture("objects_stale.json"));

  CHECK_THROWS_AS(serialize_object_update({}, CalibrationState{}, 1), InputError);
  CalibrationState unconfirmed;
  unconfirmed.calibrate(Pose::identity(), Pose::identity());
  CHECK_THROWS_AS(serialize_object_update({}, unconfirmed, 1), InputError);
}

TEST_CASE("rotated calibration moves the centre") {
  // 90 degrees about +y maps camera +z onto world +x.
  Mat3 r;
  r << 0, 0, 1, 0, 1, 0, -1, 0, 0;
  const auto j = nlohmann::json::parse(serialize_object_update({laptop()}, confirmed(Pose(r, {0, 0, 0})), 1));
  const auto c = j["objects"][0]["center"];
  CHECK(c[0].get<double>() == 2.0);
  CHECK(c[1].get<double>() == 0.0);
  CHECK(c[2].get<double>() == 0.0);
}

TEST_CASE("canonical dump") {
  const auto j = nlohmann::json::parse(R"({"b":[1.0,-0.0,0.1234567,1e-7,3],"a":{"z":true,"y":null},"c":"x"})");
  CHECK(canonical_dump(j) == R"({"a":{"y":null,"z":true},"b":[1,0,0.123457,1e-07,3],"c":"x"})");
  CHECK(canonical_dump(nlohmann::json(123456789)) == "123456789");
  CHECK_THROWS_AS(canonical_dump(nlohmann::json(std::nan(""))), InputError);
}

TEST_CASE("client messages parse") {
  CHECK(parse_client_message(R"({"type":"toggle","id":4})") == OperatorMessage{ToggleMsg{4}});
  CHECK(parse_client_message(R"({"type":"confirm"})") == OperatorMessage{ConfirmMsg{}});
  CHECK(parse_client_message(R"({"type":"calibration","pose":[1,0,0,0,1,0,0,0,1,0.5,-1,2]})") ==
        OperatorMessage{CalibrationMsg{Pose::from_translation({0.5, -1, 2})}});
}

TEST_CASE("client message errors name the reason") {
  CHECK(parse_field("{") == "malformed json");
  CHECK(parse_field("[1]") == "malformed json");
  CHECK(parse_field(R"({"id":1})") == "missing type");
  CHECK(parse_field(R"({"type":3})") == "missing type");
  CHECK(parse_field(R"({"type":"dance"})") == "unknown type");
  CHECK(parse_field(R"({"type":"toggle"})") == "bad id");
  CHECK(parse_field(R"({"type":"toggle","id":-1})") == "bad id");
  CHECK(parse_field(R"({"type":"toggle","id":1.5})") == "bad id");
  CHECK(parse_field(R"({"type":"toggle","id":"1"})") == "bad id");
  CHECK(parse_field(R"({"type":"calibration"})") == "pose arity");
  CHECK(parse_field(R"({"type":"calibration","pose":[1,0,0,0,1,0,0,0,1,0,0]})") == "pose arity");
  CHECK(parse_field(R"({"type":"calibration","pose":[1,0,0,0,1,0,0,0,1,0,0,"z"]})") == "bad pose");
  CHECK(parse_field(R"({"type":"calibration","pose":[2,0,0,0,2,0,0,0,2,0,0,0]})") == "bad pose");
}

TEST_CASE("client messages round trip") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const OperatorMessage msgs[] = {ToggleMsg{static_cast<int>(rng() % 100000)},
                                    CalibrationMsg{veil::testing::random_pose(rng)}, ConfirmMsg{}};
    for (const auto& m : msgs) REQUIRE(parse_client_message(serialize_client_message(m)) == m);
  }
}

TEST_CASE("frame messages") {
  const std::vector<std::uint8_t> payload{0xFF, 0xD8, 0x01};
  const auto msg = encode_frame_msg(0x0102030405060708ull, payload);
  REQUIRE(msg.size() == 11);
  CHECK(msg[0] == 0x08);
  CHECK(msg[7] == 0x01);
  CHECK(frame_msg_id(msg) == 0x0102030405060708ull);
  CHECK(std::vector<std::uint8_t>(msg.begin() + 8, msg.end()) == payload);
  CHECK_THROWS_AS(frame_msg_id(std::vector<std::uint8_t>(7)), ProtocolError);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t id = rng();
    REQUIRE(frame_msg_id(encode_frame_msg(id, {})) == id);
  }
}

TEST_CASE("JPEG round trip") {
  RgbImage img(64, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) set_pixel(img, x, y, {static_cast<std::uint8_t>(4 * x), static_cast<std::uint8_t>(5 * y), 90});
  const auto bytes = encode_jpeg(img, 95);
  CHECK(bytes[0] == 0xFF);
  CHECK(bytes[1] == 0xD8);
  const RgbImage back = decode_jpeg(bytes);
  REQUIRE(back.width() == 64);
  REQUIRE(back.height() == 48);
  double err = 0.0;
  for (std::size_t i = 0; i < img.data().size(); ++i) err += std::abs(img.data()[i] - back.data()[i]);
  CHECK(err / static_cast<double>(img.data().size()) < 3.0);
  // Channel order survives: a red image stays red.
  RgbImage r(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) set_pixel(r, x, y, {250, 0, 0});
  const RgbImage rb = decode_jpeg(encode_jpeg(r, 95));
  CHECK(rb.at(8, 8, 0) > 200);
  CHECK(rb.at(8, 8, 2) < 50);
  CHECK_THROWS_AS(decode_jpeg(std::vector<std::uint8_t>{1, 2, 3}), IoError);
}

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

#include "veil/ws_protocol.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "veil/error.hpp"

namespace veil {
namespace {

void dump_into(const nlohmann::json& j, std::string& out) {
  using T = nlohmann::json::value_t;
  switch (j.type()) {
    case T::object: {
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {  // nlohmann::json keeps keys sorted
        if (!first) out += ',';
        first = false;
        out += nlohmann::json(k).dump();
        out += ':';
        dump_into(v, out);
      }
      out += '}';
      break;
    }
    case T::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        dump_into(j[i], out);
      }
      out += ']';
      break;
    }
    case T::number_float: {
      double v = j.get<double>();
      if (!std::isfinite(v)) throw InputError("non-finite number in JSON");
      if (v == 0.0) v = 0.0;
      out += fmt::format("{:.6g}", v);
      break;
    }
    default:
      out += j.dump();
  }
}

void swap_rb(const std::uint8_t* src, std::uint8_t* dst, std::size_t pixels) {
  for (std::size_t i = 0; i < pixels; ++i) {
    dst[3 * i] = src[3 * i + 2];
    dst[3 * i + 1] = src[3 * i + 1];
    dst[3 * i + 2] = src[3 * i];
  }
}

nlohmann::json vec3(const Point3& p) { return nlohmann::json::array({p.x(), p.y(), p.z()}); }

}  // namespace

std::string canonical_dump(const nlohmann::json& j) {
  std::string out;
  dump_into(j, out);
  return out;
}

std::string serialize_object_update(const std::vector<TrackedObject>& tracks,
                                    const CalibrationState& calibration, std::int64_t frame_id) {
  if (!calibration.confirmed()) throw InputError("object updates require a confirmed calibration");
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& t : tracks) {
    nlohmann::json o;
    o["id"] = t.id;
    o["class"] = t.class_label;
    o["state"] = to_string(t.state);
    o["stale"] = t.missed_frames > 0;
    if (t.has_box3d) {
      o["center"] = vec3(transform_point(calibration.zed_world(), t.bbox3d_center));
      o["size"] = vec3(t.bbox3d_size);
    } else {
      o["center"] = nullptr;
      o["size"] = nullptr;
    }
    objects.push_back(std::move(o));
  }
  nlohmann::json msg;
  msg["type"] = "objects";
  msg["frame_id"] = frame_id;
  msg["objects"] = std::move(objects);
  return canonical_dump(msg);
}

OperatorMessage parse_client_message(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError("malformed json", e.what());
  }
  if (!j.is_object()) throw ProtocolError("malformed json", "message must be an object");
  if (!j.contains("type") || !j["type"].is_string()) throw ProtocolError("missing type", "no string type field");
  const std::string type = j["type"].get<std::string>();
  if (type == "toggle") {
    if (!j.contains("id") || !j["id"].is_number_integer() || j["id"].get<std::int64_t>() < 0 ||
        j["id"].get<std::int64_t>() > std::numeric_limits<int>::max()) {
      throw ProtocolError("bad id", "toggle id must be a non-negative integer");
    }
    return ToggleMsg{j["id"].get<int>()};
  }
  if (type == "calibration") {
    if (!j.contains("pose") || !j["pose"].is_array()) throw ProtocolError("pose arity", "pose must be an array");
    const auto& arr = j["pose"];
    if (arr.size() != 12) {
      throw ProtocolError("pose arity", "expected 12 values, got " + std::to_string(arr.size()));
    }
    std::array<double, 12> v{};
    for (std::size_t i = 0; i < 12; ++i) {
      if (!arr[i].is_number()) throw ProtocolError("bad pose", "pose values must be numbers");
      v[i] = arr[i].get<double>();
    }
    try {
      return CalibrationMsg{Pose::from_array(v)};
    } catch (const Error& e) {
      throw ProtocolError("bad pose", e.what());
    }
  }
  if (type == "confirm") return ConfirmMsg{};
  throw ProtocolError("unknown type", type);
}

std::string serialize_client_message(const OperatorMessage& msg) {
  nlohmann::json j;
  if (const auto* t = std::get_if<ToggleMsg>(&msg)) {
    j["type"] = "toggle";
    j["id"] = t->id;
  } else if (const auto* c = std::get_if<CalibrationMsg>(&msg)) {
    j["type"] = "calibration";
    j["pose"] = c->pose.to_array();
  } else {
    j["type"] = "confirm";
  }
  // Full precision here: the pose must survive a round trip exactly.
  return j.dump();
}

std::vector<std::uint8_t> encode_frame_msg(std::uint64_t frame_id, std::span<const std::uint8_t> jpeg) {
  std::vector<std::uint8_t> out(8 + jpeg.size());
  for (int i = 0; i < 8; ++i) out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(frame_id >> (8 * i));
  std::copy(jpeg.begin(), jpeg.end(), out.begin() + 8);
  return out;
}

std::uint64_t frame_msg_id(std::span<const std::uint8_t> msg) {
  if (msg.size() < 8) throw ProtocolError("length", "frame message shorter than 8 bytes");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | msg[static_cast<std::size_t>(i)];
  return v;
}

std::vector<std::uint8_t> encode_jpeg(const RgbImage& rgb, int quality) {
  cv::Mat bgr(rgb.height(), rgb.width(), CV_8UC3);
  swap_rb(rgb.data().data(), bgr.data, rgb.pixel_count());
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".jpg", bgr, out, {cv::IMWRITE_JPEG_QUALITY, quality})) throw IoError("JPEG encode failed");
  return out;
}

RgbImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("JPEG decode failed");
  RgbImage out(bgr.cols, bgr.rows);
  swap_rb(bgr.data, out.data().data(), out.pixel_count());
  return out;
}

}  // namespace veil

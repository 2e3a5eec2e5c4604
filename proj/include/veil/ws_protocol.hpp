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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "veil/detection.hpp"
#include "veil/geometry.hpp"
#include "veil/image.hpp"
#include "veil/operator_msg.hpp"

namespace veil {

// Canonical text form: object keys sorted, no whitespace, integers verbatim,
// other numbers printed with 6 significant digits and -0 written as 0.
std::string canonical_dump(const nlohmann::json& j);

// One entry per live track:
//   {"center":[x,y,z],"class":...,"id":...,"size":[sx,sy,sz],"stale":bool,"state":"public"|"private"}
// Centers are in viewer-world space. A track with no 3D box yet has null
// center and size. Throws InputError when calibration is not confirmed.
std::string serialize_object_update(const std::vector<TrackedObject>& tracks,
                                    const CalibrationState& calibration, std::int64_t frame_id);

// Strict parse. ProtocolError::field() carries the reason: "malformed json",
// "missing type", "unknown type", "bad id", "pose arity", "bad pose".
OperatorMessage parse_client_message(const std::string& text);
std::string serialize_client_message(const OperatorMessage& msg);

// Binary frame message: 8-byte little-endian frame id, then JPEG bytes.
std::vector<std::uint8_t> encode_frame_msg(std::uint64_t frame_id, std::span<const std::uint8_t> jpeg);
std::uint64_t frame_msg_id(std::span<const std::uint8_t> msg);

std::vector<std::uint8_t> encode_jpeg(const RgbImage& rgb, int quality = 85);
RgbImage decode_jpeg(std::span<const std::uint8_t> bytes);

}  // namespace veil

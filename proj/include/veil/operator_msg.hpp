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

#include <variant>

#include "veil/geometry.hpp"

namespace veil {

struct ToggleMsg {
  int id = 0;
  friend bool operator==(const ToggleMsg&, const ToggleMsg&) = default;
};

// Placement of the virtual camera box in viewer space.
struct CalibrationMsg {
  Pose pose;
  friend bool operator==(const CalibrationMsg& a, const CalibrationMsg& b) {
    return a.pose.to_array() == b.pose.to_array();
  }
};

struct ConfirmMsg {
  friend bool operator==(const ConfirmMsg&, const ConfirmMsg&) = default;
};

using OperatorMessage = std::variant<ToggleMsg, CalibrationMsg, ConfirmMsg>;

}  // namespace veil

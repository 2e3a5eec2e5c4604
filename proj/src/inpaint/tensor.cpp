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

#include "veil/inpaint/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "veil/error.hpp"

namespace veil {

std::string Shape4::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

bool Tensor4::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

bool Tensor4::all_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return v == 0.0f; });
}

InpaintMemory::InpaintMemory(Shape4 slot_shape) : slot_shape_(slot_shape) {
  for (auto& s : slots_) s = Tensor4(slot_shape);
}

InpaintMemory memory_push(const InpaintMemory& memory, Tensor4 slot) {
  if (!(slot.shape() == memory.slot_shape())) {
    throw ConfigError("memory slot shape " + slot.shape().str() + " does not match " +
                      memory.slot_shape().str());
  }
  InpaintMemory out = memory;
  out.slots_[0] = std::move(out.slots_[1]);
  out.slots_[1] = std::move(slot);
  out.filled_ = std::min(InpaintMemory::kSlots, memory.filled_ + 1);
  return out;
}

}  // namespace veil

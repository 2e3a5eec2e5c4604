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

#include "veil/inpaint/engine.hpp"

#include <chrono>

#include "veil/error.hpp"

namespace veil {

void composite_outside_mask(RgbImage& target, const RgbImage& source, const BinaryMask& mask) {
  if (!target.same_size(source) || !mask.same_size(source)) throw InputError("composite dimension mismatch");
  auto bits = mask.bits();
  auto dst = target.data();
  auto src = source.data();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) continue;
    dst[3 * i] = src[3 * i];
    dst[3 * i + 1] = src[3 * i + 1];
    dst[3 * i + 2] = src[3 * i + 2];
  }
}

EngineResult InpaintEngine::inpaint(const RgbImage& redacted, const BinaryMask& mask,
                                    const InpaintMemory& memory) const {
  if (!redacted.same_size(width(), height()) || !mask.same_size(width(), height())) {
    throw ConfigError("engine '" + name() + "' runs at " + std::to_string(width()) + "x" +
                      std::to_string(height()) + ", got " + std::to_string(redacted.width()) + "x" +
                      std::to_string(redacted.height()));
  }
  if (!(memory.slot_shape() == memory_slot_shape())) {
    throw ConfigError("memory slot shape " + memory.slot_shape().str() + " does not match engine " +
                      memory_slot_shape().str());
  }

  const auto t0 = std::chrono::steady_clock::now();
  Fill f = fill(redacted, mask, memory);
  const auto t1 = std::chrono::steady_clock::now();
  if (!f.memory_slot.all_finite()) throw NumericError("engine produced non-finite memory features");

  composite_outside_mask(f.rgb, redacted, mask);
  EngineResult r;
  r.rgb = std::move(f.rgb);
  r.memory = memory_push(memory, std::move(f.memory_slot));
  r.inference_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return r;
}

}  // namespace veil

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

#include <optional>
#include <vector>

#include "veil/inpaint/engine.hpp"

namespace veil {

// One level of the push-pull pyramid. `value` is interleaved RGB in [0, 255].
struct PushPullLevel {
  int width = 0;
  int height = 0;
  std::vector<float> value;
  std::vector<float> weight;
};

// Multiscale push-pull fill. Only the boundary ring of the mask (unmasked
// pixels 4-adjacent to it) seeds the pyramid, so every filled value is a
// convex combination of ring pixels. Returns the pulled levels, finest first.
std::vector<PushPullLevel> push_pull_levels(const RgbImage& redacted, const BinaryMask& mask);

// Fills the mask. With no boundary ring (mask covers the frame) the fill is
// `fallback` if given, else mid-gray.
RgbImage baseline_inpaint(const RgbImage& redacted, const BinaryMask& mask,
                          std::optional<Rgb> fallback = std::nullopt);

// Real-time classical engine. Its memory slot is the per-channel mean of the
// previous output, used as the fallback when the whole frame is masked.
class BaselineEngine final : public InpaintEngine {
 public:
  BaselineEngine(int width, int height) : width_(width), height_(height) {}

  std::string name() const override { return "baseline"; }
  int width() const override { return width_; }
  int height() const override { return height_; }
  Shape4 memory_slot_shape() const override { return {1, 3, 1, 1}; }

 protected:
  Fill fill(const RgbImage& redacted, const BinaryMask& mask, const InpaintMemory& memory) const override;

 private:
  int width_;
  int height_;
};

}  // namespace veil

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

#include "veil/inpaint/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "veil/error.hpp"

namespace veil {

std::vector<PushPullLevel> push_pull_levels(const RgbImage& redacted, const BinaryMask& mask) {
  if (!mask.same_size(redacted)) throw InputError("mask dimension mismatch");
  const int w = redacted.width();
  const int h = redacted.height();

  std::vector<PushPullLevel> levels;
  PushPullLevel base{w, h, std::vector<float>(static_cast<std::size_t>(w) * h * 3, 0.0f),
                     std::vector<float>(static_cast<std::size_t>(w) * h, 0.0f)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y)) continue;
      const bool ring = (x > 0 && mask.at(x - 1, y)) || (x + 1 < w && mask.at(x + 1, y)) ||
                        (y > 0 && mask.at(x, y - 1)) || (y + 1 < h && mask.at(x, y + 1));
      if (!ring) continue;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      base.weight[i] = 1.0f;
      const std::uint8_t* p = redacted.row(y) + 3 * x;
      for (int c = 0; c < 3; ++c) base.value[3 * i + c] = p[c];
    }
  }
  levels.push_back(std::move(base));

  // Push: 2x2 box reduction of weight-normalized values.
  while (levels.back().width > 1 || levels.back().height > 1) {
    const PushPullLevel& fine = levels.back();
    const int pw = (fine.width + 1) / 2;
    const int ph = (fine.height + 1) / 2;
    PushPullLevel coarse{pw, ph, std::vector<float>(static_cast<std::size_t>(pw) * ph * 3, 0.0f),
                         std::vector<float>(static_cast<std::size_t>(pw) * ph, 0.0f)};
    for (int y = 0; y < ph; ++y) {
      for (int x = 0; x < pw; ++x) {
        float sw = 0.0f;
        float sv[3] = {0.0f, 0.0f, 0.0f};
        int children = 0;
        for (int dy = 0; dy < 2; ++dy) {
          const int fy = 2 * y + dy;
          if (fy >= fine.height) continue;
          for (int dx = 0; dx < 2; ++dx) {
            const int fx = 2 * x + dx;
            if (fx >= fine.width) continue;
            ++children;
            const std::size_t fi = static_cast<std::size_t>(fy) * fine.width + fx;
            const float wt = fine.weight[fi];
            sw += wt;
            for (int c = 0; c < 3; ++c) sv[c] += wt * fine.value[3 * fi + c];
          }
        }
        const std::size_t ci = static_cast<std::size_t>(y) * pw + x;
        coarse.weight[ci] = sw / static_cast<float>(children);
        if (sw > 0.0f)
          for (int c = 0; c < 3; ++c) coarse.value[3 * ci + c] = sv[c] / sw;
      }
    }
    levels.push_back(std::move(coarse));
  }

  // Pull: blend each level with its parent, coarsest first.
  std::fill(levels.back().weight.begin(), levels.back().weight.end(), 1.0f);
  for (int k = static_cast<int>(levels.size()) - 2; k >= 0; --k) {
    PushPullLevel& fine = levels[static_cast<std::size_t>(k)];
    const PushPullLevel& coarse = levels[static_cast<std::size_t>(k) + 1];
    for (int y = 0; y < fine.height; ++y) {
      for (int x = 0; x < fine.width; ++x) {
        const std::size_t fi = static_cast<std::size_t>(y) * fine.width + x;
        const std::size_t ci = static_cast<std::size_t>(y / 2) * coarse.width + x / 2;
        const float wt = std::min(1.0f, fine.weight[fi]);
        for (int c = 0; c < 3; ++c) {
          fine.value[3 * fi + c] = wt * fine.value[3 * fi + c] + (1.0f - wt) * coarse.value[3 * ci + c];
        }
        fine.weight[fi] = 1.0f;
      }
    }
  }
  return levels;
}

RgbImage baseline_inpaint(const RgbImage& redacted, const BinaryMask& mask, std::optional<Rgb> fallback) {
  if (!mask.same_size(redacted)) throw InputError("mask dimension mismatch");
  RgbImage out = redacted;
  if (mask.none()) return out;

  const std::size_t area = mask.area();
  if (area == mask.pixel_count()) {
    const Rgb fill = fallback.value_or(Rgb{128, 128, 128});
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) set_pixel(out, x, y, fill);
    return out;
  }

  const auto levels = push_pull_levels(redacted, mask);
  const PushPullLevel& l0 = levels.front();
  auto bits = mask.bits();
  auto px = out.data();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (!bits[i]) continue;
    for (int c = 0; c < 3; ++c) {
      px[3 * i + c] = static_cast<std::uint8_t>(std::clamp(std::lround(l0.value[3 * i + c]), 0L, 255L));
    }
  }
  return out;
}

InpaintEngine::Fill BaselineEngine::fill(const RgbImage& redacted, const BinaryMask& mask,
                                         const InpaintMemory& memory) const {
  std::optional<Rgb> fallback;
  if (memory.filled() > 0) {
    const Tensor4& prev = memory.newest();
    auto to_u8 = [](float v) {
      return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0f), 0L, 255L));
    };
    fallback = Rgb{to_u8(prev.at(0, 0, 0, 0)), to_u8(prev.at(0, 1, 0, 0)), to_u8(prev.at(0, 2, 0, 0))};
  }
  Fill f;
  f.rgb = baseline_inpaint(redacted, mask, fallback);

  double sum[3] = {0.0, 0.0, 0.0};
  auto px = f.rgb.data();
  for (std::size_t i = 0; i < f.rgb.pixel_count(); ++i)
    for (int c = 0; c < 3; ++c) sum[c] += px[3 * i + c];
  f.memory_slot = Tensor4({1, 3, 1, 1});
  const double n = std::max<std::size_t>(1, f.rgb.pixel_count()) * 255.0;
  for (int c = 0; c < 3; ++c) f.memory_slot.at(0, c, 0, 0) = static_cast<float>(sum[c] / n);
  return f;
}

}  // namespace veil

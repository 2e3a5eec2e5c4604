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

#include "veil/inpaint/fit.hpp"

#include <cmath>

#include "veil/error.hpp"
#include "veil/inpaint/loss.hpp"

namespace veil {
namespace {

struct CachedFrame {
  Tensor4 features;  // (1, Cd, H, W)
  BinaryMask mask;
  std::vector<double> truth;  // interleaved RGB in [0, 1]
};

// Head forward for one frame; returns interleaved RGB in [0, 1].
std::vector<double> head_forward(const CachedFrame& f, const Param& hw, const Param& hb, int cd) {
  const Shape4& s = f.features.shape();
  std::vector<double> out(static_cast<std::size_t>(s.h) * s.w * 3);
  for (int y = 0; y < s.h; ++y) {
    for (int x = 0; x < s.w; ++x) {
      for (int o = 0; o < 3; ++o) {
        double z = hb.data[static_cast<std::size_t>(o)];
        for (int c = 0; c < cd; ++c) z += hw.data[static_cast<std::size_t>(o) * cd + c] * f.features.at(0, c, y, x);
        out[(static_cast<std::size_t>(y) * s.w + x) * 3 + o] = 1.0 / (1.0 + std::exp(-z));
      }
    }
  }
  return out;
}

}  // namespace

FitReport fit_color_head(DsttWeights& weights, const DsttConfig& config,
                         const std::vector<std::vector<FitFrame>>& sequences, const FitOptions& options) {
  if (options.steps < 0 || !(options.learning_rate > 0.0)) throw ConfigError("invalid fit options");
  weights.check_shapes(config);

  std::vector<CachedFrame> cache;
  for (const auto& seq : sequences) {
    InpaintMemory memory(Shape4{1, config.channels, config.tokens_y(), config.tokens_x()});
    for (const auto& fr : seq) {
      const DsttOutput out = dstt_forward(make_model_input(fr.redacted, fr.mask), memory, weights, config);
      memory = memory_push(memory, out.memory_slot);
      cache.push_back({out.decoder_features, fr.mask, to_unit(fr.truth)});
    }
  }
  if (cache.empty()) throw InputError("no frames to fit");

  const int cd = config.decoder_channels;
  const std::size_t np = weights.head_w.data.size() + weights.head_b.data.size();
  std::vector<double> m(np, 0.0), v(np, 0.0);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  auto total_loss = [&]() {
    double l = 0.0;
    for (const auto& f : cache) {
      l += weighted_l1(head_forward(f, weights.head_w, weights.head_b, cd), f.truth, f.mask, 3, options.w_mask,
                       options.w_valid);
    }
    return l / static_cast<double>(cache.size());
  };

  FitReport report;
  report.initial_loss = total_loss();
  for (int step = 1; step <= options.steps; ++step) {
    std::vector<double> grad(np, 0.0);
    for (const auto& f : cache) {
      const auto pred = head_forward(f, weights.head_w, weights.head_b, cd);
      const auto g = weighted_l1_grad(pred, f.truth, f.mask, 3, options.w_mask, options.w_valid);
      const Shape4& s = f.features.shape();
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * s.w + x;
          for (int o = 0; o < 3; ++o) {
            const double out = pred[p * 3 + o];
            const double dz = g[p * 3 + o] * out * (1.0 - out);
            if (dz == 0.0) continue;
            for (int c = 0; c < cd; ++c) grad[static_cast<std::size_t>(o) * cd + c] += dz * f.features.at(0, c, y, x);
            grad[weights.head_w.data.size() + o] += dz;
          }
        }
      }
    }
    const double bc1 = 1.0 - std::pow(kBeta1, step);
    const double bc2 = 1.0 - std::pow(kBeta2, step);
    for (std::size_t i = 0; i < np; ++i) {
      const double gi = grad[i] / static_cast<double>(cache.size());
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * gi;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * gi * gi;
      const double upd = options.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kEps);
      float& w = i < weights.head_w.data.size() ? weights.head_w.data[i]
                                                 : weights.head_b.data[i - weights.head_w.data.size()];
      w = static_cast<float>(w - upd);
    }
  }
  report.final_loss = total_loss();
  report.steps = options.steps;
  return report;
}

}  // namespace veil

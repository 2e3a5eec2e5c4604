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

#include "veil/inpaint/loss.hpp"

#include <cmath>

#include "veil/error.hpp"

namespace veil {
namespace {

struct RegionCounts {
  std::size_t masked = 0;
  std::size_t valid = 0;
};

RegionCounts check_and_count(std::span<const double> pred, std::span<const double> truth,
                             const BinaryMask& mask, int channels, double w_mask, double w_valid) {
  if (!(w_mask > w_valid && w_valid > 0.0)) throw ConfigError("loss weights must satisfy w_mask > w_valid > 0");
  if (channels <= 0 || pred.size() != truth.size() || pred.size() != mask.pixel_count() * channels) {
    throw InputError("loss input dimension mismatch");
  }
  const std::size_t a = mask.area();
  return {a * channels, (mask.pixel_count() - a) * channels};
}

}  // namespace

double weighted_l1(std::span<const double> pred, std::span<const double> truth, const BinaryMask& mask,
                   int channels, double w_mask, double w_valid) {
  const RegionCounts n = check_and_count(pred, truth, mask, channels, w_mask, w_valid);
  auto bits = mask.bits();
  double sum_masked = 0.0;
  double sum_valid = 0.0;
  for (std::size_t p = 0; p < bits.size(); ++p) {
    double s = 0.0;
    for (int c = 0; c < channels; ++c) s += std::abs(pred[p * channels + c] - truth[p * channels + c]);
    (bits[p] ? sum_masked : sum_valid) += s;
  }
  const double masked_term = n.masked ? sum_masked / static_cast<double>(n.masked) : 0.0;
  const double valid_term = n.valid ? sum_valid / static_cast<double>(n.valid) : 0.0;
  return w_mask * masked_term + w_valid * valid_term;
}

std::vector<double> weighted_l1_grad(std::span<const double> pred, std::span<const double> truth,
                                     const BinaryMask& mask, int channels, double w_mask, double w_valid) {
  const RegionCounts n = check_and_count(pred, truth, mask, channels, w_mask, w_valid);
  const double gm = n.masked ? w_mask / static_cast<double>(n.masked) : 0.0;
  const double gv = n.valid ? w_valid / static_cast<double>(n.valid) : 0.0;
  auto bits = mask.bits();
  std::vector<double> g(pred.size(), 0.0);
  for (std::size_t p = 0; p < bits.size(); ++p) {
    const double scale = bits[p] ? gm : gv;
    for (int c = 0; c < channels; ++c) {
      const std::size_t i = p * channels + c;
      const double d = pred[i] - truth[i];
      g[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
    }
  }
  return g;
}

std::vector<double> to_unit(const RgbImage& img) {
  std::vector<double> v(img.data().size());
  auto src = img.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = src[i] / 255.0;
  return v;
}

double weighted_l1(const RgbImage& pred, const RgbImage& truth, const BinaryMask& mask, double w_mask,
                   double w_valid) {
  if (!pred.same_size(truth)) throw InputError("loss input dimension mismatch");
  const auto p = to_unit(pred);
  const auto t = to_unit(truth);
  return weighted_l1(p, t, mask, 3, w_mask, w_valid);
}

double masked_mean_abs_error(const RgbImage& pred, const RgbImage& truth, const BinaryMask& mask) {
  if (!pred.same_size(truth) || !mask.same_size(pred)) throw InputError("dimension mismatch");
  auto bits = mask.bits();
  auto a = pred.data();
  auto b = truth.data();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < bits.size(); ++p) {
    if (!bits[p]) continue;
    for (int c = 0; c < 3; ++c) sum += std::abs(static_cast<int>(a[3 * p + c]) - static_cast<int>(b[3 * p + c]));
    n += 3;
  }
  return n ? sum / (255.0 * static_cast<double>(n)) : 0.0;
}

}  // namespace veil

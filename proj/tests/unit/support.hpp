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

#include <array>
#include <cmath>
#include <random>

#include "veil/geometry.hpp"
#include "veil/image.hpp"

namespace veil::testing {

// Rotation from a random unit quaternion, written out element by element.
inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  double w = n(rng), x = n(rng), y = n(rng), z = n(rng);
  const double s = 1.0 / std::sqrt(w * w + x * x + y * y + z * z);
  w *= s, x *= s, y *= s, z *= s;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
       2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
       2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
  return r;
}

inline Point3 random_point(std::mt19937_64& rng, double scale = 5.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline Pose random_pose(std::mt19937_64& rng) { return {random_rotation(rng), random_point(rng)}; }

inline double max_abs_diff(const Pose& a, const Pose& b) {
  const auto x = a.to_array();
  const auto y = b.to_array();
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

inline RgbImage random_rgb(std::mt19937_64& rng, int w, int h) {
  RgbImage img(w, h);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(d(rng));
  return img;
}

inline BinaryMask random_mask(std::mt19937_64& rng, int w, int h, double p = 0.3) {
  BinaryMask m(w, h);
  std::bernoulli_distribution b(p);
  for (auto& v : m.bits()) v = b(rng) ? 1 : 0;
  return m;
}

}  // namespace veil::testing

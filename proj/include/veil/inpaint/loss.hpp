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

#include <span>
#include <vector>

#include "veil/image.hpp"

namespace veil {

inline constexpr double kDefaultMaskWeight = 10.0;
inline constexpr double kDefaultValidWeight = 1.0;

// w_mask · mean|pred − truth| over masked pixels
//   + w_valid · mean|pred − truth| over the rest.
// pred/truth are interleaved with `channels` values per pixel; each mean runs
// over pixels × channels. An empty region contributes 0.
double weighted_l1(std::span<const double> pred, std::span<const double> truth, const BinaryMask& mask,
                   int channels, double w_mask = kDefaultMaskWeight, double w_valid = kDefaultValidWeight);

// Analytic (sub)gradient of weighted_l1 with respect to pred; sign(0) = 0.
std::vector<double> weighted_l1_grad(std::span<const double> pred, std::span<const double> truth,
                                     const BinaryMask& mask, int channels,
                                     double w_mask = kDefaultMaskWeight, double w_valid = kDefaultValidWeight);

// 8-bit convenience: values are scaled to [0, 1] first.
double weighted_l1(const RgbImage& pred, const RgbImage& truth, const BinaryMask& mask,
                   double w_mask = kDefaultMaskWeight, double w_valid = kDefaultValidWeight);

// Mean |pred − truth| over masked pixels in [0, 1] units; 0 for an empty mask.
double masked_mean_abs_error(const RgbImage& pred, const RgbImage& truth, const BinaryMask& mask);

std::vector<double> to_unit(const RgbImage& img);

}  // namespace veil

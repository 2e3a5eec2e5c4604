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

#include <vector>

#include "veil/inpaint/dstt.hpp"

namespace veil {

// One training frame. Sequences are consumed in order so that memory slots
// carry the features of the preceding frames.
struct FitFrame {
  RgbImage redacted;
  BinaryMask mask;
  RgbImage truth;
};

struct FitOptions {
  int steps = 100;
  double learning_rate = 0.05;
  double w_mask = 10.0;
  double w_valid = 1.0;
};

struct FitReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int steps = 0;
};

// Toy fitting mode: trains only the 1×1 colour head with Adam on the weighted
// L1 loss, holding the transformer fixed. Decoder features are computed once
// per frame, so a step costs one head evaluation per pixel.
FitReport fit_color_head(DsttWeights& weights, const DsttConfig& config,
                         const std::vector<std::vector<FitFrame>>& sequences, const FitOptions& options);

}  // namespace veil

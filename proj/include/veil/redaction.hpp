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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "veil/detection.hpp"
#include "veil/image.hpp"
#include "veil/scene_sim.hpp"

namespace veil {

// Union of the masks of every Private track.
BinaryMask merge_private_masks(const std::vector<TrackedObject>& tracks, int width, int height);

// Zeroes rgb inside the mask. Depth is left untouched.
FrameRGBD redact(const FrameRGBD& frame, const BinaryMask& mask);
void redact_in_place(RgbImage& rgb, const BinaryMask& mask);

enum class MaskKind { kRectangle, kStrokes };
enum class MaskStability { kStable, kPerFrame };

struct MaskGenSpec {
  int width = 640;
  int height = 360;
  MaskKind kind = MaskKind::kRectangle;
  MaskStability stability = MaskStability::kPerFrame;
  double area_min = 0.05;
  double area_max = 0.30;
  int strokes_min = 1;
  int strokes_max = 5;
  int thickness_min = 5;
  int thickness_max = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

BinaryMask gen_mask(const MaskGenSpec& spec, std::int64_t frame_index);

// One step of 3×3 cross-element morphology. Pixels outside the raster count
// as unset, so erosion eats inward from the frame border.
BinaryMask dilate(const BinaryMask& m);
BinaryMask erode(const BinaryMask& m);

// Dilates while the area fraction is below area_min and erodes while it is
// above area_max (bounds inclusive). When a single dilation jumps past
// area_max, or an erosion past area_min, only part of that step's ring is
// applied (raster order) so the loop settles inside the bounds.
BinaryMask adjust_mask_area(const BinaryMask& mask, double area_min, double area_max);

// Single-channel 0/255 PNG.
void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path);
BinaryMask read_mask_png(const std::filesystem::path& path);

}  // namespace veil

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
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "veil/geometry.hpp"
#include "veil/image.hpp"

namespace veil {

struct CameraIntrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 180.0;
  int width = 640;
  int height = 360;

  void validate() const;
};

enum class TextureKind { kConstant, kHorizontalGradient, kChecker };

// Fronto-parallel wall at `depth` meters along world +z.
struct BackgroundSpec {
  double depth = 3.0;
  TextureKind texture = TextureKind::kChecker;
  Rgb color_a{128, 128, 128};
  Rgb color_b{200, 200, 200};
  double span_m = 4.0;   // gradient: world width mapped from color_a to color_b
  double cell_m = 0.25;  // checker: square cell edge
  int noise = 0;         // checker: seeded per-cell jitter amplitude
};

enum class ShapeKind { kRectangle, kEllipse };

// Planar object parallel to the wall. Extents are half-sizes in meters.
struct ObjectSpec {
  int id = 0;
  std::string class_label;
  ShapeKind shape = ShapeKind::kRectangle;
  double center_x = 0.0;
  double center_y = 0.0;
  double half_w = 0.1;
  double half_h = 0.1;
  double depth = 1.0;
  Rgb albedo{200, 40, 40};
  int texture_noise = 0;  // seeded per-texel jitter amplitude, 1 cm texels
  double velocity_x = 0.0;  // meters per frame
  double velocity_y = 0.0;
  bool private_hint = false;  // scripted operators mark these objects private
};

struct SceneSpec {
  BackgroundSpec background;
  std::vector<ObjectSpec> objects;
  CameraIntrinsics intrinsics;
  std::uint64_t seed = 0;

  // Full invariant check (depth ordering, labels, ≥1 projected pixel).
  void validate() const;
};

struct FrameRGBD {
  RgbImage rgb;
  DepthImage depth;  // meters, 0 = invalid
  std::int64_t frame_id = 0;
  std::int64_t timestamp_ns = 0;
};

struct GroundTruth {
  std::map<int, BinaryMask> object_masks;  // visible objects only, pairwise disjoint
  std::map<int, std::string> object_labels;
  RgbImage background_rgb;
};

struct RenderedFrame {
  FrameRGBD frame;
  GroundTruth truth;
};

inline constexpr std::int64_t kFramePeriodNs = 50'000'000;  // 20 fps clock

// camera_pose maps camera-frame points into the world frame.
RenderedFrame render_frame(const SceneSpec& spec, const Pose& camera_pose, std::int64_t frame_id);

enum class TrajectoryKind { kStatic, kPan, kOrbit };

TrajectoryKind parse_trajectory_kind(const std::string& name);

struct TrajectoryParams {
  Point3 origin = Point3::Zero();
  double pan_rate_rad = 0.0;    // yaw per frame about the camera y axis
  double orbit_radius = 0.0;    // meters, circle in the x-y plane
  double orbit_period = 100.0;  // frames per revolution
};

Pose camera_trajectory(TrajectoryKind kind, double t, const TrajectoryParams& params);

SceneSpec scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const SceneSpec& spec);
SceneSpec load_scene(const std::filesystem::path& path);

// Built-in desk scene used when no scene file is given.
SceneSpec default_desk_scene(int width = 640, int height = 360);

}  // namespace veil

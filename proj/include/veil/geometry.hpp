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
#include <optional>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace veil {

using Point3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Rigid transform p' = R p + t. The rotation is checked on construction and
// polar-corrected when it has drifted more than kDriftTolerance from
// orthonormal; anything beyond kMaxRecoverableDrift is rejected.
class Pose {
 public:
  static constexpr double kDriftTolerance = 1e-6;
  static constexpr double kMaxRecoverableDrift = 1e-2;

  Pose() : rotation_(Mat3::Identity()), translation_(Point3::Zero()) {}
  Pose(const Mat3& rotation, const Point3& translation);

  static Pose identity() { return {}; }
  static Pose from_translation(const Point3& t) { return {Mat3::Identity(), t}; }

  const Mat3& rotation() const { return rotation_; }
  const Point3& translation() const { return translation_; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }

  // Row-major rotation followed by translation.
  std::array<double, 12> to_array() const;
  static Pose from_array(const std::array<double, 12>& values);

 private:
  Mat3 rotation_;
  Point3 translation_;
};

// max |RᵀR − I| entry, plus |det R − 1|.
double orthonormality_drift(const Mat3& r);
Mat3 polar_orthonormalize(const Mat3& r);
Mat3 rotation_about_axis(const Point3& axis, double angle_rad);

// Apply b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);

// Camera pose relative to the viewer's neutral frame, from the virtual camera
// box pose and the viewer pose at calibration time:
//   p_rel = R_head⁻¹ (p_box − t_head),  R_rel = R_head⁻¹ R_box
Pose calibrate_relative(const Pose& zedbox, const Pose& head);

// Current camera pose in viewer-world space:
//   t = R_head p_rel + t_head,  R = R_head R_rel
Pose zed_world_pose(const Pose& head_now, const Pose& zed_in_head);

// p_world = R p_cam + t
Point3 transform_point(const Pose& zed_world, const Point3& p);

// Holds the calibration result and keeps the world pose in sync with the
// viewer pose.
class CalibrationState {
 public:
  // Records a new camera-box placement taken at viewer pose `head`.
  void calibrate(const Pose& zedbox, const Pose& head);
  void set_head_pose(const Pose& head_now);
  void confirm() { confirmed_ = calibrated_; }

  bool calibrated() const { return calibrated_; }
  bool confirmed() const { return confirmed_; }
  const Pose& zed_in_head() const { return zed_in_head_; }
  const Pose& zed_world() const { return zed_world_; }
  const Pose& head() const { return head_; }

 private:
  Pose zed_in_head_;
  Pose zed_world_;
  Pose head_;
  bool calibrated_ = false;
  bool confirmed_ = false;
};

void to_json(nlohmann::json& j, const Pose& p);
void from_json(const nlohmann::json& j, Pose& p);

}  // namespace veil

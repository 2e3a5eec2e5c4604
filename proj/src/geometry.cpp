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

#include "veil/geometry.hpp"

#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "veil/error.hpp"

namespace veil {

double orthonormality_drift(const Mat3& r) {
  const Mat3 e = r.transpose() * r - Mat3::Identity();
  return std::max(e.cwiseAbs().maxCoeff(), std::abs(r.determinant() - 1.0));
}

Mat3 polar_orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

Mat3 rotation_about_axis(const Point3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

Pose::Pose(const Mat3& rotation, const Point3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw InputError("pose contains non-finite values");
  }
  const double drift = orthonormality_drift(rotation);
  if (drift > kMaxRecoverableDrift || rotation.determinant() <= 0.0) {
    throw InputError("pose rotation is not a proper rotation");
  }
  if (drift > kDriftTolerance) rotation_ = polar_orthonormalize(rotation);
}

std::array<double, 12> Pose::to_array() const {
  std::array<double, 12> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[r * 3 + c] = rotation_(r, c);
  for (int i = 0; i < 3; ++i) out[9 + i] = translation_(i);
  return out;
}

Pose Pose::from_array(const std::array<double, 12>& values) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) r(i, c) = values[i * 3 + c];
  return {r, Point3(values[9], values[10], values[11])};
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

Pose invert(const Pose& p) {
  const Mat3 rt = p.rotation().transpose();
  return {rt, -rt * p.translation()};
}

Pose calibrate_relative(const Pose& zedbox, const Pose& head) {
  // R_head is orthonormal, so its inverse is the transpose.
  const Mat3 head_inv = head.rotation().transpose();
  const Point3 p_rel = head_inv * (zedbox.translation() - head.translation());
  const Mat3 r_rel = head_inv * zedbox.rotation();
  return {r_rel, p_rel};
}

Pose zed_world_pose(const Pose& head_now, const Pose& zed_in_head) {
  const Point3 t = head_now.rotation() * zed_in_head.translation() + head_now.translation();
  const Mat3 r = head_now.rotation() * zed_in_head.rotation();
  return {r, t};
}

Point3 transform_point(const Pose& zed_world, const Point3& p) {
  return zed_world.rotation() * p + zed_world.translation();
}

void CalibrationState::calibrate(const Pose& zedbox, const Pose& head) {
  head_ = head;
  zed_in_head_ = calibrate_relative(zedbox, head);
  zed_world_ = zed_world_pose(head_, zed_in_head_);
  calibrated_ = true;
  confirmed_ = false;
}

void CalibrationState::set_head_pose(const Pose& head_now) {
  head_ = head_now;
  if (calibrated_) zed_world_ = zed_world_pose(head_, zed_in_head_);
}

void to_json(nlohmann::json& j, const Pose& p) {
  const auto a = p.to_array();
  j = nlohmann::json{{"rotation", std::vector<double>(a.begin(), a.begin() + 9)},
                     {"translation", std::vector<double>(a.begin() + 9, a.end())}};
}

void from_json(const nlohmann::json& j, Pose& p) {
  const auto rot = j.at("rotation").get<std::vector<double>>();
  const auto tr = j.at("translation").get<std::vector<double>>();
  if (rot.size() != 9 || tr.size() != 3) throw InputError("pose JSON needs 9 rotation + 3 translation values");
  std::array<double, 12> a{};
  std::copy(rot.begin(), rot.end(), a.begin());
  std::copy(tr.begin(), tr.end(), a.begin() + 9);
  p = Pose::from_array(a);
}

}  // namespace veil

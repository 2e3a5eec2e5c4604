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
#include <memory>
#include <string>
#include <vector>

#include "veil/geometry.hpp"
#include "veil/image.hpp"
#include "veil/scene_sim.hpp"

namespace veil {

struct Detection2D {
  std::string class_label;
  BinaryMask mask;
  PixelRect bbox;  // tight bounds of mask
  double confidence = 1.0;
};

enum class PrivacyState { kPublic, kPrivate };

inline const char* to_string(PrivacyState s) {
  return s == PrivacyState::kPrivate ? "private" : "public";
}

struct TrackedObject {
  int id = 0;
  std::string class_label;
  Detection2D latest;
  bool has_box3d = false;
  Point3 bbox3d_center = Point3::Zero();  // camera frame
  Point3 bbox3d_size = Point3::Zero();
  PrivacyState state = PrivacyState::kPublic;
  int missed_frames = 0;
  std::int64_t last_seen_frame = 0;
};

struct DetectorNoise {
  double dropout_prob = 0.0;
  int jitter_px = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Ground-truth-backed detector. Dropout and jitter are hash-seeded on
// (seed, frame_id, object id), so results are a pure function of the inputs.
std::vector<Detection2D> detect(const FrameRGBD& frame, const GroundTruth& truth,
                                const DetectorNoise& noise);

// Pluggable detector; a learned segmenter implements this without needing
// the ground truth argument.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Detection2D> detect(const FrameRGBD& frame, const GroundTruth* truth) = 0;
};

class GroundTruthDetector final : public Detector {
 public:
  explicit GroundTruthDetector(DetectorNoise noise) : noise_(noise) { noise_.validate(); }
  std::vector<Detection2D> detect(const FrameRGBD& frame, const GroundTruth* truth) override;

 private:
  DetectorNoise noise_;
};

// Mean of the valid (> 0) depth readings inside the rectangle. An occluder
// inside the box pulls the estimate toward the viewer; that bias is kept.
double estimate_region_depth(const DepthImage& depth, const PixelRect& bbox);

struct Box3D {
  Point3 center;
  Point3 size;
};

// Minimum depth extent and the fraction of the smaller face extent used as
// box depth; the detector only sees the front face.
inline constexpr double kMinBoxDepthM = 0.05;
inline constexpr double kBoxDepthFraction = 0.25;

Box3D bbox3d_from_detection(const Detection2D& det, const DepthImage& depth,
                            const CameraIntrinsics& intrinsics);

struct TrackerConfig {
  double iou_threshold = 0.3;
  int max_missed_frames = 15;  // tracks are dropped once missed_frames exceeds this
};

class Tracker {
 public:
  explicit Tracker(TrackerConfig config = {}) : config_(config) {}

  // Greedy association by descending mask IoU. Returns ids of tracks that were
  // dropped on this call.
  std::vector<int> associate(const std::vector<Detection2D>& detections, std::int64_t frame_id);

  std::vector<TrackedObject>& tracks() { return tracks_; }
  const std::vector<TrackedObject>& tracks() const { return tracks_; }
  TrackedObject* find(int id);
  const TrackerConfig& config() const { return config_; }
  int next_id() const { return next_id_; }

 private:
  TrackerConfig config_;
  std::vector<TrackedObject> tracks_;  // sorted by id
  int next_id_ = 1;
};

// Functional form over an explicit track list; ids continue from next_id.
std::vector<TrackedObject> associate(const std::vector<TrackedObject>& tracks,
                                     const std::vector<Detection2D>& detections,
                                     std::int64_t frame_id, int& next_id,
                                     const TrackerConfig& config = {});

}  // namespace veil

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
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "veil/detection.hpp"
#include "veil/geometry.hpp"
#include "veil/inpaint_service.hpp"
#include "veil/operator_msg.hpp"
#include "veil/scene_sim.hpp"

namespace veil {

// Many producers, one consumer. Messages come out in arrival order.
class ChangeQueue {
 public:
  void push(OperatorMessage msg);
  std::vector<OperatorMessage> drain();

  std::uint64_t pushed() const;
  std::uint64_t consumed() const;

 private:
  mutable std::mutex mu_;
  std::deque<OperatorMessage> queue_;
  std::uint64_t pushed_ = 0;
  std::uint64_t consumed_ = 0;
};

struct StageTiming {
  std::int64_t frame_id = 0;
  double capture_ms = 0.0;
  double detect_ms = 0.0;
  double redact_ms = 0.0;
  double inpaint_prep_ms = 0.0;
  double inpaint_infer_ms = 0.0;
  double inpaint_post_ms = 0.0;
  double transport_ms = 0.0;
  double pointcloud_ms = 0.0;
  double total_ms = 0.0;
  bool engine_failed = false;

  double component_sum() const {
    return capture_ms + detect_ms + redact_ms + inpaint_prep_ms + inpaint_infer_ms + inpaint_post_ms +
           transport_ms + pointcloud_ms;
  }
};

void to_json(nlohmann::json& j, const StageTiming& t);

struct PointCloud {
  std::vector<Point3> points;
  std::vector<Rgb> colors;
  std::int64_t frame_id = 0;

  std::size_t size() const { return points.size(); }
};

// Back-projects every valid-depth pixel and paints it with the inpainted
// colour. Depth is used as captured, so removed objects leave a ghost surface.
PointCloud transplant_pointcloud(const RgbImage& inpainted, const DepthImage& depth,
                                 const CameraIntrinsics& intrinsics);

// ASCII PLY with double coordinates, 17 significant digits.
void export_ply(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud read_ply(const std::filesystem::path& path);

// Bilinear 2× upscale with half-pixel centres: output pixel x samples input
// coordinate (x + 0.5) / 2 − 0.5, clamped at the border. Integer weights
// (9, 3, 3, 1) / 16, rounded half up.
RgbImage upscale2x(const RgbImage& src);
// The same value upscale2x(src) would hold at output pixel (ox, oy).
Rgb upscale2x_at(const RgbImage& src, int ox, int oy);
BinaryMask upscale2x_nearest(const BinaryMask& src);

struct ChangeSummary {
  int toggles_applied = 0;
  int toggles_discarded = 0;
  int calibrations = 0;
  int confirms = 0;
};

// Applies messages in order. Toggles for ids with no live track are logged and
// dropped. Calibration placements are taken at the current viewer pose.
ChangeSummary apply_changes(const std::vector<OperatorMessage>& messages, std::vector<TrackedObject>& tracks,
                            CalibrationState& calibration);

struct PipelineConfig {
  CameraIntrinsics intrinsics;
  TrackerConfig tracker;
  bool build_pointcloud = true;
  bool upscale = true;
};

struct StepOutput {
  RgbImage privatized;  // 2× the capture resolution when upscaling
  RgbImage inpainted;   // capture resolution
  BinaryMask mask;      // capture resolution
  PointCloud cloud;
  StageTiming timing;
  std::optional<std::string> object_update;  // only once calibration is confirmed
};

class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::unique_ptr<Detector> detector, std::unique_ptr<InpaintBackend> backend);

  ChangeQueue& queue() { return queue_; }
  Tracker& tracker() { return tracker_; }
  const Tracker& tracker() const { return tracker_; }
  CalibrationState& calibration() { return calibration_; }
  const PipelineConfig& config() const { return config_; }

  // One frame. Queued operator changes are applied before detection. An
  // inpainting failure is fail-closed: masked pixels come out black.
  StepOutput step(const FrameRGBD& frame, const GroundTruth* truth, double capture_ms = 0.0);

 private:
  PipelineConfig config_;
  std::unique_ptr<Detector> detector_;
  std::unique_ptr<InpaintBackend> backend_;
  Tracker tracker_;
  CalibrationState calibration_;
  ChangeQueue queue_;
};

}  // namespace veil

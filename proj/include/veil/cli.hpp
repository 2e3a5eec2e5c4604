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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "veil/inpaint/dstt.hpp"
#include "veil/inpaint/engine.hpp"
#include "veil/pipeline.hpp"
#include "veil/scene_sim.hpp"

namespace veil {

struct RunConfig {
  std::string scene_path;  // empty: built-in desk scene
  std::string engine = "baseline";  // baseline | dstt
  std::string weights_path;         // dstt only; empty: seeded random weights
  std::string model_config_path;    // dstt only; empty: derived from the frame size
  std::string transport = "local";  // local | socket
  std::string socket_path;          // socket transport; empty: a temporary path
  std::string trajectory = "static";
  double pan_rate_rad = 0.0;
  double orbit_radius = 0.0;
  int port = 8080;
  std::string static_root;
  double dropout_prob = 0.0;
  int jitter_px = 0;
  int frames = 100;
  std::uint64_t seed = 1;
  std::string report_path;  // JSON lines, appended
  bool scripted_operator = true;

  // Checks ranges and that every referenced path exists.
  void validate() const;
};

// Keys present in `j` replace the fields of `base`; unknown keys are an error.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::json to_json(const RunConfig& c);

SceneSpec scene_for(const RunConfig& config);

// The default model geometry for a frame size: patch 4 up to 64 pixels wide,
// patch 8 above.
DsttConfig default_dstt_config(int width, int height);
std::shared_ptr<const InpaintEngine> make_engine(const RunConfig& config, int width, int height);

struct FrameRecord {
  StageTiming timing;
  double mask_area_fraction = 0.0;
  std::optional<double> weighted_l1;
  std::optional<double> masked_mae;
  int private_tracks = 0;
};

struct EvalReport {
  std::string engine;
  std::vector<FrameRecord> frames;
  double wall_s = 0.0;
  double fps = 0.0;
  std::optional<double> weighted_l1_mean;
  std::optional<double> masked_mae_mean;
  double mask_area_min = 0.0;
  double mask_area_max = 0.0;
  double mask_area_mean = 0.0;
  int masked_frames = 0;
  int engine_failures = 0;

  nlohmann::json frame_json(std::size_t i) const;
  nlohmann::json summary_json() const;
};

// Appends one line per frame plus a summary line.
void append_report(const EvalReport& report, const std::filesystem::path& path);

// Observer invoked after every frame; used by export-ply and serve.
using FrameObserver = std::function<void(const RenderedFrame&, const StepOutput&)>;

struct EvalHooks {
  FrameObserver on_frame;
  // Replaces the backend built from the config (fault injection in tests).
  std::function<std::unique_ptr<InpaintBackend>(std::shared_ptr<const InpaintEngine>)> make_backend;
};

// Runs the pipeline headless on the simulator. The scripted operator sends an
// identity calibration and a confirm before frame 0, then toggles each track
// that overlaps (IoU ≥ 0.5) an object marked private in the scene. The metric
// target is the captured frame with private objects replaced by background.
EvalReport run_eval(const RunConfig& config, const EvalHooks& hooks = {});

// Single-line machine-readable error for stderr.
std::string error_line(const std::exception& e);

}  // namespace veil

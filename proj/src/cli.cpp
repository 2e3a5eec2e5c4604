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

#include "veil/cli.hpp"

#include <unistd.h>

#include <chrono>
#include <fstream>
#include <limits>
#include <set>

#include "veil/error.hpp"
#include "veil/inpaint/baseline.hpp"
#include "veil/inpaint/dstt.hpp"
#include "veil/inpaint/loss.hpp"
#include "veil/inpaint_service.hpp"

namespace veil {
namespace {

using Clock = std::chrono::steady_clock;

void require_file(const std::string& path, const char* what) {
  if (!path.empty() && !std::filesystem::exists(path)) {
    throw ConfigError(std::string(what) + " not found: " + path);
  }
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field has the wrong type: ") + key);
  }
}

std::optional<double> mean_of(const std::vector<FrameRecord>& frames,
                              const std::optional<double> FrameRecord::*field) {
  double sum = 0.0;
  int n = 0;
  for (const auto& f : frames) {
    if (const auto& v = f.*field) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

void RunConfig::validate() const {
  require_file(scene_path, "scene file");
  require_file(weights_path, "weights file");
  require_file(model_config_path, "model config");
  if (!static_root.empty() && !std::filesystem::is_directory(static_root)) {
    throw ConfigError("static root is not a directory: " + static_root);
  }
  if (engine != "baseline" && engine != "dstt") throw ConfigError("unknown engine: " + engine);
  if (transport != "local" && transport != "socket") throw ConfigError("unknown transport: " + transport);
  parse_trajectory_kind(trajectory);
  if (frames < 0) throw ConfigError("frame count must be non-negative");
  if (port < 0 || port > 65535) throw ConfigError("port out of range");
  DetectorNoise{dropout_prob, jitter_px, seed}.validate();
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  static const std::set<std::string> known = {
      "scene", "engine", "weights", "model_config", "transport", "socket_path", "trajectory", "pan_rate_rad",
      "orbit_radius", "port", "static_root", "dropout_prob", "jitter_px", "frames", "seed", "report",
      "scripted_operator"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown config key: " + k);
  }
  take(j, "scene", c.scene_path);
  take(j, "engine", c.engine);
  take(j, "weights", c.weights_path);
  take(j, "model_config", c.model_config_path);
  take(j, "transport", c.transport);
  take(j, "socket_path", c.socket_path);
  take(j, "trajectory", c.trajectory);
  take(j, "pan_rate_rad", c.pan_rate_rad);
  take(j, "orbit_radius", c.orbit_radius);
  take(j, "port", c.port);
  take(j, "static_root", c.static_root);
  take(j, "dropout_prob", c.dropout_prob);
  take(j, "jitter_px", c.jitter_px);
  take(j, "frames", c.frames);
  take(j, "seed", c.seed);
  take(j, "report", c.report_path);
  take(j, "scripted_operator", c.scripted_operator);
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"scene", c.scene_path},
          {"engine", c.engine},
          {"weights", c.weights_path},
          {"model_config", c.model_config_path},
          {"transport", c.transport},
          {"socket_path", c.socket_path},
          {"trajectory", c.trajectory},
          {"pan_rate_rad", c.pan_rate_rad},
          {"orbit_radius", c.orbit_radius},
          {"port", c.port},
          {"static_root", c.static_root},
          {"dropout_prob", c.dropout_prob},
          {"jitter_px", c.jitter_px},
          {"frames", c.frames},
          {"seed", c.seed},
          {"report", c.report_path},
          {"scripted_operator", c.scripted_operator}};
}

SceneSpec scene_for(const RunConfig& config) {
  SceneSpec scene = config.scene_path.empty() ? default_desk_scene() : load_scene(config.scene_path);
  if (config.scene_path.empty()) scene.seed = config.seed;
  return scene;
}

DsttConfig default_dstt_config(int width, int height) {
  DsttConfig c;
  c.width = width;
  c.height = height;
  c.patch = width > 64 ? 8 : 4;
  return c;
}

std::shared_ptr<const InpaintEngine> make_engine(const RunConfig& config, int width, int height) {
  if (config.engine == "baseline") return std::make_shared<BaselineEngine>(width, height);
  if (config.engine != "dstt") throw ConfigError("unknown engine: " + config.engine);
  DsttConfig mc = default_dstt_config(width, height);
  if (!config.model_config_path.empty()) {
    std::ifstream in(config.model_config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("model config is not valid JSON: " + std::string(e.what()));
    }
    mc = dstt_config_from_json(j);
  }
  if (mc.width != width || mc.height != height) throw ConfigError("model resolution does not match the scene");
  mc.validate();
  auto weights = std::make_shared<DsttWeights>(config.weights_path.empty()
                                                   ? DsttWeights::random(mc, config.seed)
                                                   : load_weights(config.weights_path, mc));
  return std::make_shared<DsttEngine>(mc, std::move(weights));
}

nlohmann::json EvalReport::frame_json(std::size_t i) const {
  const FrameRecord& f = frames.at(i);
  nlohmann::json j = f.timing;
  j["type"] = "frame";
  j["mask_area_fraction"] = f.mask_area_fraction;
  j["weighted_l1"] = opt_json(f.weighted_l1);
  j["masked_mae"] = opt_json(f.masked_mae);
  j["private_tracks"] = f.private_tracks;
  return j;
}

nlohmann::json EvalReport::summary_json() const {
  return {{"type", "summary"},
          {"engine", engine},
          {"frames", frames.size()},
          {"wall_s", wall_s},
          {"fps", fps},
          {"weighted_l1_mean", opt_json(weighted_l1_mean)},
          {"masked_mae_mean", opt_json(masked_mae_mean)},
          {"mask_area", {{"min", mask_area_min}, {"max", mask_area_max}, {"mean", mask_area_mean},
                         {"masked_frames", masked_frames}}},
          {"engine_failures", engine_failures}};
}

void append_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open report " + path.string());
  for (std::size_t i = 0; i < report.frames.size(); ++i) out << report.frame_json(i).dump() << '\n';
  out << report.summary_json().dump() << '\n';
  if (!out) throw IoError("write failed for report " + path.string());
}

EvalReport run_eval(const RunConfig& config, const EvalHooks& hooks) {
  config.validate();
  const SceneSpec scene = scene_for(config);
  const int w = scene.intrinsics.width;
  const int h = scene.intrinsics.height;
  auto engine = make_engine(config, w, h);

  std::unique_ptr<InpaintServer> server;
  std::unique_ptr<InpaintBackend> backend;
  if (hooks.make_backend) {
    backend = hooks.make_backend(engine);
  } else if (config.transport == "socket") {
    const std::string path = config.socket_path.empty()
                                 ? (std::filesystem::temp_directory_path() /
                                    ("veil-inpaint-" + std::to_string(::getpid()) + ".sock"))
                                       .string()
                                 : config.socket_path;
    server = std::make_unique<InpaintServer>(engine, path);
    backend = std::make_unique<StreamBackend>(connect_unix(path), w, h);
  } else {
    backend = std::make_unique<LocalBackend>(engine);
  }

  PipelineConfig pc;
  pc.intrinsics = scene.intrinsics;
  Pipeline pipeline(pc, std::make_unique<GroundTruthDetector>(DetectorNoise{config.dropout_prob, config.jitter_px,
                                                                            config.seed}),
                    std::move(backend));
  if (config.scripted_operator) {
    pipeline.queue().push(CalibrationMsg{Pose::identity()});
    pipeline.queue().push(ConfirmMsg{});
  }

  TrajectoryParams tp;
  tp.pan_rate_rad = config.pan_rate_rad;
  tp.orbit_radius = config.orbit_radius;
  const TrajectoryKind kind = parse_trajectory_kind(config.trajectory);

  std::set<int> hinted;
  for (const auto& o : scene.objects) {
    if (o.private_hint) hinted.insert(o.id);
  }
  std::set<int> toggled;

  EvalReport report;
  report.engine = engine->name();
  report.mask_area_min = std::numeric_limits<double>::infinity();
  const auto t_begin = Clock::now();
  for (int f = 0; f < config.frames; ++f) {
    const auto t0 = Clock::now();
    const RenderedFrame rf = render_frame(scene, camera_trajectory(kind, f, tp), f);
    const double capture_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    StepOutput out = pipeline.step(rf.frame, &rf.truth, capture_ms);

    FrameRecord rec;
    rec.timing = out.timing;
    rec.mask_area_fraction = out.mask.area_fraction();
    if (!out.mask.none()) {
      RgbImage target = rf.frame.rgb;
      for (const auto& [id, m] : rf.truth.object_masks) {
        if (!hinted.count(id)) continue;
        auto bits = m.bits();
        auto dst = target.data();
        auto bg = rf.truth.background_rgb.data();
        for (std::size_t p = 0; p < bits.size(); ++p) {
          if (!bits[p]) continue;
          for (int c = 0; c < 3; ++c) dst[3 * p + c] = bg[3 * p + c];
        }
      }
      rec.weighted_l1 = weighted_l1(out.inpainted, target, out.mask);
      rec.masked_mae = masked_mean_abs_error(out.inpainted, target, out.mask);
    }
    for (const auto& tr : pipeline.tracker().tracks()) {
      if (tr.state == PrivacyState::kPrivate) ++rec.private_tracks;
    }
    report.engine_failures += out.timing.engine_failed ? 1 : 0;
    report.frames.push_back(rec);

    if (config.scripted_operator) {
      for (const auto& tr : pipeline.tracker().tracks()) {
        if (tr.state != PrivacyState::kPublic || toggled.count(tr.id) || tr.missed_frames > 0) continue;
        for (int id : hinted) {
          auto it = rf.truth.object_masks.find(id);
          if (it != rf.truth.object_masks.end() && mask_iou(tr.latest.mask, it->second) >= 0.5) {
            pipeline.queue().push(ToggleMsg{tr.id});
            toggled.insert(tr.id);
            break;
          }
        }
      }
    }
    if (hooks.on_frame) hooks.on_frame(rf, out);
  }
  report.wall_s = std::chrono::duration<double>(Clock::now() - t_begin).count();
  report.fps = report.wall_s > 0.0 ? static_cast<double>(report.frames.size()) / report.wall_s : 0.0;
  report.weighted_l1_mean = mean_of(report.frames, &FrameRecord::weighted_l1);
  report.masked_mae_mean = mean_of(report.frames, &FrameRecord::masked_mae);
  double sum = 0.0;
  for (const auto& f : report.frames) {
    report.mask_area_min = std::min(report.mask_area_min, f.mask_area_fraction);
    report.mask_area_max = std::max(report.mask_area_max, f.mask_area_fraction);
    sum += f.mask_area_fraction;
    report.masked_frames += f.mask_area_fraction > 0.0 ? 1 : 0;
  }
  if (report.frames.empty()) report.mask_area_min = 0.0;
  report.mask_area_mean = report.frames.empty() ? 0.0 : sum / static_cast<double>(report.frames.size());

  if (!config.report_path.empty()) append_report(report, config.report_path);
  return report;
}

std::string error_line(const std::exception& e) {
  nlohmann::json j;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    j["error"] = to_string(err->kind());
  } else {
    j["error"] = "internal";
  }
  j["message"] = e.what();
  return j.dump();
}

}  // namespace veil

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

// Command-line entry point: simulate, serve, bench, export-ply,
// inpaint-server and fit.

#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "veil/cli.hpp"
#include "veil/error.hpp"
#include "veil/inpaint/dstt.hpp"
#include "veil/inpaint/fit.hpp"
#include "veil/inpaint_service.hpp"
#include "veil/redaction.hpp"
#include "veil/ws_protocol.hpp"
#include "veil/ws_server.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct Common {
  veil::RunConfig run;
  std::string config_file;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "JSON config file; its keys override flags")->check(CLI::ExistingFile);
  app->add_option("--scene", c.run.scene_path, "Scene JSON (default: built-in desk scene)");
  app->add_option("--engine", c.run.engine, "Inpainting engine: baseline or dstt")->capture_default_str();
  app->add_option("--weights", c.run.weights_path, "Model weights file (dstt)");
  app->add_option("--model-config", c.run.model_config_path, "Model config JSON (dstt)");
  app->add_option("--transport", c.run.transport, "Engine transport: local or socket")->capture_default_str();
  app->add_option("--socket-path", c.run.socket_path, "Unix socket for the socket transport");
  app->add_option("--trajectory", c.run.trajectory, "Camera path: static, pan or orbit")->capture_default_str();
  app->add_option("--pan-rate", c.run.pan_rate_rad, "Yaw per frame in radians (pan)");
  app->add_option("--orbit-radius", c.run.orbit_radius, "Orbit radius in meters (orbit)");
  app->add_option("--dropout", c.run.dropout_prob, "Detector dropout probability");
  app->add_option("--jitter", c.run.jitter_px, "Detector mask jitter in pixels");
  app->add_option("--frames", c.run.frames, "Number of frames")->capture_default_str();
  app->add_option("--seed", c.run.seed, "Seed for every seeded component")->capture_default_str();
  app->add_option("--report-path", c.run.report_path, "Append JSON-lines report here");
  app->add_flag("!--no-operator", c.run.scripted_operator, "Disable the scripted operator");
}

veil::RunConfig resolve(const Common& c) {
  veil::RunConfig cfg = c.run;
  if (!c.config_file.empty()) {
    std::ifstream in(c.config_file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw veil::ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    cfg = veil::run_config_from_json(j, cfg);
  }
  cfg.validate();
  return cfg;
}

int cmd_simulate(const Common& c) {
  const auto report = veil::run_eval(resolve(c));
  std::cout << report.summary_json().dump() << '\n';
  return 0;
}

int cmd_bench(const Common& c, const std::string& format) {
  const auto report = veil::run_eval(resolve(c));
  if (format == "json") {
    for (std::size_t i = 0; i < report.frames.size(); ++i) std::cout << report.frame_json(i).dump() << '\n';
    std::cout << report.summary_json().dump() << '\n';
  } else {
    std::cout << "engine " << report.engine << ": " << report.frames.size() << " frames, " << report.fps
              << " fps\n";
  }
  return 0;
}

int cmd_export_ply(const Common& c, int frame, const std::string& out) {
  veil::RunConfig cfg = resolve(c);
  if (frame < 0) throw veil::ConfigError("frame index must be non-negative");
  cfg.frames = frame + 1;
  bool written = false;
  veil::EvalHooks hooks;
  hooks.on_frame = [&](const veil::RenderedFrame& rf, const veil::StepOutput& step) {
    if (rf.frame.frame_id != frame) return;
    veil::export_ply(step.cloud, out);
    written = true;
  };
  veil::run_eval(cfg, hooks);
  if (!written) throw veil::IoError("frame was not produced");
  std::cout << nlohmann::json{{"ply", out}, {"frame", frame}}.dump() << '\n';
  return 0;
}

int cmd_serve(const Common& c, int port, const std::string& static_root, double fps) {
  veil::RunConfig cfg = resolve(c);
  cfg.port = port;
  if (!static_root.empty()) cfg.static_root = static_root;
  cfg.validate();
  if (!(fps > 0.0)) throw veil::ConfigError("fps must be positive");

  const veil::SceneSpec scene = veil::scene_for(cfg);
  veil::PipelineConfig pc;
  pc.intrinsics = scene.intrinsics;
  veil::Pipeline pipeline(
      pc, std::make_unique<veil::GroundTruthDetector>(veil::DetectorNoise{cfg.dropout_prob, cfg.jitter_px, cfg.seed}),
      std::make_unique<veil::LocalBackend>(veil::make_engine(cfg, scene.intrinsics.width, scene.intrinsics.height)));
  veil::WsServerOptions opts;
  opts.address = "0.0.0.0";
  opts.port = static_cast<std::uint16_t>(cfg.port);
  opts.static_root = cfg.static_root;
  veil::WsServer server(opts, pipeline.queue());
  std::cerr << nlohmann::json{{"listening", server.port()}}.dump() << std::endl;

  veil::TrajectoryParams tp;
  tp.pan_rate_rad = cfg.pan_rate_rad;
  tp.orbit_radius = cfg.orbit_radius;
  const auto kind = veil::parse_trajectory_kind(cfg.trajectory);
  const auto period = std::chrono::duration<double>(1.0 / fps);
  auto next = std::chrono::steady_clock::now();
  for (std::int64_t f = 0; !g_stop && (cfg.frames == 0 || f < cfg.frames); ++f) {
    const auto rf = veil::render_frame(scene, veil::camera_trajectory(kind, static_cast<double>(f), tp), f);
    const auto out = pipeline.step(rf.frame, &rf.truth);
    if (out.object_update) server.broadcast_text(*out.object_update);
    server.broadcast_binary(veil::encode_frame_msg(static_cast<std::uint64_t>(f), veil::encode_jpeg(out.privatized)));
    next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
    std::this_thread::sleep_until(next);
  }
  server.stop();
  return 0;
}

int cmd_inpaint_server(const Common& c, const std::string& socket_path) {
  const veil::RunConfig cfg = resolve(c);
  const veil::SceneSpec scene = veil::scene_for(cfg);
  veil::InpaintServer server(veil::make_engine(cfg, scene.intrinsics.width, scene.intrinsics.height), socket_path);
  std::cerr << nlohmann::json{{"listening", socket_path}}.dump() << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

int cmd_fit(const Common& c, int steps, double lr, int sequences, const std::string& out) {
  veil::RunConfig cfg = resolve(c);
  const veil::SceneSpec scene = veil::scene_for(cfg);
  const int w = scene.intrinsics.width;
  const int h = scene.intrinsics.height;
  veil::DsttConfig mc = veil::default_dstt_config(w, h);
  if (!cfg.model_config_path.empty()) {
    std::ifstream in(cfg.model_config_path);
    mc = veil::dstt_config_from_json(nlohmann::json::parse(in));
  }
  mc.validate();
  veil::DsttWeights weights = cfg.weights_path.empty() ? veil::DsttWeights::random(mc, cfg.seed)
                                                       : veil::load_weights(cfg.weights_path, mc);

  veil::TrajectoryParams tp;
  tp.pan_rate_rad = cfg.pan_rate_rad;
  tp.orbit_radius = cfg.orbit_radius;
  const auto kind = veil::parse_trajectory_kind(cfg.trajectory);
  std::vector<std::vector<veil::FitFrame>> data;
  for (int s = 0; s < sequences; ++s) {
    veil::MaskGenSpec ms;
    ms.width = w;
    ms.height = h;
    ms.kind = s % 2 ? veil::MaskKind::kStrokes : veil::MaskKind::kRectangle;
    ms.seed = cfg.seed + static_cast<std::uint64_t>(s);
    std::vector<veil::FitFrame> seq;
    for (int f = 0; f < cfg.frames; ++f) {
      const auto rf = veil::render_frame(scene, veil::camera_trajectory(kind, f, tp), f);
      veil::BinaryMask mask = veil::gen_mask(ms, f);
      veil::RgbImage redacted = rf.frame.rgb;
      veil::redact_in_place(redacted, mask);
      seq.push_back({std::move(redacted), std::move(mask), rf.frame.rgb});
    }
    data.push_back(std::move(seq));
  }
  const auto report = veil::fit_color_head(weights, mc, data, {steps, lr});
  if (!out.empty()) veil::save_weights(weights, out);
  std::cout << nlohmann::json{{"initial_loss", report.initial_loss},
                              {"final_loss", report.final_loss},
                              {"steps", report.steps},
                              {"weights", out}}
                   .dump()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale diminished reality pipeline"};
  app.require_subcommand(1);

  Common sim, bench, ply, serve, isrv, fit;
  auto* c_sim = app.add_subcommand("simulate", "Run the pipeline headless and print the summary");
  add_common(c_sim, sim);

  auto* c_bench = app.add_subcommand("bench", "Throughput run with per-frame timing records");
  add_common(c_bench, bench);
  std::string bench_format = "json";
  c_bench->add_option("--format", bench_format, "Output format: json or text")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();

  auto* c_ply = app.add_subcommand("export-ply", "Write the point cloud of one frame as ASCII PLY");
  add_common(c_ply, ply);
  int ply_frame = 0;
  std::string ply_out = "frame.ply";
  c_ply->add_option("--frame", ply_frame, "Frame index")->required();
  c_ply->add_option("--out", ply_out, "Output path")->capture_default_str();

  auto* c_serve = app.add_subcommand("serve", "Live pipeline with the websocket operator endpoint");
  add_common(c_serve, serve);
  int serve_port = 8080;
  std::string static_root;
  double serve_fps = 20.0;
  c_serve->add_option("--port", serve_port, "HTTP/websocket port")->capture_default_str();
  c_serve->add_option("--static-root", static_root, "Directory served at /");
  c_serve->add_option("--fps", serve_fps, "Frame pacing")->capture_default_str();

  auto* c_isrv = app.add_subcommand("inpaint-server", "Serve the inpainting engine on a unix socket");
  add_common(c_isrv, isrv);
  std::string socket_path = "/tmp/veil-inpaint.sock";
  c_isrv->add_option("--socket", socket_path, "Socket path")->capture_default_str();

  auto* c_fit = app.add_subcommand("fit", "Fit the model colour head on simulated frames");
  add_common(c_fit, fit);
  int fit_steps = 200;
  double fit_lr = 0.05;
  int fit_sequences = 2;
  std::string fit_out;
  c_fit->add_option("--steps", fit_steps, "Optimizer steps")->capture_default_str();
  c_fit->add_option("--lr", fit_lr, "Learning rate")->capture_default_str();
  c_fit->add_option("--sequences", fit_sequences, "Training sequences")->capture_default_str();
  c_fit->add_option("--out", fit_out, "Write fitted weights here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << nlohmann::json{{"error", "config"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  try {
    if (*c_sim) return cmd_simulate(sim);
    if (*c_bench) return cmd_bench(bench, bench_format);
    if (*c_ply) return cmd_export_ply(ply, ply_frame, ply_out);
    if (*c_serve) return cmd_serve(serve, serve_port, static_root, serve_fps);
    if (*c_isrv) return cmd_inpaint_server(isrv, socket_path);
    if (*c_fit) return cmd_fit(fit, fit_steps, fit_lr, fit_sequences, fit_out);
  } catch (const std::exception& e) {
    std::cerr << veil::error_line(e) << '\n';
    return dynamic_cast<const veil::ConfigError*>(&e) ? 2 : 1;
  }
  return 0;
}

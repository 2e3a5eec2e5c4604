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

#include "veil/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "veil/error.hpp"
#include "veil/redaction.hpp"
#include "veil/ws_protocol.hpp"

namespace veil {
namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

void ChangeQueue::push(OperatorMessage msg) {
  std::lock_guard lock(mu_);
  queue_.push_back(std::move(msg));
  ++pushed_;
}

std::vector<OperatorMessage> ChangeQueue::drain() {
  std::lock_guard lock(mu_);
  std::vector<OperatorMessage> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
  queue_.clear();
  consumed_ += out.size();
  return out;
}

std::uint64_t ChangeQueue::pushed() const {
  std::lock_guard lock(mu_);
  return pushed_;
}

std::uint64_t ChangeQueue::consumed() const {
  std::lock_guard lock(mu_);
  return consumed_;
}

void to_json(nlohmann::json& j, const StageTiming& t) {
  j = nlohmann::json{{"frame_id", t.frame_id},
                     {"capture_ms", t.capture_ms},
                     {"detect_ms", t.detect_ms},
                     {"redact_ms", t.redact_ms},
                     {"inpaint_prep_ms", t.inpaint_prep_ms},
                     {"inpaint_infer_ms", t.inpaint_infer_ms},
                     {"inpaint_post_ms", t.inpaint_post_ms},
                     {"transport_ms", t.transport_ms},
                     {"pointcloud_ms", t.pointcloud_ms},
                     {"total_ms", t.total_ms},
                     {"engine_failed", t.engine_failed}};
}

PointCloud transplant_pointcloud(const RgbImage& inpainted, const DepthImage& depth,
                                 const CameraIntrinsics& k) {
  if (!inpainted.same_size(depth)) throw InputError("colour and depth dimensions differ");
  PointCloud cloud;
  for (int v = 0; v < depth.height(); ++v) {
    const float* drow = depth.row(v);
    for (int u = 0; u < depth.width(); ++u) {
      const double d = drow[u];
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      cloud.points.emplace_back((u - k.cx) * d / k.fx, (v - k.cy) * d / k.fy, d);
      cloud.colors.push_back(pixel(inpainted, u, v));
    }
  }
  return cloud;
}

void export_ply(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    const auto& c = cloud.colors[i];
    out << fmt::format("{:.17g} {:.17g} {:.17g} {} {} {}\n", p.x(), p.y(), p.z(), c.r, c.g, c.b);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::size_t count = 0;
  bool have_count = false;
  if (!std::getline(in, line) || line != "ply") throw IoError("not a PLY file: " + path.string());
  while (std::getline(in, line) && line != "end_header") {
    if (line.rfind("element vertex ", 0) == 0) {
      count = std::stoul(line.substr(15));
      have_count = true;
    }
  }
  if (!have_count || line != "end_header") throw IoError("malformed PLY header in " + path.string());
  PointCloud cloud;
  cloud.points.reserve(count);
  cloud.colors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double x, y, z;
    int r, g, b;
    if (!(in >> x >> y >> z >> r >> g >> b)) throw IoError("truncated PLY body in " + path.string());
    cloud.points.emplace_back(x, y, z);
    cloud.colors.push_back({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)});
  }
  return cloud;
}

RgbImage upscale2x(const RgbImage& src) {
  const int w = src.width();
  const int h = src.height();
  RgbImage out(2 * w, 2 * h);
  if (w == 0 || h == 0) return out;
  for (int y = 0; y < h; ++y) {
    for (int dy = 0; dy < 2; ++dy) {
      const int yn = std::clamp(dy ? y + 1 : y - 1, 0, h - 1);
      const std::uint8_t* r0 = src.row(y);
      const std::uint8_t* r1 = src.row(yn);
      std::uint8_t* o = out.row(2 * y + dy);
      for (int x = 0; x < w; ++x) {
        const int xl = x > 0 ? x - 1 : 0;
        const int xr = x + 1 < w ? x + 1 : w - 1;
        for (int c = 0; c < 3; ++c) {
          const int a = r0[3 * x + c];
          const int b = r1[3 * x + c];
          o[6 * x + c] = static_cast<std::uint8_t>((9 * a + 3 * r0[3 * xl + c] + 3 * b + r1[3 * xl + c] + 8) >> 4);
          o[6 * x + 3 + c] =
              static_cast<std::uint8_t>((9 * a + 3 * r0[3 * xr + c] + 3 * b + r1[3 * xr + c] + 8) >> 4);
        }
      }
    }
  }
  return out;
}

Rgb upscale2x_at(const RgbImage& src, int ox, int oy) {
  const int x = ox / 2;
  const int y = oy / 2;
  const int xn = std::clamp(ox & 1 ? x + 1 : x - 1, 0, src.width() - 1);
  const int yn = std::clamp(oy & 1 ? y + 1 : y - 1, 0, src.height() - 1);
  const std::uint8_t* r0 = src.row(y);
  const std::uint8_t* r1 = src.row(yn);
  std::uint8_t v[3];
  for (int c = 0; c < 3; ++c) {
    v[c] = static_cast<std::uint8_t>(
        (9 * r0[3 * x + c] + 3 * r0[3 * xn + c] + 3 * r1[3 * x + c] + r1[3 * xn + c] + 8) >> 4);
  }
  return {v[0], v[1], v[2]};
}

BinaryMask upscale2x_nearest(const BinaryMask& src) {
  BinaryMask out(2 * src.width(), 2 * src.height());
  auto in = src.bits();
  auto bits = out.bits();
  const std::size_t ow = 2 * static_cast<std::size_t>(src.width());
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      const std::uint8_t b = in[static_cast<std::size_t>(y) * src.width() + x];
      const std::size_t o = 2 * static_cast<std::size_t>(y) * ow + 2 * static_cast<std::size_t>(x);
      bits[o] = bits[o + 1] = bits[o + ow] = bits[o + ow + 1] = b;
    }
  }
  return out;
}

ChangeSummary apply_changes(const std::vector<OperatorMessage>& messages, std::vector<TrackedObject>& tracks,
                            CalibrationState& calibration) {
  ChangeSummary s;
  for (const auto& msg : messages) {
    if (const auto* t = std::get_if<ToggleMsg>(&msg)) {
      auto it = std::find_if(tracks.begin(), tracks.end(), [&](const auto& tr) { return tr.id == t->id; });
      if (it == tracks.end()) {
        spdlog::warn("toggle for unknown object id {} discarded", t->id);
        ++s.toggles_discarded;
        continue;
      }
      it->state = it->state == PrivacyState::kPublic ? PrivacyState::kPrivate : PrivacyState::kPublic;
      ++s.toggles_applied;
    } else if (const auto* c = std::get_if<CalibrationMsg>(&msg)) {
      calibration.calibrate(c->pose, calibration.head());
      ++s.calibrations;
    } else {
      calibration.confirm();
      ++s.confirms;
    }
  }
  return s;
}

Pipeline::Pipeline(PipelineConfig config, std::unique_ptr<Detector> detector, std::unique_ptr<InpaintBackend> backend)
    : config_(config), detector_(std::move(detector)), backend_(std::move(backend)), tracker_(config.tracker) {
  config_.intrinsics.validate();
  if (!detector_ || !backend_) throw ConfigError("pipeline needs a detector and an inpainting backend");
  if (backend_->width() != config_.intrinsics.width || backend_->height() != config_.intrinsics.height) {
    throw ConfigError(fmt::format("engine resolution {}x{} does not match capture {}x{}", backend_->width(),
                                  backend_->height(), config_.intrinsics.width, config_.intrinsics.height));
  }
}

StepOutput Pipeline::step(const FrameRGBD& frame, const GroundTruth* truth, double capture_ms) {
  const auto t_start = Clock::now();
  StepOutput out;
  StageTiming& tm = out.timing;
  tm.frame_id = frame.frame_id;
  tm.capture_ms = capture_ms;
  if (!frame.rgb.same_size(config_.intrinsics.width, config_.intrinsics.height)) {
    throw InputError("frame does not match the configured capture resolution");
  }

  apply_changes(queue_.drain(), tracker_.tracks(), calibration_);

  auto t0 = Clock::now();
  const auto detections = detector_->detect(frame, truth);
  tracker_.associate(detections, frame.frame_id);
  if (calibration_.confirmed()) {
    for (auto& tr : tracker_.tracks()) {
      if (tr.missed_frames != 0) continue;
      try {
        const Box3D box = bbox3d_from_detection(tr.latest, frame.depth, config_.intrinsics);
        tr.bbox3d_center = box.center;
        tr.bbox3d_size = box.size;
        tr.has_box3d = true;
      } catch (const NoDepthError&) {
        // keep the previous box, if any
      }
    }
  }
  auto t1 = Clock::now();
  tm.detect_ms = ms_between(t0, t1);

  out.mask = merge_private_masks(tracker_.tracks(), frame.rgb.width(), frame.rgb.height());
  RgbImage redacted = frame.rgb;
  redact_in_place(redacted, out.mask);
  t0 = Clock::now();
  tm.redact_ms = ms_between(t1, t0);

  // The backend call covers inference and transport; both are reported by it.
  BackendResult r = backend_->process(static_cast<std::uint64_t>(frame.frame_id), redacted, out.mask);
  t1 = Clock::now();
  const double call_ms = ms_between(t0, t1);
  tm.inpaint_infer_ms = std::min(r.inference_ms, call_ms);
  tm.transport_ms = std::min(r.transport_ms, call_ms - tm.inpaint_infer_ms);
  tm.inpaint_prep_ms = std::max(0.0, call_ms - tm.inpaint_infer_ms - tm.transport_ms);
  tm.engine_failed = !r.ok;
  if (!r.ok) spdlog::warn("frame {}: inpainting failed, masked regions left black: {}", frame.frame_id, r.error);
  out.inpainted = r.ok ? std::move(r.rgb) : redacted;

  if (config_.upscale) {
    const BinaryMask mask_up = upscale2x_nearest(out.mask);
    out.privatized = upscale2x(frame.rgb);
    auto dst = out.privatized.data();
    auto bits = mask_up.bits();
    if (r.ok) {
      const std::size_t ow = static_cast<std::size_t>(mask_up.width());
      for (std::size_t p = 0; p < bits.size(); ++p) {
        if (!bits[p]) continue;
        const Rgb c = upscale2x_at(out.inpainted, static_cast<int>(p % ow), static_cast<int>(p / ow));
        dst[3 * p] = c.r;
        dst[3 * p + 1] = c.g;
        dst[3 * p + 2] = c.b;
      }
    } else {
      for (std::size_t p = 0; p < bits.size(); ++p) {
        if (bits[p]) dst[3 * p] = dst[3 * p + 1] = dst[3 * p + 2] = 0;
      }
    }
  } else {
    out.privatized = out.inpainted;
  }
  t0 = Clock::now();
  tm.inpaint_post_ms = ms_between(t1, t0);

  if (config_.build_pointcloud) {
    out.cloud = transplant_pointcloud(out.inpainted, frame.depth, config_.intrinsics);
    out.cloud.frame_id = frame.frame_id;
  }
  t1 = Clock::now();
  tm.pointcloud_ms = ms_between(t0, t1);

  if (calibration_.confirmed()) {
    out.object_update = serialize_object_update(tracker_.tracks(), calibration_, frame.frame_id);
  }
  tm.total_ms = capture_ms + ms_between(t_start, Clock::now());
  return out;
}

}  // namespace veil

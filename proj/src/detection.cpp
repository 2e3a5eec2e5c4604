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

#include "veil/detection.hpp"

#include <algorithm>
#include <tuple>

#include "veil/error.hpp"
#include "veil/rng.hpp"

namespace veil {
namespace {

BinaryMask shifted(const BinaryMask& m, int dx, int dy) {
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    const int sy = y - dy;
    if (sy < 0 || sy >= m.height()) continue;
    for (int x = 0; x < m.width(); ++x) {
      const int sx = x - dx;
      if (sx >= 0 && sx < m.width() && m.at(sx, sy)) out.set(x, y);
    }
  }
  return out;
}

bool rects_overlap(const PixelRect& a, const PixelRect& b) {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

}  // namespace

void DetectorNoise::validate() const {
  if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0)) throw ConfigError("dropout_prob must lie in [0, 1]");
  if (jitter_px < 0) throw ConfigError("jitter_px must be non-negative");
}

std::vector<Detection2D> detect(const FrameRGBD& frame, const GroundTruth& truth,
                                const DetectorNoise& noise) {
  noise.validate();
  const int w = frame.rgb.width();
  const int h = frame.rgb.height();
  if (!frame.depth.same_size(w, h)) throw InputError("frame rgb/depth dimension mismatch");
  for (const auto& [id, m] : truth.object_masks) {
    if (!m.same_size(w, h)) throw InputError("ground truth mask dimension mismatch");
  }

  std::vector<Detection2D> out;
  for (const auto& [id, mask] : truth.object_masks) {
    const std::uint64_t h0 = hash_combine(hash_combine(noise.seed, static_cast<std::uint64_t>(frame.frame_id)),
                                          static_cast<std::uint64_t>(id));
    if (noise.dropout_prob > 0.0 && unit_from_hash(h0) < noise.dropout_prob) continue;

    Detection2D det;
    auto label = truth.object_labels.find(id);
    det.class_label = label != truth.object_labels.end() ? label->second : "object";
    if (noise.jitter_px > 0) {
      const int span = 2 * noise.jitter_px + 1;
      const int dx = static_cast<int>(splitmix64(h0 ^ 0x1) % span) - noise.jitter_px;
      const int dy = static_cast<int>(splitmix64(h0 ^ 0x2) % span) - noise.jitter_px;
      det.mask = shifted(mask, dx, dy);
      det.confidence = 1.0 - 0.5 * unit_from_hash(splitmix64(h0 ^ 0x3));
    } else {
      det.mask = mask;
      det.confidence = 1.0;
    }
    det.bbox = det.mask.bounds();
    if (det.bbox.empty()) continue;
    out.push_back(std::move(det));
  }
  return out;
}

std::vector<Detection2D> GroundTruthDetector::detect(const FrameRGBD& frame, const GroundTruth* truth) {
  if (truth == nullptr) throw ConfigError("ground-truth detector requires simulator ground truth");
  return veil::detect(frame, *truth, noise_);
}

double estimate_region_depth(const DepthImage& depth, const PixelRect& bbox) {
  if (bbox.x < 0 || bbox.y < 0 || bbox.x + bbox.w > depth.width() || bbox.y + bbox.h > depth.height()) {
    throw InputError("region outside depth raster");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = bbox.y; y < bbox.y + bbox.h; ++y) {
    const float* row = depth.row(y);
    for (int x = bbox.x; x < bbox.x + bbox.w; ++x) {
      const float d = row[x];
      if (d > 0.0f) {
        sum += d;
        ++n;
      }
    }
  }
  if (n == 0) throw NoDepthError("no valid depth readings in region");
  return sum / static_cast<double>(n);
}

Box3D bbox3d_from_detection(const Detection2D& det, const DepthImage& depth,
                            const CameraIntrinsics& k) {
  const double d = estimate_region_depth(depth, det.bbox);
  const double u = det.bbox.x + (det.bbox.w - 1) / 2.0;
  const double v = det.bbox.y + (det.bbox.h - 1) / 2.0;
  const double width_m = det.bbox.w * d / k.fx;
  const double height_m = det.bbox.h * d / k.fy;
  const double depth_m = std::max(kMinBoxDepthM, kBoxDepthFraction * std::min(width_m, height_m));
  return {Point3((u - k.cx) * d / k.fx, (v - k.cy) * d / k.fy, d), Point3(width_m, height_m, depth_m)};
}

std::vector<TrackedObject> associate(const std::vector<TrackedObject>& tracks,
                                     const std::vector<Detection2D>& detections,
                                     std::int64_t frame_id, int& next_id,
                                     const TrackerConfig& config) {
  std::vector<TrackedObject> live = tracks;
  std::sort(live.begin(), live.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  struct Candidate {
    double iou;
    int track_idx;
    int det_idx;
  };
  std::vector<Candidate> candidates;
  for (int ti = 0; ti < static_cast<int>(live.size()); ++ti) {
    const auto& tr = live[static_cast<std::size_t>(ti)];
    for (int di = 0; di < static_cast<int>(detections.size()); ++di) {
      const auto& det = detections[static_cast<std::size_t>(di)];
      if (!rects_overlap(tr.latest.bbox, det.bbox)) continue;
      const double iou = mask_iou(tr.latest.mask, det.mask);
      if (iou >= config.iou_threshold) candidates.push_back({iou, ti, di});
    }
  }
  // Ties go to the lower track id (tracks are id-sorted), then the earlier detection.
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.iou, a.track_idx, a.det_idx) < std::tie(a.iou, b.track_idx, b.det_idx);
  });

  std::vector<char> track_used(live.size(), 0);
  std::vector<char> det_used(detections.size(), 0);
  for (const auto& c : candidates) {
    if (track_used[static_cast<std::size_t>(c.track_idx)] || det_used[static_cast<std::size_t>(c.det_idx)]) continue;
    track_used[static_cast<std::size_t>(c.track_idx)] = 1;
    det_used[static_cast<std::size_t>(c.det_idx)] = 1;
    auto& tr = live[static_cast<std::size_t>(c.track_idx)];
    tr.latest = detections[static_cast<std::size_t>(c.det_idx)];
    tr.missed_frames = 0;
    tr.last_seen_frame = frame_id;
  }

  std::vector<TrackedObject> out;
  out.reserve(live.size() + detections.size());
  for (std::size_t i = 0; i < live.size(); ++i) {
    auto& tr = live[i];
    if (!track_used[i]) ++tr.missed_frames;
    // A dropped track takes its privacy state with it.
    if (tr.missed_frames > config.max_missed_frames) continue;
    out.push_back(std::move(tr));
  }
  for (std::size_t di = 0; di < detections.size(); ++di) {
    if (det_used[di]) continue;
    TrackedObject tr;
    tr.id = next_id++;
    tr.class_label = detections[di].class_label;
    tr.latest = detections[di];
    tr.state = PrivacyState::kPublic;
    tr.last_seen_frame = frame_id;
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<int> Tracker::associate(const std::vector<Detection2D>& detections, std::int64_t frame_id) {
  std::vector<int> before;
  for (const auto& t : tracks_) before.push_back(t.id);
  tracks_ = veil::associate(tracks_, detections, frame_id, next_id_, config_);
  std::vector<int> dropped;
  for (int id : before) {
    if (find(id) == nullptr) dropped.push_back(id);
  }
  return dropped;
}

TrackedObject* Tracker::find(int id) {
  auto it = std::lower_bound(tracks_.begin(), tracks_.end(), id,
                             [](const TrackedObject& t, int v) { return t.id < v; });
  return it != tracks_.end() && it->id == id ? &*it : nullptr;
}

}  // namespace veil

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "support.hpp"
#include "veil/detection.hpp"
#include "veil/error.hpp"
#include "veil/scene_sim.hpp"

using namespace veil;

namespace {

BinaryMask rect_mask(int w, int h, PixelRect r) {
  BinaryMask m(w, h);
  for (int y = r.y; y < r.y + r.h; ++y)
    for (int x = r.x; x < r.x + r.w; ++x) m.set(x, y);
  return m;
}

Detection2D det_from(const BinaryMask& m, const std::string& label = "thing") {
  Detection2D d;
  d.class_label = label;
  d.mask = m;
  d.bbox = m.bounds();
  return d;
}

RenderedFrame single_object_frame(std::int64_t frame_id) {
  SceneSpec s;
  s.background.texture = TextureKind::kConstant;
  ObjectSpec o;
  o.id = 9;
  o.class_label = "mug";
  s.objects = {o};
  return render_frame(s, Pose::identity(), frame_id);
}

}  // namespace

TEST_CASE("zero noise returns ground truth") {
  const auto r = render_frame(default_desk_scene(), Pose::identity(), 0);
  REQUIRE(r.truth.object_masks.size() == 3);
  const auto dets = detect(r.frame, r.truth, {});
  REQUIRE(dets.size() == 3);
  std::size_t i = 0;
  for (const auto& [id, m] : r.truth.object_masks) {
    CHECK(dets[i].mask == m);
    CHECK(dets[i].bbox == m.bounds());
    CHECK(dets[i].confidence == 1.0);
    CHECK(dets[i].class_label == r.truth.object_labels.at(id));
    ++i;
  }
}

TEST_CASE("dropout") {
  const auto r = render_frame(default_desk_scene(), Pose::identity(), 0);
  CHECK(detect(r.frame, r.truth, {1.0, 0, 5}).empty());

  int count = 0;
  for (int f = 0; f < 1000; ++f) {
    auto one = single_object_frame(0);
    one.frame.frame_id = f;
    count += static_cast<int>(detect(one.frame, one.truth, {0.5, 0, 42}).size());
  }
  CHECK(count >= 450);
  CHECK(count <= 550);
}

TEST_CASE("noise is deterministic and keeps bbox tight") {
  const auto r = render_frame(default_desk_scene(), Pose::identity(), 17);
  const DetectorNoise noise{0.2, 3, 99};
  const auto a = detect(r.frame, r.truth, noise);
  const auto b = detect(r.frame, r.truth, noise);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mask == b[i].mask);
    CHECK(a[i].bbox == a[i].mask.bounds());
    CHECK_FALSE(a[i].mask.none());
    CHECK(a[i].confidence >= 0.0);
    CHECK(a[i].confidence <= 1.0);
  }
}

TEST_CASE("detector input validation") {
  auto r = render_frame(default_desk_scene(), Pose::identity(), 0);
  CHECK_THROWS_AS(detect(r.frame, r.truth, {1.5, 0, 0}), ConfigError);
  CHECK_THROWS_AS(detect(r.frame, r.truth, {0.0, -1, 0}), ConfigError);
  r.truth.object_masks.begin()->second = BinaryMask(10, 10);
  CHECK_THROWS_AS(detect(r.frame, r.truth, {}), InputError);
  GroundTruthDetector gt({});
  CHECK_THROWS_AS(gt.detect(r.frame, nullptr), ConfigError);
}

TEST_CASE("estimate_region_depth examples") {
  DepthImage d(20, 10, 2.0f);
  CHECK(estimate_region_depth(d, {0, 0, 20, 10}) == 2.0);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x) d.at(x, y) = x < 10 ? 1.0f : 3.0f;
  CHECK(estimate_region_depth(d, {0, 0, 20, 10}) == 2.0);
  DepthImage none(4, 4, 0.0f);
  CHECK_THROWS_AS(estimate_region_depth(none, {0, 0, 4, 4}), NoDepthError);
  CHECK_THROWS_AS(estimate_region_depth(d, {15, 0, 10, 10}), InputError);
}

TEST_CASE("occluder pulls the depth estimate toward the viewer") {
  // A 3 m object box, half covered by a 1 m occluder.
  SceneSpec s;
  s.background.texture = TextureKind::kConstant;
  s.background.depth = 4.0;
  // Centres sit on pixel boundaries so the projections have even extents.
  ObjectSpec far;
  far.id = 1;
  far.class_label = "oven";
  far.center_x = -0.003;
  far.center_y = -0.003;
  far.half_w = 0.5997;
  far.half_h = 0.2997;
  far.depth = 3.0;
  ObjectSpec near = far;
  near.id = 2;
  near.class_label = "person";
  near.center_x = -0.101;
  near.center_y = -0.001;
  near.half_w = 0.0999;
  near.half_h = 0.2;
  near.depth = 1.0;
  s.objects = {far, near};
  const auto r = render_frame(s, Pose::identity(), 0);
  // far covers [220, 420) × [130, 230); near covers its left half.
  const PixelRect box{220, 130, 200, 100};
  const int occluded = [&] {
    int n = 0;
    for (int y = box.y; y < box.y + box.h; ++y)
      for (int x = box.x; x < box.x + box.w; ++x) n += r.frame.depth.at(x, y) == 1.0f;
    return n;
  }();
  REQUIRE(occluded == box.area() / 2);
  REQUIRE(r.truth.object_masks.at(1).area() == static_cast<std::size_t>(box.area() / 2));
  CHECK(std::abs(estimate_region_depth(r.frame.depth, box) - 2.0) < 1e-6);

  Detection2D det = det_from(rect_mask(640, 360, box), "oven");
  const Box3D b = bbox3d_from_detection(det, r.frame.depth, s.intrinsics);
  CHECK(std::abs(b.center.z() - 2.0) < 1e-6);
}

TEST_CASE("estimate_region_depth matches a brute-force mean") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.2f, 8.0f);
  std::bernoulli_distribution invalid(0.2);
  for (int trial = 0; trial < 200; ++trial) {
    DepthImage d(37, 23);
    for (auto& v : d.data()) v = invalid(rng) ? 0.0f : u(rng);
    std::uniform_int_distribution<int> px(0, 36), py(0, 22);
    int x0 = px(rng), x1 = px(rng), y0 = py(rng), y1 = py(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    const PixelRect r{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    double sum = 0.0;
    int n = 0;
    for (int y = r.y; y < r.y + r.h; ++y)
      for (int x = r.x; x < r.x + r.w; ++x)
        if (d.at(x, y) > 0.0f) sum += d.at(x, y), ++n;
    if (n == 0) {
      CHECK_THROWS_AS(estimate_region_depth(d, r), NoDepthError);
    } else {
      CHECK(estimate_region_depth(d, r) == sum / n);
    }
  }
}

TEST_CASE("bbox3d back-projection") {
  const CameraIntrinsics k;
  DepthImage d(640, 360, 2.0f);
  // 21×21 box centred on the principal point.
  auto det = det_from(rect_mask(640, 360, {310, 170, 21, 21}));
  Box3D b = bbox3d_from_detection(det, d, k);
  CHECK(b.center.x() == 0.0);
  CHECK(b.center.y() == 0.0);
  CHECK(b.center.z() == 2.0);
  CHECK(std::abs(b.size.x() - 21 * 2.0 / 500.0) < 1e-12);
  CHECK(b.size.z() == kMinBoxDepthM);

  det = det_from(rect_mask(640, 360, {410, 170, 21, 21}));
  b = bbox3d_from_detection(det, d, k);
  CHECK(std::abs(b.center.x() - 0.4) < 1e-12);

  det = det_from(rect_mask(640, 360, {100, 50, 400, 200}));
  b = bbox3d_from_detection(det, d, k);
  CHECK(std::abs(b.size.z() - kBoxDepthFraction * 200 * 2.0 / 500.0) < 1e-12);
}

TEST_CASE("tracker keeps ids for stable detections") {
  Tracker t;
  const std::vector<Detection2D> dets = {det_from(rect_mask(64, 64, {0, 0, 10, 10})),
                                         det_from(rect_mask(64, 64, {30, 30, 10, 10}))};
  t.associate(dets, 0);
  REQUIRE(t.tracks().size() == 2);
  const int a = t.tracks()[0].id, b = t.tracks()[1].id;
  for (int f = 1; f < 50; ++f) {
    t.associate(dets, f);
    REQUIRE(t.tracks().size() == 2);
    CHECK(t.tracks()[0].id == a);
    CHECK(t.tracks()[1].id == b);
    CHECK(t.tracks()[0].missed_frames == 0);
  }
}

TEST_CASE("lost private track returns as a new public one") {
  Tracker t;
  const std::vector<Detection2D> dets = {det_from(rect_mask(64, 64, {5, 5, 10, 10}))};
  t.associate(dets, 0);
  const int id = t.tracks()[0].id;
  t.find(id)->state = PrivacyState::kPrivate;

  // Exactly N_loss misses keep the track alive.
  for (int f = 1; f <= 15; ++f) CHECK(t.associate({}, f).empty());
  REQUIRE(t.find(id) != nullptr);
  CHECK(t.find(id)->missed_frames == 15);
  CHECK(t.find(id)->state == PrivacyState::kPrivate);
  t.associate(dets, 16);
  CHECK(t.find(id)->missed_frames == 0);
  CHECK(t.find(id)->state == PrivacyState::kPrivate);

  for (int f = 17; f <= 32; ++f) t.associate({}, f);
  CHECK(t.find(id) == nullptr);
  t.associate(dets, 33);
  REQUIRE(t.tracks().size() == 1);
  CHECK(t.tracks()[0].id > id);
  CHECK(t.tracks()[0].state == PrivacyState::kPublic);
}

TEST_CASE("equal IoU goes to the lower track id") {
  // Two identical tracks and one detection overlapping both equally.
  std::vector<TrackedObject> tracks(2);
  tracks[0].id = 4;
  tracks[1].id = 2;
  for (auto& tr : tracks) tr.latest = det_from(rect_mask(32, 32, {0, 0, 8, 8}));
  const std::vector<Detection2D> dets = {det_from(rect_mask(32, 32, {0, 0, 8, 8}))};
  int next = 10;
  const auto out = associate(tracks, dets, 1, next);
  REQUIRE(out.size() == 2);
  CHECK(out[0].id == 2);
  CHECK(out[0].missed_frames == 0);
  CHECK(out[1].id == 4);
  CHECK(out[1].missed_frames == 1);
  CHECK(next == 10);
}

TEST_CASE("below-threshold overlap spawns a new track") {
  Tracker t;
  t.associate({det_from(rect_mask(64, 64, {0, 0, 10, 10}))}, 0);
  // IoU 25/175 < 0.3
  t.associate({det_from(rect_mask(64, 64, {5, 5, 10, 10}))}, 1);
  CHECK(t.tracks().size() == 2);
}

TEST_CASE("tracker properties under noisy detections") {
  const SceneSpec scene = default_desk_scene();
  Tracker t;
  std::set<int> seen;
  int last_max = 0;
  std::set<int> ids0;
  for (int f = 0; f < 60; ++f) {
    auto r = render_frame(scene, Pose::identity(), f);
    for (auto& tr : t.tracks()) tr.state = tr.id % 2 ? PrivacyState::kPrivate : PrivacyState::kPublic;
    t.associate(detect(r.frame, r.truth, {0.3, 2, 11}), f);
    std::set<int> live;
    for (const auto& tr : t.tracks()) {
      CHECK(live.insert(tr.id).second);
      if (!seen.count(tr.id)) {
        CHECK(tr.id > last_max);
        last_max = tr.id;
        seen.insert(tr.id);
      } else {
        // state survives detection noise while the track lives
        CHECK(tr.state == (tr.id % 2 ? PrivacyState::kPrivate : PrivacyState::kPublic));
      }
    }
  }
  // zero noise, static scene: id set constant
  Tracker z;
  for (int f = 0; f < 40; ++f) {
    auto r = render_frame(scene, Pose::identity(), f);
    z.associate(detect(r.frame, r.truth, {}), f);
    std::set<int> ids;
    for (const auto& tr : z.tracks()) ids.insert(tr.id);
    if (f == 0) ids0 = ids;
    CHECK(ids == ids0);
  }
}

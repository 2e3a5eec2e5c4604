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

#include "veil/scene_sim.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>

#include <Eigen/Geometry>

#include "veil/error.hpp"
#include "veil/rng.hpp"

namespace veil {
namespace {

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

Rgb jitter(Rgb base, std::uint64_t h, int amplitude) {
  if (amplitude <= 0) return base;
  const double off = (unit_from_hash(h) * 2.0 - 1.0) * amplitude;
  return {clamp_u8(base.r + off), clamp_u8(base.g + off), clamp_u8(base.b + off)};
}

Rgb background_color(const BackgroundSpec& bg, std::uint64_t seed, double x, double y) {
  switch (bg.texture) {
    case TextureKind::kConstant:
      return bg.color_a;
    case TextureKind::kHorizontalGradient: {
      const double f = std::clamp((x + 0.5 * bg.span_m) / bg.span_m, 0.0, 1.0);
      auto lerp = [f](std::uint8_t a, std::uint8_t b) { return clamp_u8(a + (b - a) * f); };
      return {lerp(bg.color_a.r, bg.color_b.r), lerp(bg.color_a.g, bg.color_b.g),
              lerp(bg.color_a.b, bg.color_b.b)};
    }
    case TextureKind::kChecker: {
      const auto ix = static_cast<std::int64_t>(std::floor(x / bg.cell_m));
      const auto iy = static_cast<std::int64_t>(std::floor(y / bg.cell_m));
      const Rgb base = ((ix + iy) & 1) ? bg.color_b : bg.color_a;
      const std::uint64_t h = hash_combine(hash_combine(seed, static_cast<std::uint64_t>(ix)),
                                           static_cast<std::uint64_t>(iy));
      return jitter(base, h, bg.noise);
    }
  }
  return bg.color_a;
}

struct PlacedObject {
  const ObjectSpec* spec;
  double cx, cy;
};

bool inside(const PlacedObject& o, double x, double y) {
  const double dx = (x - o.cx) / o.spec->half_w;
  const double dy = (y - o.cy) / o.spec->half_h;
  if (o.spec->shape == ShapeKind::kRectangle) return std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
  return dx * dx + dy * dy <= 1.0;
}

constexpr double kTexel = 0.01;  // object texture cell, meters

Rgb object_color(const PlacedObject& o, std::uint64_t seed, double x, double y) {
  const auto tx = static_cast<std::int64_t>(std::floor((x - o.cx) / kTexel));
  const auto ty = static_cast<std::int64_t>(std::floor((y - o.cy) / kTexel));
  std::uint64_t h = hash_combine(seed, static_cast<std::uint64_t>(o.spec->id) + 0x51ed);
  h = hash_combine(hash_combine(h, static_cast<std::uint64_t>(tx)), static_cast<std::uint64_t>(ty));
  return jitter(o.spec->albedo, h, o.spec->texture_noise);
}

// Memoizes the last cell looked up; neighbouring pixels mostly share one.
struct CellCache {
  std::int64_t key_a = std::numeric_limits<std::int64_t>::min();
  std::int64_t key_b = 0;
  std::int64_t key_c = 0;
  Rgb color;

  template <typename F>
  Rgb get(std::int64_t a, std::int64_t b, std::int64_t c, F&& compute) {
    if (a != key_a || b != key_b || c != key_c) {
      key_a = a;
      key_b = b;
      key_c = c;
      color = compute();
    }
    return color;
  }
};

Rgb parse_rgb(const nlohmann::json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 3) throw ConfigError("color must have 3 components");
  for (int c : v)
    if (c < 0 || c > 255) throw ConfigError("color component out of range");
  return {static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]),
          static_cast<std::uint8_t>(v[2])};
}

nlohmann::json rgb_json(Rgb c) { return {c.r, c.g, c.b}; }

TextureKind parse_texture(const std::string& s) {
  if (s == "constant") return TextureKind::kConstant;
  if (s == "horizontal-gradient") return TextureKind::kHorizontalGradient;
  if (s == "checker") return TextureKind::kChecker;
  throw ConfigError("unknown background texture '" + s + "'");
}

const char* texture_name(TextureKind k) {
  switch (k) {
    case TextureKind::kConstant: return "constant";
    case TextureKind::kHorizontalGradient: return "horizontal-gradient";
    case TextureKind::kChecker: return "checker";
  }
  return "constant";
}

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("degenerate intrinsics: focal length must be positive");
  if (width <= 0 || height <= 0) throw ConfigError("degenerate intrinsics: empty image");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw ConfigError("principal point outside the image");
  }
}

void SceneSpec::validate() const {
  intrinsics.validate();
  if (!(background.depth > 0.0)) throw ConfigError("background depth must be positive");
  if (background.texture == TextureKind::kChecker && !(background.cell_m > 0.0))
    throw ConfigError("checker cell size must be positive");
  if (background.texture == TextureKind::kHorizontalGradient && !(background.span_m > 0.0))
    throw ConfigError("gradient span must be positive");
  std::set<int> ids;
  for (const auto& o : objects) {
    if (!ids.insert(o.id).second) throw ConfigError("duplicate object id " + std::to_string(o.id));
    if (o.class_label.empty()) throw ConfigError("object " + std::to_string(o.id) + " has no class label");
    if (!(o.depth > 0.0)) throw ConfigError("object depth must be positive");
    if (!(o.depth < background.depth)) throw ConfigError("object depth must be less than background depth");
    if (!(o.half_w > 0.0 && o.half_h > 0.0)) throw ConfigError("object extents must be positive");
  }
  // Every object must cover at least one pixel from the identity pose at frame 0.
  SceneSpec probe = *this;
  probe.background.texture = TextureKind::kConstant;
  const auto rendered = render_frame(probe, Pose::identity(), 0);
  for (const auto& o : objects) {
    auto it = rendered.truth.object_masks.find(o.id);
    if (it == rendered.truth.object_masks.end()) {
      // It may be fully hidden by a nearer object; that is allowed, but it
      // must still project onto the raster on its own.
      SceneSpec alone = probe;
      alone.objects = {o};
      if (render_frame(alone, Pose::identity(), 0).truth.object_masks.empty())
        throw ConfigError("object " + std::to_string(o.id) + " projects to no pixels");
    }
  }
}

RenderedFrame render_frame(const SceneSpec& spec, const Pose& camera_pose, std::int64_t frame_id) {
  const CameraIntrinsics& k = spec.intrinsics;
  k.validate();
  const int w = k.width;
  const int h = k.height;

  RenderedFrame out;
  out.frame.rgb = RgbImage(w, h);
  out.frame.depth = DepthImage(w, h, 0.0f);
  out.frame.frame_id = frame_id;
  out.frame.timestamp_ns = frame_id * kFramePeriodNs;
  out.truth.background_rgb = RgbImage(w, h);

  std::vector<PlacedObject> placed;
  placed.reserve(spec.objects.size());
  for (const auto& o : spec.objects) {
    placed.push_back({&o, o.center_x + o.velocity_x * static_cast<double>(frame_id),
                      o.center_y + o.velocity_y * static_cast<double>(frame_id)});
  }
  std::vector<int> owner(static_cast<std::size_t>(w) * h, -1);

  CellCache bg_cache;
  CellCache obj_cache;
  const Mat3& r = camera_pose.rotation();
  const Point3& t = camera_pose.translation();
  for (int v = 0; v < h; ++v) {
    const double yc = (v - k.cy) / k.fy;
    for (int u = 0; u < w; ++u) {
      const double xc = (u - k.cx) / k.fx;
      // World-space ray; the camera-frame direction has unit z, so the ray
      // parameter at a hit is the camera-frame depth.
      const Point3 dir = r * Point3(xc, yc, 1.0);
      if (!(dir.z() > 1e-12)) continue;

      const double s_bg = (spec.background.depth - t.z()) / dir.z();
      if (s_bg <= 0.0) continue;
      const double bx = t.x() + s_bg * dir.x();
      const double by = t.y() + s_bg * dir.y();
      Rgb bg;
      if (spec.background.texture == TextureKind::kChecker) {
        const auto ix = static_cast<std::int64_t>(std::floor(bx / spec.background.cell_m));
        const auto iy = static_cast<std::int64_t>(std::floor(by / spec.background.cell_m));
        bg = bg_cache.get(ix, iy, 0, [&] { return background_color(spec.background, spec.seed, bx, by); });
      } else {
        bg = background_color(spec.background, spec.seed, bx, by);
      }
      set_pixel(out.truth.background_rgb, u, v, bg);

      double best = s_bg;
      int best_idx = -1;
      for (std::size_t i = 0; i < placed.size(); ++i) {
        const double s = (placed[i].spec->depth - t.z()) / dir.z();
        if (s <= 0.0 || s >= best) continue;
        if (inside(placed[i], t.x() + s * dir.x(), t.y() + s * dir.y())) {
          best = s;
          best_idx = static_cast<int>(i);
        }
      }
      out.frame.depth.at(u, v) = static_cast<float>(best);
      if (best_idx < 0) {
        set_pixel(out.frame.rgb, u, v, bg);
      } else {
        const auto& o = placed[static_cast<std::size_t>(best_idx)];
        const double ox = t.x() + best * dir.x();
        const double oy = t.y() + best * dir.y();
        const auto tx = static_cast<std::int64_t>(std::floor((ox - o.cx) / kTexel));
        const auto ty = static_cast<std::int64_t>(std::floor((oy - o.cy) / kTexel));
        set_pixel(out.frame.rgb, u, v,
                  obj_cache.get(tx, ty, best_idx, [&] { return object_color(o, spec.seed, ox, oy); }));
        owner[static_cast<std::size_t>(v) * w + u] = best_idx;
      }
    }
  }

  for (std::size_t i = 0; i < placed.size(); ++i) {
    BinaryMask m(w, h);
    auto bits = m.bits();
    bool any = false;
    for (std::size_t p = 0; p < owner.size(); ++p) {
      if (owner[p] == static_cast<int>(i)) {
        bits[p] = 1;
        any = true;
      }
    }
    if (!any) continue;
    out.truth.object_masks.emplace(placed[i].spec->id, std::move(m));
    out.truth.object_labels.emplace(placed[i].spec->id, placed[i].spec->class_label);
  }
  return out;
}

TrajectoryKind parse_trajectory_kind(const std::string& name) {
  if (name == "static") return TrajectoryKind::kStatic;
  if (name == "pan") return TrajectoryKind::kPan;
  if (name == "orbit") return TrajectoryKind::kOrbit;
  throw ConfigError("unknown trajectory kind '" + name + "'");
}

Pose camera_trajectory(TrajectoryKind kind, double t, const TrajectoryParams& params) {
  if (!(t >= 0.0)) throw InputError("trajectory time must be non-negative");
  switch (kind) {
    case TrajectoryKind::kStatic:
      return Pose::from_translation(params.origin);
    case TrajectoryKind::kPan:
      return {rotation_about_axis(Point3::UnitY(), params.pan_rate_rad * t), params.origin};
    case TrajectoryKind::kOrbit: {
      if (!(params.orbit_period > 0.0)) throw ConfigError("orbit period must be positive");
      const double theta = 2.0 * std::numbers::pi * t / params.orbit_period;
      const Point3 offset(params.orbit_radius * std::cos(theta),
                          params.orbit_radius * std::sin(theta), 0.0);
      return Pose::from_translation(params.origin + offset);
    }
  }
  throw ConfigError("unknown trajectory kind");
}

SceneSpec scene_from_json(const nlohmann::json& j) {
  try {
    SceneSpec s;
    if (j.contains("intrinsics")) {
      const auto& k = j.at("intrinsics");
      s.intrinsics.width = k.value("width", s.intrinsics.width);
      s.intrinsics.height = k.value("height", s.intrinsics.height);
      s.intrinsics.fx = k.value("fx", s.intrinsics.fx);
      s.intrinsics.fy = k.value("fy", s.intrinsics.fy);
      s.intrinsics.cx = k.value("cx", s.intrinsics.width / 2.0);
      s.intrinsics.cy = k.value("cy", s.intrinsics.height / 2.0);
    }
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("background")) {
      const auto& b = j.at("background");
      s.background.depth = b.value("depth", s.background.depth);
      s.background.texture = parse_texture(b.value("texture", std::string("checker")));
      if (b.contains("color_a")) s.background.color_a = parse_rgb(b.at("color_a"));
      if (b.contains("color_b")) s.background.color_b = parse_rgb(b.at("color_b"));
      s.background.span_m = b.value("span_m", s.background.span_m);
      s.background.cell_m = b.value("cell_m", s.background.cell_m);
      s.background.noise = b.value("noise", s.background.noise);
    }
    for (const auto& o : j.value("objects", nlohmann::json::array())) {
      ObjectSpec spec;
      spec.id = o.at("id").get<int>();
      spec.class_label = o.at("class").get<std::string>();
      const std::string shape = o.value("shape", std::string("rectangle"));
      if (shape == "rectangle") spec.shape = ShapeKind::kRectangle;
      else if (shape == "ellipse") spec.shape = ShapeKind::kEllipse;
      else throw ConfigError("unknown shape '" + shape + "'");
      const auto c = o.at("center").get<std::vector<double>>();
      const auto hs = o.at("half_size").get<std::vector<double>>();
      if (c.size() != 2 || hs.size() != 2) throw ConfigError("center and half_size need 2 values");
      spec.center_x = c[0];
      spec.center_y = c[1];
      spec.half_w = hs[0];
      spec.half_h = hs[1];
      spec.depth = o.at("depth").get<double>();
      if (o.contains("albedo")) spec.albedo = parse_rgb(o.at("albedo"));
      spec.texture_noise = o.value("texture_noise", 0);
      if (o.contains("velocity")) {
        const auto v = o.at("velocity").get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("velocity needs 2 values");
        spec.velocity_x = v[0];
        spec.velocity_y = v[1];
      }
      spec.private_hint = o.value("private", false);
      s.objects.push_back(std::move(spec));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scene JSON: ") + e.what());
  }
}

nlohmann::json scene_to_json(const SceneSpec& s) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : s.objects) {
    objects.push_back({{"id", o.id},
                       {"class", o.class_label},
                       {"shape", o.shape == ShapeKind::kRectangle ? "rectangle" : "ellipse"},
                       {"center", {o.center_x, o.center_y}},
                       {"half_size", {o.half_w, o.half_h}},
                       {"depth", o.depth},
                       {"albedo", rgb_json(o.albedo)},
                       {"texture_noise", o.texture_noise},
                       {"velocity", {o.velocity_x, o.velocity_y}},
                       {"private", o.private_hint}});
  }
  const auto& k = s.intrinsics;
  return {{"seed", s.seed},
          {"intrinsics",
           {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}}},
          {"background",
           {{"depth", s.background.depth},
            {"texture", texture_name(s.background.texture)},
            {"color_a", rgb_json(s.background.color_a)},
            {"color_b", rgb_json(s.background.color_b)},
            {"span_m", s.background.span_m},
            {"cell_m", s.background.cell_m},
            {"noise", s.background.noise}}},
          {"objects", objects}};
}

SceneSpec load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scene file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scene JSON: ") + e.what());
  }
  SceneSpec s = scene_from_json(j);
  s.validate();
  return s;
}

SceneSpec default_desk_scene(int width, int height) {
  SceneSpec s;
  const double scale = width / 640.0;
  s.intrinsics = {500.0 * scale, 500.0 * scale, width / 2.0, height / 2.0, width, height};
  s.seed = 7;
  s.background = {3.0, TextureKind::kChecker, {120, 110, 95}, {170, 160, 140}, 4.0, 0.3, 10};
  // The cup sits slightly in front of the laptop so the scene exercises occlusion.
  s.objects = {
      {1, "laptop", ShapeKind::kRectangle, -0.55, 0.15, 0.35, 0.22, 2.2, {60, 60, 70}, 18, 0.0, 0.0, true},
      {2, "cup", ShapeKind::kEllipse, -0.25, 0.3, 0.09, 0.12, 1.6, {220, 40, 40}, 25, 0.0, 0.0, false},
      {3, "book", ShapeKind::kRectangle, 0.65, -0.1, 0.25, 0.3, 2.5, {40, 90, 200}, 20, 0.0, 0.0, true},
  };
  return s;
}

}  // namespace veil

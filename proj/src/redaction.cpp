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

#include "veil/redaction.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "veil/error.hpp"
#include "veil/rng.hpp"

namespace veil {
namespace {

void stamp_segment(BinaryMask& m, double x0, double y0, double x1, double y1, double radius) {
  const int xmin = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - radius)));
  const int xmax = std::min(m.width() - 1, static_cast<int>(std::ceil(std::max(x0, x1) + radius)));
  const int ymin = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - radius)));
  const int ymax = std::min(m.height() - 1, static_cast<int>(std::ceil(std::max(y0, y1) + radius)));
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const double len2 = dx * dx + dy * dy;
  const double r2 = radius * radius;
  for (int y = ymin; y <= ymax; ++y) {
    for (int x = xmin; x <= xmax; ++x) {
      double t = len2 > 0.0 ? ((x - x0) * dx + (y - y0) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = x0 + t * dx - x;
      const double ey = y0 + t * dy - y;
      if (ex * ex + ey * ey <= r2) m.set(x, y);
    }
  }
}

BinaryMask rectangle_mask(const MaskGenSpec& s, Rng& rng) {
  const double n = static_cast<double>(s.width) * s.height;
  const double frac = rng.uniform(s.area_min, s.area_max);
  const double aspect = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
  int w = static_cast<int>(std::lround(std::sqrt(frac * n * aspect)));
  w = std::clamp(w, 1, s.width);
  int h = static_cast<int>(std::lround(frac * n / w));
  h = std::clamp(h, 1, s.height);
  const int x = rng.uniform_int(0, s.width - w);
  const int y = rng.uniform_int(0, s.height - h);
  BinaryMask m(s.width, s.height);
  for (int yy = y; yy < y + h; ++yy)
    for (int xx = x; xx < x + w; ++xx) m.set(xx, yy);
  return m;
}

BinaryMask stroke_mask(const MaskGenSpec& s, Rng& rng) {
  BinaryMask m(s.width, s.height);
  const int strokes = rng.uniform_int(s.strokes_min, s.strokes_max);
  const double max_step = 0.35 * std::min(s.width, s.height);
  for (int i = 0; i < strokes; ++i) {
    const double radius = 0.5 * rng.uniform_int(s.thickness_min, s.thickness_max);
    const int vertices = rng.uniform_int(2, 6);
    double x = rng.uniform(0.0, s.width - 1.0);
    double y = rng.uniform(0.0, s.height - 1.0);
    for (int v = 1; v < vertices; ++v) {
      const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      const double step = rng.uniform(0.3, 1.0) * max_step;
      const double nx = std::clamp(x + step * std::cos(angle), 0.0, s.width - 1.0);
      const double ny = std::clamp(y + step * std::sin(angle), 0.0, s.height - 1.0);
      stamp_segment(m, x, y, nx, ny, radius);
      x = nx;
      y = ny;
    }
  }
  if (m.none()) m.set(s.width / 2, s.height / 2);
  return m;
}

}  // namespace

BinaryMask merge_private_masks(const std::vector<TrackedObject>& tracks, int width, int height) {
  BinaryMask out(width, height);
  auto dst = out.bits();
  for (const auto& t : tracks) {
    if (t.state != PrivacyState::kPrivate) continue;
    if (!t.latest.mask.same_size(width, height)) throw InputError("private mask dimension mismatch");
    auto src = t.latest.mask.bits();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] |= src[i];
  }
  return out;
}

void redact_in_place(RgbImage& rgb, const BinaryMask& mask) {
  if (!mask.same_size(rgb)) throw InputError("redaction mask dimension mismatch");
  auto bits = mask.bits();
  auto px = rgb.data();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) {
      px[3 * i] = 0;
      px[3 * i + 1] = 0;
      px[3 * i + 2] = 0;
    }
  }
}

FrameRGBD redact(const FrameRGBD& frame, const BinaryMask& mask) {
  FrameRGBD out = frame;
  redact_in_place(out.rgb, mask);
  return out;
}

void MaskGenSpec::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("mask size must be positive");
  if (!(area_min > 0.0 && area_min < area_max && area_max < 1.0))
    throw ConfigError("mask area bounds must satisfy 0 < min < max < 1");
  if ((area_max - area_min) * width * height < 1.0) throw ConfigError("mask area bounds narrower than one pixel");
  if (strokes_min < 1 || strokes_max < strokes_min) throw ConfigError("bad stroke count range");
  if (thickness_min < 1 || thickness_max < thickness_min) throw ConfigError("bad stroke thickness range");
}

BinaryMask gen_mask(const MaskGenSpec& spec, std::int64_t frame_index) {
  spec.validate();
  std::uint64_t seed = splitmix64(spec.seed);
  if (spec.stability == MaskStability::kPerFrame) seed = hash_combine(seed, static_cast<std::uint64_t>(frame_index));
  Rng rng(seed);
  BinaryMask raw = spec.kind == MaskKind::kRectangle ? rectangle_mask(spec, rng) : stroke_mask(spec, rng);
  return adjust_mask_area(raw, spec.area_min, spec.area_max);
}

BinaryMask dilate(const BinaryMask& m) {
  const int w = m.width();
  const int h = m.height();
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool v = m.at(x, y) || (x > 0 && m.at(x - 1, y)) || (x + 1 < w && m.at(x + 1, y)) ||
                     (y > 0 && m.at(x, y - 1)) || (y + 1 < h && m.at(x, y + 1));
      if (v) out.set(x, y);
    }
  }
  return out;
}

BinaryMask erode(const BinaryMask& m) {
  const int w = m.width();
  const int h = m.height();
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool v = m.at(x, y) && x > 0 && m.at(x - 1, y) && x + 1 < w && m.at(x + 1, y) && y > 0 &&
                     m.at(x, y - 1) && y + 1 < h && m.at(x, y + 1);
      if (v) out.set(x, y);
    }
  }
  return out;
}

BinaryMask adjust_mask_area(const BinaryMask& mask, double area_min, double area_max) {
  if (mask.none()) throw DegenerateMaskError("cannot adjust an empty mask");
  const double n = static_cast<double>(mask.pixel_count());
  const auto lo = static_cast<std::size_t>(std::ceil(area_min * n - 1e-9));
  const auto hi = static_cast<std::size_t>(std::floor(area_max * n + 1e-9));

  BinaryMask m = mask;
  std::size_t area = m.area();
  while (area < lo) {
    BinaryMask grown = dilate(m);
    const std::size_t grown_area = grown.area();
    if (grown_area == area) break;  // full raster; cannot grow further
    if (grown_area <= hi) {
      m = std::move(grown);
      area = grown_area;
      continue;
    }
    auto src = grown.bits();
    auto dst = m.bits();
    for (std::size_t i = 0; i < dst.size() && area < lo; ++i) {
      if (src[i] && !dst[i]) {
        dst[i] = 1;
        ++area;
      }
    }
  }
  while (area > hi) {
    BinaryMask shrunk = erode(m);
    const std::size_t shrunk_area = shrunk.area();
    if (shrunk_area == 0) throw DegenerateMaskError("mask erodes to empty before reaching the area bounds");
    if (shrunk_area >= lo) {
      m = std::move(shrunk);
      area = shrunk_area;
      continue;
    }
    auto src = shrunk.bits();
    auto dst = m.bits();
    for (std::size_t i = 0; i < dst.size() && area > hi; ++i) {
      if (dst[i] && !src[i]) {
        dst[i] = 0;
        --area;
      }
    }
  }
  return m;
}

void write_mask_png(const BinaryMask& mask, const std::filesystem::path& path) {
  cv::Mat img(mask.height(), mask.width(), CV_8UC1);
  auto bits = mask.bits();
  for (int y = 0; y < mask.height(); ++y) {
    auto* row = img.ptr<std::uint8_t>(y);
    for (int x = 0; x < mask.width(); ++x) row[x] = bits[static_cast<std::size_t>(y) * mask.width() + x] ? 255 : 0;
  }
  if (!cv::imwrite(path.string(), img)) throw IoError("cannot write mask PNG " + path.string());
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
  const cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) throw IoError("cannot read mask PNG " + path.string());
  if (img.type() != CV_8UC1) throw InputError("mask PNG must be single-channel 8-bit");
  BinaryMask m(img.cols, img.rows);
  for (int y = 0; y < img.rows; ++y) {
    const auto* row = img.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.cols; ++x) m.set(x, y, row[x] >= 128);
  }
  return m;
}

}  // namespace veil

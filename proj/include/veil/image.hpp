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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "veil/error.hpp"

namespace veil {

// Interleaved row-major raster with a compile-time channel count.
template <typename T, int Channels>
class Image {
 public:
  static constexpr int kChannels = Channels;
  using value_type = T;

  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height * Channels, fill) {
    if (width < 0 || height < 0) throw InputError("image dimensions must be non-negative");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_ * Channels; }
  const T* row(int y) const {
    return data_.data() + static_cast<std::size_t>(y) * width_ * Channels;
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool same_size(int w, int h) const { return width_ == w && height_ == h; }
  template <typename U, int C2>
  bool same_size(const Image<U, C2>& other) const {
    return same_size(other.width(), other.height());
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * Channels + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using RgbImage = Image<std::uint8_t, 3>;
using DepthImage = Image<float, 1>;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline Rgb pixel(const RgbImage& img, int x, int y) {
  const std::uint8_t* p = img.row(y) + 3 * x;
  return {p[0], p[1], p[2]};
}

inline void set_pixel(RgbImage& img, int x, int y, Rgb c) {
  std::uint8_t* p = img.row(y) + 3 * x;
  p[0] = c.r;
  p[1] = c.g;
  p[2] = c.b;
}

// Integer pixel rectangle, inclusive origin, exclusive far edge.
struct PixelRect {
  int x = 0, y = 0, w = 0, h = 0;

  int area() const { return w * h; }
  bool empty() const { return w <= 0 || h <= 0; }
  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

// Per-pixel boolean region. Storage is one byte per pixel (0 or 1).
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false)
      : width_(width), height_(height),
        bits_(static_cast<std::size_t>(width) * height, fill ? 1 : 0) {
    if (width < 0 || height < 0) throw InputError("mask dimensions must be non-negative");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return bits_.size(); }

  bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v = true) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }

  std::size_t area() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }
  double area_fraction() const {
    return bits_.empty() ? 0.0 : static_cast<double>(area()) / static_cast<double>(bits_.size());
  }
  bool none() const { return std::none_of(bits_.begin(), bits_.end(), [](auto b) { return b; }); }

  std::span<std::uint8_t> bits() { return bits_; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  // Tight bounding rectangle of the set pixels; empty rect when none are set.
  PixelRect bounds() const;

  bool same_size(int w, int h) const { return width_ == w && height_ == h; }
  template <typename U, int C>
  bool same_size(const Image<U, C>& img) const {
    return same_size(img.width(), img.height());
  }
  bool same_size(const BinaryMask& m) const { return same_size(m.width(), m.height()); }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b);
double mask_iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace veil

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

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace veil {

struct Shape4 {
  int n = 1, c = 1, h = 1, w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::string str() const;
  friend bool operator==(const Shape4&, const Shape4&) = default;
};

// Dense NCHW float tensor.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, float fill = 0.0f) : shape_(shape), data_(shape.numel(), fill) {}

  const Shape4& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }

  float& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  float at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool all_finite() const;
  bool all_zero() const;

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape4 shape_;
  std::vector<float> data_;
};

// FIFO of exactly two feature tensors, oldest first. Slots that have not yet
// been written hold zeros; `filled` counts real pushes (saturating at 2).
class InpaintMemory {
 public:
  static constexpr int kSlots = 2;

  InpaintMemory() = default;
  explicit InpaintMemory(Shape4 slot_shape);

  const Shape4& slot_shape() const { return slot_shape_; }
  const Tensor4& slot(int i) const { return slots_[static_cast<std::size_t>(i)]; }
  const Tensor4& oldest() const { return slots_[0]; }
  const Tensor4& newest() const { return slots_[1]; }
  int filled() const { return filled_; }
  static constexpr int size() { return kSlots; }

  friend bool operator==(const InpaintMemory&, const InpaintMemory&) = default;

 private:
  friend InpaintMemory memory_push(const InpaintMemory&, Tensor4);

  Shape4 slot_shape_;
  std::array<Tensor4, kSlots> slots_;
  int filled_ = 0;
};

// Evicts the oldest slot and appends `slot`. Shape mismatch is a config error.
InpaintMemory memory_push(const InpaintMemory& memory, Tensor4 slot);

}  // namespace veil

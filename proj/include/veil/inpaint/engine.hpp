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

#include <memory>
#include <string>

#include "veil/image.hpp"
#include "veil/inpaint/tensor.hpp"

namespace veil {

struct EngineResult {
  RgbImage rgb;
  InpaintMemory memory;
  double inference_ms = 0.0;
};

// Common engine interface. Engines are immutable once built (weights are
// shared read-only); per-stream state lives in InpaintMemory, which callers
// thread through or keep in an InpaintSession.
class InpaintEngine {
 public:
  virtual ~InpaintEngine() = default;

  virtual std::string name() const = 0;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual Shape4 memory_slot_shape() const = 0;

  InpaintMemory initial_memory() const { return InpaintMemory(memory_slot_shape()); }

  // Validates shapes, runs the engine, then copies the input back outside the
  // mask so the output matches it bit-exactly there. Memory advances by one
  // slot even for an empty mask.
  EngineResult inpaint(const RgbImage& redacted, const BinaryMask& mask,
                       const InpaintMemory& memory) const;

 protected:
  struct Fill {
    RgbImage rgb;
    Tensor4 memory_slot;
  };
  virtual Fill fill(const RgbImage& redacted, const BinaryMask& mask,
                    const InpaintMemory& memory) const = 0;
};

// Copies `source` into `target` wherever mask is unset.
void composite_outside_mask(RgbImage& target, const RgbImage& source, const BinaryMask& mask);

// Stateful wrapper binding one engine to one frame stream.
class InpaintSession {
 public:
  explicit InpaintSession(std::shared_ptr<const InpaintEngine> engine)
      : engine_(std::move(engine)), memory_(engine_->initial_memory()) {}

  EngineResult step(const RgbImage& redacted, const BinaryMask& mask) {
    EngineResult r = engine_->inpaint(redacted, mask, memory_);
    memory_ = r.memory;
    return r;
  }
  void reset() { memory_ = engine_->initial_memory(); }

  const InpaintMemory& memory() const { return memory_; }
  const InpaintEngine& engine() const { return *engine_; }

 private:
  std::shared_ptr<const InpaintEngine> engine_;
  InpaintMemory memory_;
};

}  // namespace veil

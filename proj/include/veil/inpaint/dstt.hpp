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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "veil/inpaint/engine.hpp"
#include "veil/inpaint/layers.hpp"

namespace veil {

enum class BlockKind { kSpatial, kTemporal };

// Static model description. Every tensor shape in the network is a function
// of this struct alone.
struct DsttConfig {
  int width = 64;
  int height = 36;
  int patch = 4;
  int channels = 32;
  int heads = 2;
  int ffn_hidden = 64;
  int temporal_groups = 3;  // contiguous row bands of the token grid
  int overlap = 2;          // decoder footprint is patch + 2·overlap
  int decoder_channels = 8;
  std::string blocks = "STST";

  int tokens_x() const { return width / patch; }
  int tokens_y() const { return height / patch; }
  int token_count() const { return tokens_x() * tokens_y(); }
  int kernel() const { return patch + 2 * overlap; }
  int head_dim() const { return channels / heads; }
  std::vector<BlockKind> block_sequence() const;
  PatchGeometry decoder_geometry() const { return {width, height, patch, kernel()}; }

  void validate() const;
};

DsttConfig dstt_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DsttConfig& c);

// Named parameter with its shape; data is row-major float32.
struct Param {
  std::string name;
  std::vector<int> dims;
  std::vector<float> data;

  // 2-D view as (dims[0] × dims[1]) and flat view.
  Eigen::Map<const MatrixRM> matrix() const;
  Eigen::Map<const VectorF> vector() const;
};

struct BlockWeights {
  Param ln1_g, ln1_b;
  Param wq, bq, wk, bk, wv, bv, wo, bo;
  Param ln2_g, ln2_b;
  Param ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

struct DsttWeights {
  Param embed_w, embed_b, pos;
  std::vector<BlockWeights> blocks;
  Param lnf_g, lnf_b;
  Param v2p_w, v2p_b;
  Param head_w, head_b;

  // Fixed serialization order.
  void for_each(const std::function<void(Param&)>& f);
  void for_each(const std::function<void(const Param&)>& f) const;

  static DsttWeights shaped(const DsttConfig& config);  // all zeros
  static DsttWeights random(const DsttConfig& config, std::uint64_t seed);
  void check_shapes(const DsttConfig& config) const;
};

// Flat binary weight file: "DSTW", u32 version (1), u32 tensor count, then per
// tensor u32 rank and u32 dims, then all tensor data as contiguous f32. Every
// integer and float is little-endian.
std::vector<std::uint8_t> encode_weights(const DsttWeights& w);
DsttWeights decode_weights(std::span<const std::uint8_t> bytes, const DsttConfig& config);
void save_weights(const DsttWeights& w, const std::filesystem::path& path);
DsttWeights load_weights(const std::filesystem::path& path, const DsttConfig& config);

// Memory slots and token features convert between (T × C) and (1, C, Ty, Tx).
Tensor4 tokens_to_slot(const MatrixRM& tokens, const DsttConfig& config);
MatrixRM slot_to_tokens(const Tensor4& slot, const DsttConfig& config);

MatrixRM spatial_block(const MatrixRM& tokens, const BlockWeights& w, const DsttConfig& config);
MatrixRM temporal_block(const MatrixRM& tokens, const InpaintMemory& memory, const BlockWeights& w,
                        const DsttConfig& config);

struct DsttOutput {
  Tensor4 rgb;            // (1, 3, H, W) in [0, 1]
  Tensor4 memory_slot;    // post-block features of this frame
  Tensor4 decoder_features;  // (1, Cd, H, W) input to the 1×1 colour head
};

// Input is (1, 4, H, W): RGB in [0, 1] with the hole zeroed, then the mask.
DsttOutput dstt_forward(const Tensor4& input, const InpaintMemory& memory, const DsttWeights& weights,
                        const DsttConfig& config);

Tensor4 make_model_input(const RgbImage& redacted, const BinaryMask& mask);

class DsttEngine final : public InpaintEngine {
 public:
  DsttEngine(DsttConfig config, std::shared_ptr<const DsttWeights> weights);

  std::string name() const override { return "dstt"; }
  int width() const override { return config_.width; }
  int height() const override { return config_.height; }
  Shape4 memory_slot_shape() const override {
    return {1, config_.channels, config_.tokens_y(), config_.tokens_x()};
  }
  const DsttConfig& config() const { return config_; }
  const DsttWeights& weights() const { return *weights_; }

 protected:
  Fill fill(const RgbImage& redacted, const BinaryMask& mask, const InpaintMemory& memory) const override;

 private:
  DsttConfig config_;
  std::shared_ptr<const DsttWeights> weights_;
};

}  // namespace veil

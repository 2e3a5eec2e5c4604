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

#include "veil/inpaint/dstt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "veil/error.hpp"
#include "veil/rng.hpp"

namespace veil {
namespace {

Param make_param(std::string name, std::vector<int> dims, float fill = 0.0f) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return {std::move(name), std::move(dims), std::vector<float>(n, fill)};
}

void xavier(Param& p, Rng& rng) {
  const double fan_out = p.dims[0];
  const double fan_in = p.dims.size() > 1 ? p.dims[1] : 1.0;
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (float& v : p.data) v = static_cast<float>(rng.uniform(-a, a));
}

MatrixRM multi_head_attention(const MatrixRM& q_in, const MatrixRM& kv_in, const BlockWeights& w,
                              const DsttConfig& c) {
  const MatrixRM q = linear(q_in, w.wq.matrix(), w.bq.vector());
  const MatrixRM k = linear(kv_in, w.wk.matrix(), w.bk.vector());
  const MatrixRM v = linear(kv_in, w.wv.matrix(), w.bv.vector());
  const int dh = c.head_dim();
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  MatrixRM heads(q.rows(), c.channels);
  for (int h = 0; h < c.heads; ++h) {
    const MatrixRM qh = q.middleCols(h * dh, dh);
    const MatrixRM kh = k.middleCols(h * dh, dh);
    const MatrixRM vh = v.middleCols(h * dh, dh);
    heads.middleCols(h * dh, dh) = scaled_dot_product_attention(qh, kh, vh, scale);
  }
  return linear(heads, w.wo.matrix(), w.bo.vector());
}

void feed_forward_residual(MatrixRM& x, const BlockWeights& w) {
  MatrixRM h = x;
  layer_norm_rows(h, w.ln2_g.vector(), w.ln2_b.vector());
  h = linear(h, w.ffn_w1.matrix(), w.ffn_b1.vector());
  gelu_inplace(h);
  x += linear(h, w.ffn_w2.matrix(), w.ffn_b2.vector());
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t& off) {
  if (off + 4 > b.size()) throw ConfigError("weight file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
  off += 4;
  return v;
}

}  // namespace

std::vector<BlockKind> DsttConfig::block_sequence() const {
  std::vector<BlockKind> seq;
  for (char ch : blocks) {
    if (ch == 'S') seq.push_back(BlockKind::kSpatial);
    else if (ch == 'T') seq.push_back(BlockKind::kTemporal);
    else throw ConfigError(std::string("unknown block kind '") + ch + "'");
  }
  return seq;
}

void DsttConfig::validate() const {
  if (width <= 0 || height <= 0 || patch <= 0) throw ConfigError("model dimensions must be positive");
  if (width % patch != 0 || height % patch != 0) {
    throw ConfigError("model resolution " + std::to_string(width) + "x" + std::to_string(height) +
                      " is not divisible by patch size " + std::to_string(patch));
  }
  if (width > 65535 || height > 65535) throw ConfigError("model resolution exceeds 65535");
  if (channels <= 0 || heads <= 0 || channels % heads != 0) throw ConfigError("channels must be divisible by heads");
  if (ffn_hidden <= 0 || decoder_channels <= 0) throw ConfigError("layer widths must be positive");
  if (overlap < 0) throw ConfigError("overlap must be non-negative");
  if (temporal_groups <= 0 || tokens_y() % temporal_groups != 0) {
    throw ConfigError("token rows (" + std::to_string(tokens_y()) + ") not divisible by temporal groups");
  }
  if (blocks.empty()) throw ConfigError("block sequence is empty");
  (void)block_sequence();
}

DsttConfig dstt_config_from_json(const nlohmann::json& j) {
  DsttConfig c;
  try {
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.patch = j.value("patch", c.patch);
    c.channels = j.value("channels", c.channels);
    c.heads = j.value("heads", c.heads);
    c.ffn_hidden = j.value("ffn_hidden", c.ffn_hidden);
    c.temporal_groups = j.value("temporal_groups", c.temporal_groups);
    c.overlap = j.value("overlap", c.overlap);
    c.decoder_channels = j.value("decoder_channels", c.decoder_channels);
    c.blocks = j.value("blocks", c.blocks);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config JSON: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const DsttConfig& c) {
  return {{"width", c.width},       {"height", c.height},
          {"patch", c.patch},       {"channels", c.channels},
          {"heads", c.heads},       {"ffn_hidden", c.ffn_hidden},
          {"temporal_groups", c.temporal_groups},
          {"overlap", c.overlap},   {"decoder_channels", c.decoder_channels},
          {"blocks", c.blocks}};
}

Eigen::Map<const MatrixRM> Param::matrix() const {
  const int rows = dims.empty() ? 0 : dims[0];
  const int cols = dims.size() > 1 ? dims[1] : 1;
  return {data.data(), rows, cols};
}

Eigen::Map<const VectorF> Param::vector() const {
  return {data.data(), static_cast<Eigen::Index>(data.size())};
}

void DsttWeights::for_each(const std::function<void(Param&)>& f) {
  f(embed_w);
  f(embed_b);
  f(pos);
  for (auto& b : blocks) {
    for (Param* p : {&b.ln1_g, &b.ln1_b, &b.wq, &b.bq, &b.wk, &b.bk, &b.wv, &b.bv, &b.wo, &b.bo, &b.ln2_g,
                     &b.ln2_b, &b.ffn_w1, &b.ffn_b1, &b.ffn_w2, &b.ffn_b2})
      f(*p);
  }
  f(lnf_g);
  f(lnf_b);
  f(v2p_w);
  f(v2p_b);
  f(head_w);
  f(head_b);
}

void DsttWeights::for_each(const std::function<void(const Param&)>& f) const {
  const_cast<DsttWeights*>(this)->for_each([&f](Param& p) { f(p); });
}

DsttWeights DsttWeights::shaped(const DsttConfig& c) {
  c.validate();
  const int ch = c.channels;
  DsttWeights w;
  w.embed_w = make_param("embed.w", {ch, 4 * c.patch * c.patch});
  w.embed_b = make_param("embed.b", {ch});
  w.pos = make_param("pos", {c.token_count(), ch});
  const auto seq = c.block_sequence();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const std::string p = "block" + std::to_string(i) + ".";
    BlockWeights b;
    b.ln1_g = make_param(p + "ln1.g", {ch}, 1.0f);
    b.ln1_b = make_param(p + "ln1.b", {ch});
    b.wq = make_param(p + "wq", {ch, ch});
    b.bq = make_param(p + "bq", {ch});
    b.wk = make_param(p + "wk", {ch, ch});
    b.bk = make_param(p + "bk", {ch});
    b.wv = make_param(p + "wv", {ch, ch});
    b.bv = make_param(p + "bv", {ch});
    b.wo = make_param(p + "wo", {ch, ch});
    b.bo = make_param(p + "bo", {ch});
    b.ln2_g = make_param(p + "ln2.g", {ch}, 1.0f);
    b.ln2_b = make_param(p + "ln2.b", {ch});
    b.ffn_w1 = make_param(p + "ffn.w1", {c.ffn_hidden, ch});
    b.ffn_b1 = make_param(p + "ffn.b1", {c.ffn_hidden});
    b.ffn_w2 = make_param(p + "ffn.w2", {ch, c.ffn_hidden});
    b.ffn_b2 = make_param(p + "ffn.b2", {ch});
    w.blocks.push_back(std::move(b));
  }
  w.lnf_g = make_param("lnf.g", {ch}, 1.0f);
  w.lnf_b = make_param("lnf.b", {ch});
  w.v2p_w = make_param("v2p.w", {c.decoder_channels * c.kernel() * c.kernel(), ch});
  w.v2p_b = make_param("v2p.b", {c.decoder_channels});
  w.head_w = make_param("head.w", {3, c.decoder_channels});
  w.head_b = make_param("head.b", {3});
  return w;
}

DsttWeights DsttWeights::random(const DsttConfig& c, std::uint64_t seed) {
  DsttWeights w = shaped(c);
  Rng rng(seed);
  xavier(w.embed_w, rng);
  for (float& v : w.pos.data) v = static_cast<float>(rng.uniform(-0.02, 0.02));
  for (auto& b : w.blocks) {
    for (Param* p : {&b.wq, &b.wk, &b.wv, &b.wo, &b.ffn_w1, &b.ffn_w2}) xavier(*p, rng);
  }
  xavier(w.v2p_w, rng);
  xavier(w.head_w, rng);
  return w;
}

void DsttWeights::check_shapes(const DsttConfig& config) const {
  const DsttWeights ref = shaped(config);
  std::vector<const Param*> expected;
  ref.for_each([&](const Param& p) { expected.push_back(&p); });
  std::size_t i = 0;
  for_each([&](const Param& p) {
    if (i >= expected.size() || p.dims != expected[i]->dims || p.data.size() != expected[i]->data.size()) {
      throw ConfigError("weight tensor '" + (i < expected.size() ? expected[i]->name : p.name) +
                        "' does not match the model configuration");
    }
    ++i;
  });
  if (i != expected.size()) throw ConfigError("weight tensor count does not match the model configuration");
}

std::vector<std::uint8_t> encode_weights(const DsttWeights& w) {
  std::vector<std::uint8_t> out = {'D', 'S', 'T', 'W'};
  put_u32(out, 1);
  std::vector<const Param*> params;
  w.for_each([&](const Param& p) { params.push_back(&p); });
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Param* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->dims.size()));
    for (int d : p->dims) put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const Param* p : params) {
    for (float f : p->data) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  }
  return out;
}

DsttWeights decode_weights(std::span<const std::uint8_t> bytes, const DsttConfig& config) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "DSTW", 4) != 0) throw ConfigError("weight file: bad magic");
  std::size_t off = 4;
  if (get_u32(bytes, off) != 1) throw ConfigError("weight file: unsupported version");
  const std::uint32_t count = get_u32(bytes, off);

  DsttWeights w = DsttWeights::shaped(config);
  std::vector<Param*> params;
  w.for_each([&](Param& p) { params.push_back(&p); });
  if (count != params.size()) throw ConfigError("weight file: tensor count does not match the model configuration");
  for (Param* p : params) {
    const std::uint32_t rank = get_u32(bytes, off);
    std::vector<int> dims;
    for (std::uint32_t r = 0; r < rank; ++r) dims.push_back(static_cast<int>(get_u32(bytes, off)));
    if (dims != p->dims) throw ConfigError("weight file: tensor '" + p->name + "' has the wrong shape");
  }
  for (Param* p : params) {
    for (float& f : p->data) {
      const std::uint32_t bits = get_u32(bytes, off);
      std::memcpy(&f, &bits, 4);
    }
  }
  if (off != bytes.size()) throw ConfigError("weight file: trailing bytes");
  return w;
}

void save_weights(const DsttWeights& w, const std::filesystem::path& path) {
  const auto bytes = encode_weights(w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weights to " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

DsttWeights load_weights(const std::filesystem::path& path, const DsttConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open weights " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes, config);
}

Tensor4 tokens_to_slot(const MatrixRM& tokens, const DsttConfig& c) {
  Tensor4 slot({1, c.channels, c.tokens_y(), c.tokens_x()});
  for (int ty = 0; ty < c.tokens_y(); ++ty)
    for (int tx = 0; tx < c.tokens_x(); ++tx)
      for (int ch = 0; ch < c.channels; ++ch)
        slot.at(0, ch, ty, tx) = tokens(static_cast<Eigen::Index>(ty) * c.tokens_x() + tx, ch);
  return slot;
}

MatrixRM slot_to_tokens(const Tensor4& slot, const DsttConfig& c) {
  const Shape4 want{1, c.channels, c.tokens_y(), c.tokens_x()};
  if (!(slot.shape() == want)) {
    throw ConfigError("memory slot shape " + slot.shape().str() + " does not match " + want.str());
  }
  MatrixRM tokens(c.token_count(), c.channels);
  for (int ty = 0; ty < c.tokens_y(); ++ty)
    for (int tx = 0; tx < c.tokens_x(); ++tx)
      for (int ch = 0; ch < c.channels; ++ch)
        tokens(static_cast<Eigen::Index>(ty) * c.tokens_x() + tx, ch) = slot.at(0, ch, ty, tx);
  return tokens;
}

MatrixRM spatial_block(const MatrixRM& tokens, const BlockWeights& w, const DsttConfig& c) {
  if (tokens.rows() != c.token_count() || tokens.cols() != c.channels) throw ConfigError("token shape mismatch");
  MatrixRM h = tokens;
  layer_norm_rows(h, w.ln1_g.vector(), w.ln1_b.vector());
  MatrixRM x = tokens + multi_head_attention(h, h, w, c);
  feed_forward_residual(x, w);
  return x;
}

MatrixRM temporal_block(const MatrixRM& tokens, const InpaintMemory& memory, const BlockWeights& w,
                        const DsttConfig& c) {
  if (tokens.rows() != c.token_count() || tokens.cols() != c.channels) throw ConfigError("token shape mismatch");
  MatrixRM cur = tokens;
  layer_norm_rows(cur, w.ln1_g.vector(), w.ln1_b.vector());
  std::array<MatrixRM, InpaintMemory::kSlots> mem;
  for (int s = 0; s < InpaintMemory::kSlots; ++s) {
    mem[static_cast<std::size_t>(s)] = slot_to_tokens(memory.slot(s), c);
    layer_norm_rows(mem[static_cast<std::size_t>(s)], w.ln1_g.vector(), w.ln1_b.vector());
  }

  // Queries in a row band attend to the same band of the current frame and of
  // both memory slots.
  const Eigen::Index band = static_cast<Eigen::Index>(c.tokens_y() / c.temporal_groups) * c.tokens_x();
  MatrixRM attn(tokens.rows(), c.channels);
  MatrixRM kv(band * (1 + InpaintMemory::kSlots), c.channels);
  for (int g = 0; g < c.temporal_groups; ++g) {
    const Eigen::Index r0 = g * band;
    kv.middleRows(0, band) = cur.middleRows(r0, band);
    for (int s = 0; s < InpaintMemory::kSlots; ++s)
      kv.middleRows((s + 1) * band, band) = mem[static_cast<std::size_t>(s)].middleRows(r0, band);
    const MatrixRM q = cur.middleRows(r0, band);
    attn.middleRows(r0, band) = multi_head_attention(q, kv, w, c);
  }
  MatrixRM x = tokens + attn;
  feed_forward_residual(x, w);
  return x;
}

Tensor4 make_model_input(const RgbImage& redacted, const BinaryMask& mask) {
  if (!mask.same_size(redacted)) throw InputError("mask dimension mismatch");
  const int w = redacted.width();
  const int h = redacted.height();
  Tensor4 t({1, 4, h, w});
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = redacted.row(y);
    for (int x = 0; x < w; ++x) {
      const bool m = mask.at(x, y);
      for (int c = 0; c < 3; ++c) t.at(0, c, y, x) = m ? 0.0f : row[3 * x + c] / 255.0f;
      t.at(0, 3, y, x) = m ? 1.0f : 0.0f;
    }
  }
  return t;
}

DsttOutput dstt_forward(const Tensor4& input, const InpaintMemory& memory, const DsttWeights& weights,
                        const DsttConfig& c) {
  const Shape4 want{1, 4, c.height, c.width};
  if (!(input.shape() == want)) throw ConfigError("model input " + input.shape().str() + " expected " + want.str());
  const Shape4 slot_shape{1, c.channels, c.tokens_y(), c.tokens_x()};
  if (!(memory.slot_shape() == slot_shape)) throw ConfigError("memory slot shape mismatch");

  MatrixRM x = patch_embed(input, weights.embed_w.matrix(), weights.embed_b.vector(), c.patch);
  x += weights.pos.matrix();
  const auto seq = c.block_sequence();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    x = seq[i] == BlockKind::kSpatial ? spatial_block(x, weights.blocks[i], c)
                                      : temporal_block(x, memory, weights.blocks[i], c);
  }

  DsttOutput out;
  out.memory_slot = tokens_to_slot(x, c);

  layer_norm_rows(x, weights.lnf_g.vector(), weights.lnf_b.vector());
  const MatrixRM patches = x * weights.v2p_w.matrix().transpose();
  Tensor4 feat = vec2patch(patches, c.decoder_geometry(), c.decoder_channels);
  const auto v2p_b = weights.v2p_b.vector();
  constexpr float kC = 0.7978845608028654f;
  for (int ch = 0; ch < c.decoder_channels; ++ch) {
    for (int y = 0; y < c.height; ++y) {
      for (int xx = 0; xx < c.width; ++xx) {
        const float v = feat.at(0, ch, y, xx) + v2p_b[ch];
        feat.at(0, ch, y, xx) = 0.5f * v * (1.0f + std::tanh(kC * (v + 0.044715f * v * v * v)));
      }
    }
  }

  out.rgb = Tensor4({1, 3, c.height, c.width});
  const auto hw = weights.head_w.matrix();
  const auto hb = weights.head_b.vector();
  for (int y = 0; y < c.height; ++y) {
    for (int xx = 0; xx < c.width; ++xx) {
      for (int o = 0; o < 3; ++o) {
        float z = hb[o];
        for (int ch = 0; ch < c.decoder_channels; ++ch) z += hw(o, ch) * feat.at(0, ch, y, xx);
        out.rgb.at(0, o, y, xx) = 1.0f / (1.0f + std::exp(-z));
      }
    }
  }
  out.decoder_features = std::move(feat);
  return out;
}

DsttEngine::DsttEngine(DsttConfig config, std::shared_ptr<const DsttWeights> weights)
    : config_(std::move(config)), weights_(std::move(weights)) {
  config_.validate();
  if (!weights_) throw ConfigError("model weights are missing");
  weights_->check_shapes(config_);
}

InpaintEngine::Fill DsttEngine::fill(const RgbImage& redacted, const BinaryMask& mask,
                                     const InpaintMemory& memory) const {
  const DsttOutput out = dstt_forward(make_model_input(redacted, mask), memory, *weights_, config_);
  if (!out.rgb.all_finite()) throw NumericError("model produced non-finite output");
  Fill f;
  f.rgb = RgbImage(config_.width, config_.height);
  for (int y = 0; y < config_.height; ++y) {
    std::uint8_t* row = f.rgb.row(y);
    for (int x = 0; x < config_.width; ++x)
      for (int c = 0; c < 3; ++c)
        row[3 * x + c] = static_cast<std::uint8_t>(std::clamp(std::lround(out.rgb.at(0, c, y, x) * 255.0f), 0L, 255L));
  }
  f.memory_slot = out.memory_slot;
  return f;
}

}  // namespace veil

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

#include <filesystem>

#include "support.hpp"
#include "veil/error.hpp"
#include "veil/inpaint/dstt.hpp"
#include "veil/redaction.hpp"

using namespace veil;
using veil::testing::random_mask;
using veil::testing::random_rgb;

namespace {

Tensor4 sentinel(Shape4 s, float v) { return Tensor4(s, v); }

RgbImage zeroed(RgbImage img, const BinaryMask& m) {
  redact_in_place(img, m);
  return img;
}

MatrixRM random_tokens(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  MatrixRM m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace

TEST_CASE("memory is a two-slot FIFO") {
  const Shape4 s{1, 2, 3, 4};
  InpaintMemory m(s);
  CHECK(m.filled() == 0);
  CHECK(m.oldest().all_zero());
  CHECK(m.newest().all_zero());
  m = memory_push(m, sentinel(s, 1.0f));
  m = memory_push(m, sentinel(s, 2.0f));
  CHECK(m.oldest() == sentinel(s, 1.0f));
  CHECK(m.newest() == sentinel(s, 2.0f));
  m = memory_push(m, sentinel(s, 3.0f));
  CHECK(m.oldest() == sentinel(s, 2.0f));
  CHECK(m.newest() == sentinel(s, 3.0f));
  for (int i = 4; i <= 100; ++i) {
    m = memory_push(m, sentinel(s, static_cast<float>(i)));
    REQUIRE(m.size() == 2);
    REQUIRE(m.filled() == 2);
  }
  CHECK(m.oldest() == sentinel(s, 99.0f));
  CHECK(m.newest() == sentinel(s, 100.0f));
  CHECK_THROWS_AS(memory_push(m, Tensor4({1, 2, 3, 5})), ConfigError);
}

TEST_CASE("model config") {
  DsttConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.token_count() == 144);
  CHECK(c.block_sequence() ==
        std::vector<BlockKind>{BlockKind::kSpatial, BlockKind::kTemporal, BlockKind::kSpatial, BlockKind::kTemporal});
  CHECK(dstt_config_from_json(to_json(c)).blocks == c.blocks);
  CHECK(to_json(dstt_config_from_json(to_json(c))) == to_json(c));
  c.width = 66;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.blocks = "SXT";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.temporal_groups = 2;  // 9 token rows
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(dstt_config_from_json(nlohmann::json{{"width", "wide"}}), ConfigError);
}

TEST_CASE("weights round trip through the binary format") {
  const DsttConfig c;
  const DsttWeights w = DsttWeights::random(c, 7);
  const auto bytes = encode_weights(w);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "DSTW");
  CHECK(encode_weights(decode_weights(bytes, c)) == bytes);

  const auto path = std::filesystem::temp_directory_path() / "veil_weights_test.bin";
  save_weights(w, path);
  CHECK(encode_weights(load_weights(path, c)) == bytes);
  std::filesystem::remove(path);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_weights(bad, c), ConfigError);
  bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_AS(decode_weights(bad, c), ConfigError);
  bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(decode_weights(bad, c), ConfigError);
  bad = bytes;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_weights(bad, c), ConfigError);
  DsttConfig other = c;
  other.channels = 16;
  CHECK_THROWS_AS(decode_weights(bytes, other), ConfigError);
  other = c;
  other.blocks = "ST";
  CHECK_THROWS_AS(decode_weights(bytes, other), ConfigError);
  CHECK_THROWS_AS(load_weights("/nonexistent/w.bin", c), ConfigError);

  CHECK(DsttWeights::random(c, 7).embed_w.data == w.embed_w.data);
  CHECK(DsttWeights::random(c, 8).embed_w.data != w.embed_w.data);
}

TEST_CASE("forward shapes, finiteness and determinism") {
  const DsttConfig c;
  const DsttWeights w = DsttWeights::random(c, 1);
  std::mt19937_64 rng(2);
  const BinaryMask m = random_mask(rng, 64, 36, 0.2);
  const Tensor4 in = make_model_input(zeroed(random_rgb(rng, 64, 36), m), m);
  CHECK(in.shape() == Shape4{1, 4, 36, 64});
  const InpaintMemory mem(Shape4{1, c.channels, c.tokens_y(), c.tokens_x()});
  const DsttOutput a = dstt_forward(in, mem, w, c);
  CHECK(a.rgb.shape() == Shape4{1, 3, 36, 64});
  CHECK(a.memory_slot.shape() == Shape4{1, 32, 9, 16});
  CHECK(a.decoder_features.shape() == Shape4{1, c.decoder_channels, 36, 64});
  CHECK(a.rgb.all_finite());
  for (float v : a.rgb.data()) {
    REQUIRE(v >= 0.0f);
    REQUIRE(v <= 1.0f);
  }
  const DsttOutput b = dstt_forward(in, mem, w, c);
  CHECK(a.rgb == b.rgb);
  CHECK(a.memory_slot == b.memory_slot);

  CHECK_THROWS_AS(dstt_forward(Tensor4({1, 4, 36, 60}), mem, w, c), ConfigError);
  CHECK_THROWS_AS(dstt_forward(in, InpaintMemory({1, 16, 9, 16}), w, c), ConfigError);
}

TEST_CASE("temporal attention stays inside its row band") {
  const DsttConfig c;
  const DsttWeights w = DsttWeights::random(c, 3);
  std::mt19937_64 rng(4);
  const MatrixRM tokens = random_tokens(rng, c.token_count(), c.channels);
  const Shape4 s{1, c.channels, c.tokens_y(), c.tokens_x()};
  InpaintMemory mem(s);
  mem = memory_push(mem, tokens_to_slot(random_tokens(rng, c.token_count(), c.channels), c));
  mem = memory_push(mem, tokens_to_slot(random_tokens(rng, c.token_count(), c.channels), c));
  const MatrixRM base = temporal_block(tokens, mem, w.blocks[1], c);

  // Perturb the memory only in the last band (token rows 6..8). The noise is
  // per channel since layer norm would cancel a constant shift.
  Tensor4 newest = mem.newest();
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (int ch = 0; ch < c.channels; ++ch)
    for (int y = 6; y < 9; ++y)
      for (int x = 0; x < 16; ++x) newest.at(0, ch, y, x) += n(rng);
  const InpaintMemory perturbed = memory_push(memory_push(InpaintMemory(s), mem.oldest()), newest);
  const MatrixRM moved = temporal_block(tokens, perturbed, w.blocks[1], c);
  const Eigen::Index band = 3 * 16;
  CHECK((moved.topRows(2 * band) - base.topRows(2 * band)).cwiseAbs().maxCoeff() == 0.0f);
  CHECK((moved.bottomRows(band) - base.bottomRows(band)).cwiseAbs().maxCoeff() > 1e-4f);

  // The spatial block ignores memory by construction and keeps the shape.
  CHECK(spatial_block(tokens, w.blocks[0], c).rows() == c.token_count());
  CHECK_THROWS_AS(spatial_block(tokens.topRows(10), w.blocks[0], c), ConfigError);
}

TEST_CASE("engine keeps the composite guarantee and advances memory") {
  const DsttConfig c;
  auto w = std::make_shared<const DsttWeights>(DsttWeights::random(c, 5));
  auto engine = std::make_shared<DsttEngine>(c, w);
  std::mt19937_64 rng(6);

  std::vector<RgbImage> frames;
  std::vector<BinaryMask> masks;
  for (int f = 0; f < 3; ++f) {
    masks.push_back(random_mask(rng, 64, 36, 0.25));
    frames.push_back(zeroed(random_rgb(rng, 64, 36), masks.back()));
  }

  InpaintSession session(engine);
  std::vector<Tensor4> slots;
  InpaintMemory manual = engine->initial_memory();
  for (int f = 0; f < 3; ++f) {
    const auto r = session.step(frames[f], masks[f]);
    for (int y = 0; y < 36; ++y)
      for (int x = 0; x < 64; ++x)
        if (!masks[f].at(x, y)) REQUIRE(pixel(r.rgb, x, y) == pixel(frames[f], x, y));
    const DsttOutput o = dstt_forward(make_model_input(frames[f], masks[f]), manual, *w, c);
    slots.push_back(o.memory_slot);
    manual = memory_push(manual, o.memory_slot);
  }
  // After three frames the memory holds frames 2 and 3; frame 1 is evicted.
  CHECK(session.memory().oldest() == slots[1]);
  CHECK(session.memory().newest() == slots[2]);
  CHECK(session.memory().filled() == 2);

  // Memory feeds back into the output.
  const auto fresh = engine->inpaint(frames[2], masks[2], engine->initial_memory());
  const auto warm = engine->inpaint(frames[2], masks[2], session.memory());
  CHECK(fresh.rgb != warm.rgb);

  // Empty mask: identical output, memory still advances.
  const RgbImage clean = random_rgb(rng, 64, 36);
  const auto e = engine->inpaint(clean, BinaryMask(64, 36), engine->initial_memory());
  CHECK(e.rgb == clean);
  CHECK(e.memory.filled() == 1);

  CHECK_THROWS_AS(DsttEngine(c, nullptr), ConfigError);
  DsttConfig wrong = c;
  wrong.channels = 16;
  CHECK_THROWS_AS(DsttEngine(wrong, w), ConfigError);
}

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

#include "veil/inpaint/layers.hpp"

#include <algorithm>
#include <cmath>

#include "veil/error.hpp"

namespace veil {
namespace {

void softmax_rows(MatrixRM& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    auto row = s.row(r);
    const float m = row.maxCoeff();
    row = (row.array() - m).exp();
    row /= row.sum();
  }
}

}  // namespace

MatrixRM attention_weights(const MatrixRM& q, const MatrixRM& k, float scale) {
  if (q.cols() != k.cols()) throw ConfigError("attention query/key width mismatch");
  MatrixRM s = (q * k.transpose()) * scale;
  softmax_rows(s);
  return s;
}

MatrixRM scaled_dot_product_attention(const MatrixRM& q, const MatrixRM& k, const MatrixRM& v,
                                      float scale, int query_chunk) {
  if (q.cols() != k.cols()) throw ConfigError("attention query/key width mismatch");
  if (k.rows() != v.rows()) throw ConfigError("attention key/value count mismatch");
  MatrixRM out(q.rows(), v.cols());
  for (Eigen::Index r0 = 0; r0 < q.rows(); r0 += query_chunk) {
    const Eigen::Index n = std::min<Eigen::Index>(query_chunk, q.rows() - r0);
    MatrixRM s = (q.middleRows(r0, n) * k.transpose()) * scale;
    softmax_rows(s);
    out.middleRows(r0, n).noalias() = s * v;
  }
  return out;
}

MatrixRM linear(const MatrixRM& x, Eigen::Ref<const MatrixRM> w, Eigen::Ref<const VectorF> b) {
  if (x.cols() != w.cols() || w.rows() != b.size()) throw ConfigError("linear layer shape mismatch");
  MatrixRM y = x * w.transpose();
  y.rowwise() += b.transpose();
  return y;
}

void layer_norm_rows(MatrixRM& x, Eigen::Ref<const VectorF> gamma, Eigen::Ref<const VectorF> beta, float eps) {
  const float n = static_cast<float>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    const float mean = row.sum() / n;
    row.array() -= mean;
    const float var = row.squaredNorm() / n;
    row *= 1.0f / std::sqrt(var + eps);
    row = row.cwiseProduct(gamma.transpose()) + beta.transpose();
  }
}

void gelu_inplace(MatrixRM& x) {
  constexpr float kC = 0.7978845608028654f;  // sqrt(2/pi)
  x = x.unaryExpr([](float v) { return 0.5f * v * (1.0f + std::tanh(kC * (v + 0.044715f * v * v * v))); });
}

void PatchGeometry::validate() const {
  if (patch <= 0 || width <= 0 || height <= 0) throw ConfigError("patch geometry must be positive");
  if (width % patch != 0 || height % patch != 0) {
    throw ConfigError("raster " + std::to_string(width) + "x" + std::to_string(height) +
                      " is not divisible by patch size " + std::to_string(patch));
  }
  if (kernel < patch || (kernel - patch) % 2 != 0) {
    throw ConfigError("kernel must be >= patch with an even difference");
  }
}

MatrixRM patch_embed(const Tensor4& input, Eigen::Ref<const MatrixRM> weight, Eigen::Ref<const VectorF> bias,
                     int patch) {
  const Shape4& s = input.shape();
  if (patch <= 0 || s.h % patch != 0 || s.w % patch != 0) {
    throw ConfigError("input " + s.str() + " is not divisible by patch size " + std::to_string(patch));
  }
  const int k = s.c * patch * patch;
  if (weight.cols() != k || weight.rows() != bias.size()) throw ConfigError("patch embedding weight shape mismatch");
  const int tx_n = s.w / patch;
  const int ty_n = s.h / patch;

  MatrixRM cols(static_cast<Eigen::Index>(tx_n) * ty_n, k);
  for (int ty = 0; ty < ty_n; ++ty) {
    for (int tx = 0; tx < tx_n; ++tx) {
      float* dst = cols.row(static_cast<Eigen::Index>(ty) * tx_n + tx).data();
      for (int c = 0; c < s.c; ++c)
        for (int ky = 0; ky < patch; ++ky)
          for (int kx = 0; kx < patch; ++kx) *dst++ = input.at(0, c, ty * patch + ky, tx * patch + kx);
    }
  }
  return linear(cols, weight, bias);
}

Tensor4 vec2patch(const MatrixRM& tokens, const PatchGeometry& geom, int out_channels) {
  geom.validate();
  const int kk = geom.kernel * geom.kernel;
  if (tokens.rows() != geom.token_count() || tokens.cols() != static_cast<Eigen::Index>(out_channels) * kk) {
    throw ConfigError("vec2patch expects " + std::to_string(geom.token_count()) + " tokens of width " +
                      std::to_string(out_channels * kk) + ", got " + std::to_string(tokens.rows()) + "x" +
                      std::to_string(tokens.cols()));
  }
  const int p = geom.patch;
  const int k = geom.kernel;
  const int pad = geom.pad();
  const int txn = geom.tokens_x();
  const int tyn = geom.tokens_y();

  Tensor4 out({1, out_channels, geom.height, geom.width});
  for (int y = 0; y < geom.height; ++y) {
    const int yy = y + pad;
    const int ty_hi = std::min(tyn - 1, yy / p);
    const int ty_lo = std::max(0, (yy - k + p) / p);  // ceil((yy - k + 1) / p) for yy >= 0
    for (int x = 0; x < geom.width; ++x) {
      const int xx = x + pad;
      const int tx_hi = std::min(txn - 1, xx / p);
      const int tx_lo = std::max(0, (xx - k + p) / p);
      for (int c = 0; c < out_channels; ++c) {
        float acc = 0.0f;
        for (int ty = ty_lo; ty <= ty_hi; ++ty) {
          const int ky = yy - ty * p;
          const float* row = tokens.row(static_cast<Eigen::Index>(ty) * txn).data();
          for (int tx = tx_lo; tx <= tx_hi; ++tx) {
            const int kx = xx - tx * p;
            acc += row[static_cast<std::size_t>(tx) * tokens.cols() + c * kk + ky * k + kx];
          }
        }
        out.at(0, c, y, x) = acc;
      }
    }
  }
  return out;
}

}  // namespace veil

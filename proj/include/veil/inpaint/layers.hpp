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

#include <Eigen/Core>

#include "veil/inpaint/tensor.hpp"

namespace veil {

using MatrixRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VectorF = Eigen::VectorXf;

// Row-wise softmax of scale·Q·Kᵀ (Tq × Tk).
MatrixRM attention_weights(const MatrixRM& q, const MatrixRM& k, float scale);

// softmax(scale·Q·Kᵀ)·V, evaluated in query chunks so the score matrix never
// exceeds chunk × Tk.
MatrixRM scaled_dot_product_attention(const MatrixRM& q, const MatrixRM& k, const MatrixRM& v,
                                      float scale, int query_chunk = 512);

// y = x·Wᵀ + b, with W stored (out × in).
MatrixRM linear(const MatrixRM& x, Eigen::Ref<const MatrixRM> w, Eigen::Ref<const VectorF> b);

void layer_norm_rows(MatrixRM& x, Eigen::Ref<const VectorF> gamma, Eigen::Ref<const VectorF> beta,
                     float eps = 1e-5f);
void gelu_inplace(MatrixRM& x);

struct PatchGeometry {
  int width = 0;   // raster width
  int height = 0;  // raster height
  int patch = 4;   // stride between token origins
  int kernel = 4;  // side of each token's footprint (≥ patch, same parity)

  int tokens_x() const { return width / patch; }
  int tokens_y() const { return height / patch; }
  int token_count() const { return tokens_x() * tokens_y(); }
  int pad() const { return (kernel - patch) / 2; }

  void validate() const;
};

// Non-overlapping strided convolution (kernel = stride = patch). Input is
// (1, Cin, H, W); weight is (C × Cin·p·p) with inner order (cin, ky, kx).
// Returns tokens (T × C), row-major over the token grid.
MatrixRM patch_embed(const Tensor4& input, Eigen::Ref<const MatrixRM> weight, Eigen::Ref<const VectorF> bias,
                     int patch);

// Reassembles a (Cout, H, W) raster from tokens of shape (T × Cout·k·k).
// Each token covers a k×k footprint starting at (ty·p, tx·p) in the padded
// raster; overlapping contributions are summed and the result is cropped by
// pad() on every side. Evaluated per output pixel (gather form), so it maps
// onto a convolution-style reduction rather than a scatter/fold.
Tensor4 vec2patch(const MatrixRM& tokens, const PatchGeometry& geom, int out_channels);

}  // namespace veil

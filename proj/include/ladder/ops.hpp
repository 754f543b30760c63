// Copyright 2026 The LADDER-VFI Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <vector>

#include "ladder/autograd.hpp"

namespace ladder::ops {

/// Multiply-add count (x2) of every conv / attention op executed on this
/// thread while a FlopScope is alive. Used to cross-check the cost model.
class FlopScope {
 public:
  FlopScope();
  ~FlopScope();
  FlopScope(const FlopScope&) = delete;
  FlopScope& operator=(const FlopScope&) = delete;
  std::uint64_t flops() const;

 private:
  std::uint64_t start_;
};

// Convolutions. Weight (Cout, Cin, k, k); bias (1, Cout, 1, 1) or undefined.
Variable conv2d(const Variable& x, const Variable& weight, const Variable& bias, int stride,
                int pad);
// Per-channel k x k, stride 1, zero padding k/2. Weight (C, 1, k, k).
Variable depthwise_conv2d(const Variable& x, const Variable& weight, const Variable& bias);

Variable leaky_relu(const Variable& x, float slope = 0.1f);
Variable sigmoid(const Variable& x);
Variable gelu(const Variable& x);

Variable add(const Variable& a, const Variable& b);
Variable sub(const Variable& a, const Variable& b);
Variable mul(const Variable& a, const Variable& b);
// a * x + b elementwise.
Variable affine(const Variable& x, float a, float b = 0.0f);
// x (N, C, H, W) times m (N, 1, H, W).
Variable mul_broadcast(const Variable& x, const Variable& m);
// Multiplies channel c by factors[c].
Variable channel_scale(const Variable& x, const std::vector<float>& factors);

Variable concat_channels(const std::vector<Variable>& parts);
Variable slice_channels(const Variable& x, int begin, int count);
Variable concat_batch(const std::vector<Variable>& parts);
Variable slice_batch(const Variable& x, int begin, int count);

/// Bilinear x2 upsample with half-pixel centers and edge clamping.
Variable upsample2x(const Variable& x);
/// 2x2 box average; spatial dims must be even.
Variable avg_pool2x(const Variable& x);

/// Bilinear backward warp with border replication. flow is (N, 2, H, W).
Variable backward_warp(const Variable& src, const Variable& flow);

/// Normalizes each pixel's channel vector. gamma/beta are (1, C, 1, 1).
Variable layer_norm_channels(const Variable& x, const Variable& gamma, const Variable& beta,
                             float eps = 1e-5f);

/// Windowed cross-frame attention. The batch holds [frame0 items; frame1
/// items]; item b attends to its own window and to the same window of item
/// (b + N/2) mod N. Border windows are ragged.
Variable window_cross_attention(const Variable& q, const Variable& k, const Variable& v,
                                int heads, int window);

Variable mean(const Variable& x);
Variable sum(const Variable& x);

/// Scalar node with a precomputed value and gradient w.r.t. x.
Variable scalar_with_grad(const Variable& x, float value, Tensor grad);

}  // namespace ladder::ops

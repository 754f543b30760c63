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

#include <cstddef>
#include <string_view>

namespace ladder::simd {

struct CpuFeatures {
  bool avx2 = false;
  bool fma = false;
  bool avx512f = false;
};

const CpuFeatures& cpu_features();

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// One channel-plane stack of a single batch item. Stride 1, zero padding k/2.
struct DepthwiseShape {
  int channels = 0;
  int height = 0;
  int width = 0;
  int kernel = 0;
};

struct WarpShape {
  int channels = 0;
  int height = 0;
  int width = 0;
};

struct AdamWStep {
  float lr = 0.0f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 0.0f;
  float bias_correction1 = 1.0f;  // 1 - beta1^t
  float bias_correction2 = 1.0f;  // 1 - beta2^t
};

/// Function table for the numeric inner loops. Every entry has a scalar
/// reference in scalar_kernels(); the SIMD table replaces the entries whose
/// inner loop vectorizes. Where both sides evaluate the same expression
/// (no reassociation) results are bitwise identical; reductions (dot, gemm,
/// depthwise weight gradients) agree to rounding.
struct KernelTable {
  Isa isa = Isa::scalar;

  // y += a * x
  void (*axpy)(std::size_t n, float a, const float* x, float* y) = nullptr;
  float (*dot)(std::size_t n, const float* x, const float* y) = nullptr;
  // y = a * x
  void (*scale)(std::size_t n, float a, const float* x, float* y) = nullptr;
  void (*add)(std::size_t n, const float* x, const float* y, float* out) = nullptr;
  void (*mul)(std::size_t n, const float* x, const float* y, float* out) = nullptr;
  void (*leaky_relu)(std::size_t n, float slope, const float* x, float* y) = nullptr;
  // dx += dy * (x > 0 ? 1 : slope)
  void (*leaky_relu_backward)(std::size_t n, float slope, const float* x, const float* dy,
                              float* dx) = nullptr;
  void (*adamw)(std::size_t n, const AdamWStep& step, float* w, const float* g, float* m,
                float* v) = nullptr;

  // out = bias + depthwise(in, weight); weight is [channels][k][k].
  void (*depthwise_conv)(const DepthwiseShape& s, const float* in, const float* weight,
                         const float* bias, float* out) = nullptr;
  // Accumulates into din and dweight; either may be null.
  void (*depthwise_conv_backward)(const DepthwiseShape& s, const float* in, const float* weight,
                                  const float* dout, float* din, float* dweight) = nullptr;

  // Bilinear backward warp with border clamp; flow is [2][H][W] (dx, dy).
  void (*warp_bilinear)(const WarpShape& s, const float* src, const float* flow,
                        float* out) = nullptr;

  // Row-major C = alpha * op(A) * op(B) + beta * C.
  void (*gemm)(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a,
               int lda, const float* b, int ldb, float beta, float* c, int ldc) = nullptr;
};

const KernelTable& scalar_kernels();

/// nullptr when the table was not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

/// The table used by the tensor library. Chosen once from the CPU features;
/// LADDER_SIMD=scalar|avx2 overrides the choice.
const KernelTable& kernels();

/// Test hook: switches the active table for the current process.
void select_kernels(Isa isa);

}  // namespace ladder::simd

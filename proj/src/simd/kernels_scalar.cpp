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

#include <algorithm>
#include <cmath>

#include "ladder/simd/kernels.hpp"
#include "ladder/simd/warp_reference.hpp"

namespace ladder::simd {
namespace {

void axpy(std::size_t n, float a, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

float dot(std::size_t n, const float* x, const float* y) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void scale(std::size_t n, float a, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

void add(std::size_t n, const float* x, const float* y, float* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(std::size_t n, const float* x, const float* y, float* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void leaky_relu(std::size_t n, float slope, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void leaky_relu_backward(std::size_t n, float slope, const float* x, const float* dy, float* dx) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += x[i] > 0.0f ? dy[i] : slope * dy[i];
}

void adamw(std::size_t n, const AdamWStep& s, float* w, const float* g, float* m, float* v) {
  const float decay = 1.0f - s.lr * s.weight_decay;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = s.beta1 * m[i] + (1.0f - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0f - s.beta2) * (g[i] * g[i]);
    const float m_hat = m[i] / s.bias_correction1;
    const float v_hat = v[i] / s.bias_correction2;
    w[i] = w[i] * decay - s.lr * (m_hat / (std::sqrt(v_hat) + s.eps));
  }
}

// Valid output columns [lo, hi) for a horizontal tap offset.
inline void column_range(int width, int offset, int& lo, int& hi) {
  lo = std::max(0, -offset);
  hi = std::min(width, width - offset);
}

void depthwise_conv(const DepthwiseShape& s, const float* in, const float* weight,
                    const float* bias, float* out) {
  const int h = s.height, w = s.width, k = s.kernel, pad = k / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < s.channels; ++c) {
    const float* src = in + c * plane;
    const float* wc = weight + static_cast<std::size_t>(c) * k * k;
    float* dst = out + c * plane;
    std::fill(dst, dst + plane, bias != nullptr ? bias[c] : 0.0f);
    for (int y = 0; y < h; ++y) {
      float* row = dst + static_cast<std::size_t>(y) * w;
      for (int i = 0; i < k; ++i) {
        const int sy = y + i - pad;
        if (sy < 0 || sy >= h) continue;
        const float* srow = src + static_cast<std::size_t>(sy) * w;
        for (int j = 0; j < k; ++j) {
          const int off = j - pad;
          int lo, hi;
          column_range(w, off, lo, hi);
          const float a = wc[i * k + j];
          for (int x = lo; x < hi; ++x) row[x] += a * srow[x + off];
        }
      }
    }
  }
}

void depthwise_conv_backward(const DepthwiseShape& s, const float* in, const float* weight,
                             const float* dout, float* din, float* dweight) {
  const int h = s.height, w = s.width, k = s.kernel, pad = k / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < s.channels; ++c) {
    const float* src = in + c * plane;
    const float* g = dout + c * plane;
    const float* wc = weight + static_cast<std::size_t>(c) * k * k;
    float* dsrc = din != nullptr ? din + c * plane : nullptr;
    float* dwc = dweight != nullptr ? dweight + static_cast<std::size_t>(c) * k * k : nullptr;
    for (int y = 0; y < h; ++y) {
      const float* grow = g + static_cast<std::size_t>(y) * w;
      for (int i = 0; i < k; ++i) {
        const int sy = y + i - pad;
        if (sy < 0 || sy >= h) continue;
        for (int j = 0; j < k; ++j) {
          const int off = j - pad;
          int lo, hi;
          column_range(w, off, lo, hi);
          if (hi <= lo) continue;
          if (dsrc != nullptr) {
            float* drow = dsrc + static_cast<std::size_t>(sy) * w + off;
            const float a = wc[i * k + j];
            for (int x = lo; x < hi; ++x) drow[x] += a * grow[x];
          }
          if (dwc != nullptr) {
            const float* srow = src + static_cast<std::size_t>(sy) * w + off;
            float acc = 0.0f;
            for (int x = lo; x < hi; ++x) acc += grow[x] * srow[x];
            dwc[i * k + j] += acc;
          }
        }
      }
    }
  }
}

void warp_bilinear(const WarpShape& s, const float* src, const float* flow, float* out) {
  reference::warp_forward<float>(s, src, flow, out);
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * ldc;
    if (beta == 0.0f) {
      std::fill(crow, crow + n, 0.0f);
    } else if (beta != 1.0f) {
      for (int j = 0; j < n; ++j) crow[j] *= beta;
    }
    for (int p = 0; p < k; ++p) {
      const float av = trans_a ? a[static_cast<std::size_t>(p) * lda + i]
                               : a[static_cast<std::size_t>(i) * lda + p];
      const float s = alpha * av;
      if (s == 0.0f) continue;
      if (!trans_b) {
        const float* brow = b + static_cast<std::size_t>(p) * ldb;
        for (int j = 0; j < n; ++j) crow[j] += s * brow[j];
      } else {
        for (int j = 0; j < n; ++j) crow[j] += s * b[static_cast<std::size_t>(j) * ldb + p];
      }
    }
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table = [] {
    KernelTable t;
    t.isa = Isa::scalar;
    t.axpy = axpy;
    t.dot = dot;
    t.scale = scale;
    t.add = add;
    t.mul = mul;
    t.leaky_relu = leaky_relu;
    t.leaky_relu_backward = leaky_relu_backward;
    t.adamw = adamw;
    t.depthwise_conv = depthwise_conv;
    t.depthwise_conv_backward = depthwise_conv_backward;
    t.warp_bilinear = warp_bilinear;
    t.gemm = gemm;
    return t;
  }();
  return table;
}

}  // namespace ladder::simd

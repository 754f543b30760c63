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

// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include <cblas.h>

#include "ladder/simd/kernels.hpp"
#include "ladder/simd/warp_reference.hpp"

namespace ladder::simd::avx2 {
namespace {

inline float horizontal_sum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

void axpy(std::size_t n, float a, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

float dot(std::size_t n, const float* x, const float* y) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
  }
  float acc = horizontal_sum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void scale(std::size_t n, float a, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(y + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}

void add(std::size_t n, const float* x, const float* y, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(std::size_t n, const float* x, const float* y, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void leaky_relu(std::size_t n, float slope, const float* x, float* y) {
  const __m256 vs = _mm256_set1_ps(slope);
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256 pos = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
    _mm256_storeu_ps(y + i, _mm256_blendv_ps(_mm256_mul_ps(vs, v), v, pos));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void leaky_relu_backward(std::size_t n, float slope, const float* x, const float* dy, float* dx) {
  const __m256 vs = _mm256_set1_ps(slope);
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = _mm256_loadu_ps(dy + i);
    const __m256 pos = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    const __m256 contrib = _mm256_blendv_ps(_mm256_mul_ps(vs, g), g, pos);
    _mm256_storeu_ps(dx + i, _mm256_add_ps(_mm256_loadu_ps(dx + i), contrib));
  }
  for (; i < n; ++i) dx[i] += x[i] > 0.0f ? dy[i] : slope * dy[i];
}

void adamw(std::size_t n, const AdamWStep& s, float* w, const float* g, float* m, float* v) {
  const float decay = 1.0f - s.lr * s.weight_decay;
  const __m256 b1 = _mm256_set1_ps(s.beta1);
  const __m256 b1c = _mm256_set1_ps(1.0f - s.beta1);
  const __m256 b2 = _mm256_set1_ps(s.beta2);
  const __m256 b2c = _mm256_set1_ps(1.0f - s.beta2);
  const __m256 bc1 = _mm256_set1_ps(s.bias_correction1);
  const __m256 bc2 = _mm256_set1_ps(s.bias_correction2);
  const __m256 lr = _mm256_set1_ps(s.lr);
  const __m256 eps = _mm256_set1_ps(s.eps);
  const __m256 vdecay = _mm256_set1_ps(decay);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 gi = _mm256_loadu_ps(g + i);
    const __m256 mi = _mm256_add_ps(_mm256_mul_ps(b1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(b1c, gi));
    const __m256 vi = _mm256_add_ps(_mm256_mul_ps(b2, _mm256_loadu_ps(v + i)),
                                    _mm256_mul_ps(b2c, _mm256_mul_ps(gi, gi)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 m_hat = _mm256_div_ps(mi, bc1);
    const __m256 v_hat = _mm256_div_ps(vi, bc2);
    const __m256 step = _mm256_mul_ps(lr, _mm256_div_ps(m_hat, _mm256_add_ps(_mm256_sqrt_ps(v_hat), eps)));
    _mm256_storeu_ps(w + i, _mm256_sub_ps(_mm256_mul_ps(_mm256_loadu_ps(w + i), vdecay), step));
  }
  for (; i < n; ++i) {
    m[i] = s.beta1 * m[i] + (1.0f - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0f - s.beta2) * (g[i] * g[i]);
    const float m_hat = m[i] / s.bias_correction1;
    const float v_hat = v[i] / s.bias_correction2;
    w[i] = w[i] * decay - s.lr * (m_hat / (std::sqrt(v_hat) + s.eps));
  }
}

// Zero-padded copy of one plane: pad rows/cols of k/2 plus a lane of slack so
// 8-wide loads never leave the buffer.
struct PaddedPlane {
  std::vector<float> data;
  int stride = 0;

  void fill(const float* src, int h, int w, int pad) {
    stride = w + 2 * pad + 8;
    data.assign(static_cast<std::size_t>(h + 2 * pad) * stride, 0.0f);
    for (int y = 0; y < h; ++y) {
      std::memcpy(&data[static_cast<std::size_t>(y + pad) * stride + pad],
                  src + static_cast<std::size_t>(y) * w, sizeof(float) * w);
    }
  }
  const float* row(int y) const { return data.data() + static_cast<std::size_t>(y) * stride; }
};

// out[y][x] = init + sum_{i,j} taps[i*k+j] * padded[y+i][x+j], taps applied in (i, j) order.
void correlate_padded(const PaddedPlane& p, const float* taps, int k, int h, int w, float init,
                      float* out, bool accumulate) {
  const __m256 vinit = _mm256_set1_ps(init);
  for (int y = 0; y < h; ++y) {
    float* orow = out + static_cast<std::size_t>(y) * w;
    int x = 0;
    for (; x + 16 <= w; x += 16) {
      __m256 acc0 = vinit;
      __m256 acc1 = vinit;
      for (int i = 0; i < k; ++i) {
        const float* prow = p.row(y + i) + x;
        const float* trow = taps + i * k;
        for (int j = 0; j < k; ++j) {
          const __m256 a = _mm256_set1_ps(trow[j]);
          acc0 = _mm256_add_ps(acc0, _mm256_mul_ps(a, _mm256_loadu_ps(prow + j)));
          acc1 = _mm256_add_ps(acc1, _mm256_mul_ps(a, _mm256_loadu_ps(prow + j + 8)));
        }
      }
      if (accumulate) {
        acc0 = _mm256_add_ps(_mm256_loadu_ps(orow + x), acc0);
        acc1 = _mm256_add_ps(_mm256_loadu_ps(orow + x + 8), acc1);
      }
      _mm256_storeu_ps(orow + x, acc0);
      _mm256_storeu_ps(orow + x + 8, acc1);
    }
    for (; x < w; x += 8) {
      __m256 acc = vinit;
      for (int i = 0; i < k; ++i) {
        const float* prow = p.row(y + i) + x;
        const float* trow = taps + i * k;
        for (int j = 0; j < k; ++j) {
          acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_set1_ps(trow[j]), _mm256_loadu_ps(prow + j)));
        }
      }
      alignas(32) float lanes[8];
      _mm256_store_ps(lanes, acc);
      const int count = std::min(8, w - x);
      for (int t = 0; t < count; ++t) orow[x + t] = accumulate ? orow[x + t] + lanes[t] : lanes[t];
    }
  }
}

void depthwise_conv(const DepthwiseShape& s, const float* in, const float* weight,
                    const float* bias, float* out) {
  const int h = s.height, w = s.width, k = s.kernel, pad = k / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  PaddedPlane padded;
  for (int c = 0; c < s.channels; ++c) {
    padded.fill(in + c * plane, h, w, pad);
    correlate_padded(padded, weight + static_cast<std::size_t>(c) * k * k, k, h, w,
                     bias != nullptr ? bias[c] : 0.0f, out + c * plane, false);
  }
}

void depthwise_conv_backward(const DepthwiseShape& s, const float* in, const float* weight,
                             const float* dout, float* din, float* dweight) {
  const int h = s.height, w = s.width, k = s.kernel, pad = k / 2;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  PaddedPlane padded;
  std::vector<float> flipped(static_cast<std::size_t>(k) * k);
  for (int c = 0; c < s.channels; ++c) {
    const float* wc = weight + static_cast<std::size_t>(c) * k * k;
    if (din != nullptr) {
      // Input gradient is a correlation of dout with the flipped kernel.
      for (int t = 0; t < k * k; ++t) flipped[t] = wc[k * k - 1 - t];
      padded.fill(dout + c * plane, h, w, pad);
      correlate_padded(padded, flipped.data(), k, h, w, 0.0f, din + c * plane, true);
    }
    if (dweight != nullptr) {
      padded.fill(in + c * plane, h, w, pad);
      const float* g = dout + c * plane;
      float* dwc = dweight + static_cast<std::size_t>(c) * k * k;
      for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
          __m256 acc = _mm256_setzero_ps();
          float tail = 0.0f;
          for (int y = 0; y < h; ++y) {
            const float* grow = g + static_cast<std::size_t>(y) * w;
            const float* prow = padded.row(y + i) + j;
            int x = 0;
            for (; x + 8 <= w; x += 8) {
              acc = _mm256_fmadd_ps(_mm256_loadu_ps(grow + x), _mm256_loadu_ps(prow + x), acc);
            }
            for (; x < w; ++x) tail += grow[x] * prow[x];
          }
          dwc[i * k + j] += horizontal_sum(acc) + tail;
        }
      }
    }
  }
}

void warp_bilinear(const WarpShape& s, const float* src, const float* flow, float* out) {
  const int h = s.height, w = s.width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const float* flow_x = flow;
  const float* flow_y = flow + plane;
  const __m256 zero = _mm256_setzero_ps();
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 max_x = _mm256_set1_ps(static_cast<float>(w - 1));
  const __m256 max_y = _mm256_set1_ps(static_cast<float>(h - 1));
  const __m256i last_col = _mm256_set1_epi32(w - 1);
  const __m256i last_row = _mm256_set1_epi32(h - 1);
  const __m256i vw = _mm256_set1_epi32(w);
  const __m256i ione = _mm256_set1_epi32(1);
  const __m256 lane = _mm256_setr_ps(0, 1, 2, 3, 4, 5, 6, 7);
  for (int y = 0; y < h; ++y) {
    const __m256 vy = _mm256_set1_ps(static_cast<float>(y));
    int x = 0;
    for (; x + 8 <= w; x += 8) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      __m256 sx = _mm256_add_ps(_mm256_add_ps(_mm256_set1_ps(static_cast<float>(x)), lane),
                                _mm256_loadu_ps(flow_x + p));
      __m256 sy = _mm256_add_ps(vy, _mm256_loadu_ps(flow_y + p));
      sx = _mm256_max_ps(_mm256_min_ps(sx, max_x), zero);
      sy = _mm256_max_ps(_mm256_min_ps(sy, max_y), zero);
      const __m256 fx = _mm256_floor_ps(sx);
      const __m256 fy = _mm256_floor_ps(sy);
      const __m256 wx = _mm256_sub_ps(sx, fx);
      const __m256 wy = _mm256_sub_ps(sy, fy);
      const __m256 ax = _mm256_sub_ps(one, wx);
      const __m256 ay = _mm256_sub_ps(one, wy);
      const __m256i x0 = _mm256_cvttps_epi32(fx);
      const __m256i y0 = _mm256_cvttps_epi32(fy);
      const __m256i x1 = _mm256_min_epi32(_mm256_add_epi32(x0, ione), last_col);
      const __m256i y1 = _mm256_min_epi32(_mm256_add_epi32(y0, ione), last_row);
      const __m256i r0 = _mm256_mullo_epi32(y0, vw);
      const __m256i r1 = _mm256_mullo_epi32(y1, vw);
      const __m256i i00 = _mm256_add_epi32(r0, x0);
      const __m256i i01 = _mm256_add_epi32(r0, x1);
      const __m256i i10 = _mm256_add_epi32(r1, x0);
      const __m256i i11 = _mm256_add_epi32(r1, x1);
      for (int c = 0; c < s.channels; ++c) {
        const float* sc = src + c * plane;
        const __m256 v00 = _mm256_i32gather_ps(sc, i00, 4);
        const __m256 v01 = _mm256_i32gather_ps(sc, i01, 4);
        const __m256 v10 = _mm256_i32gather_ps(sc, i10, 4);
        const __m256 v11 = _mm256_i32gather_ps(sc, i11, 4);
        const __m256 top = _mm256_add_ps(_mm256_mul_ps(ax, v00), _mm256_mul_ps(wx, v01));
        const __m256 bottom = _mm256_add_ps(_mm256_mul_ps(ax, v10), _mm256_mul_ps(wx, v11));
        _mm256_storeu_ps(out + c * plane + p,
                         _mm256_add_ps(_mm256_mul_ps(ay, top), _mm256_mul_ps(wy, bottom)));
      }
    }
    for (; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const auto tap = reference::bilinear_tap<float>(static_cast<float>(x) + flow_x[p],
                                                      static_cast<float>(y) + flow_y[p], w, h);
      const std::size_t j00 = static_cast<std::size_t>(tap.y0) * w + tap.x0;
      const std::size_t j01 = static_cast<std::size_t>(tap.y0) * w + tap.x1;
      const std::size_t j10 = static_cast<std::size_t>(tap.y1) * w + tap.x0;
      const std::size_t j11 = static_cast<std::size_t>(tap.y1) * w + tap.x1;
      const float ax = 1.0f - tap.wx;
      const float ay = 1.0f - tap.wy;
      for (int c = 0; c < s.channels; ++c) {
        const float* sc = src + c * plane;
        const float top = ax * sc[j00] + tap.wx * sc[j01];
        const float bottom = ax * sc[j10] + tap.wx * sc[j11];
        out[c * plane + p] = ay * top + tap.wy * bottom;
      }
    }
  }
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t = [] {
    openblas_set_num_threads(1);
    KernelTable k;
    k.isa = Isa::avx2;
    k.axpy = axpy;
    k.dot = dot;
    k.scale = scale;
    k.add = add;
    k.mul = mul;
    k.leaky_relu = leaky_relu;
    k.leaky_relu_backward = leaky_relu_backward;
    k.adamw = adamw;
    k.depthwise_conv = depthwise_conv;
    k.depthwise_conv_backward = depthwise_conv_backward;
    k.warp_bilinear = warp_bilinear;
    k.gemm = gemm;
    return k;
  }();
  return t;
}

}  // namespace ladder::simd::avx2

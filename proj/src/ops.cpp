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

#include "ladder/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ladder/error.hpp"
#include "ladder/simd/kernels.hpp"
#include "ladder/simd/warp_reference.hpp"

namespace ladder::ops {

using detail::Node;

namespace {

thread_local std::uint64_t g_flops = 0;

void count_flops(std::uint64_t f) { g_flops += f; }

const simd::KernelTable& K() { return simd::kernels(); }

void accumulate(Tensor* dst, const Tensor& src) {
  if (dst != nullptr) K().axpy(src.numel(), 1.0f, src.data(), dst->data());
}

void require_same(const Variable& a, const Variable& b, const char* op) {
  require(a.shape() == b.shape(), "{}: shape mismatch {} vs {}", op, a.shape().str(),
          b.shape().str());
}

// Convolution geometry for one batch item.
struct ConvGeom {
  int cin, h, w, cout, k, stride, pad, ho, wo;
  std::size_t patch() const { return static_cast<std::size_t>(cin) * k * k; }
  std::size_t out_plane() const { return static_cast<std::size_t>(ho) * wo; }
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
  // Output rows per im2col chunk, keeping the column buffer near 16 MB.
  int chunk_rows() const {
    const std::size_t per_row = patch() * wo;
    return static_cast<int>(std::clamp<std::size_t>((std::size_t{4} << 20) / per_row, 1, ho));
  }
};

// Output columns [lo, hi) whose tap j lands inside the input row.
void tap_range(const ConvGeom& g, int j, int& lo, int& hi) {
  const int first = g.pad - j;  // sx = ox * stride - first
  lo = first > 0 ? (first + g.stride - 1) / g.stride : 0;
  hi = std::min(g.wo, (g.w + first + g.stride - 1) / g.stride);
  hi = std::max(hi, lo);
}

void im2col(const ConvGeom& g, const float* x, int r0, int r1, float* cols) {
  const std::size_t n = static_cast<std::size_t>(r1 - r0) * g.wo;
  const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
  for (int c = 0; c < g.cin; ++c) {
    const float* xc = x + c * plane;
    for (int i = 0; i < g.k; ++i) {
      for (int j = 0; j < g.k; ++j) {
        float* dst = cols + ((static_cast<std::size_t>(c) * g.k + i) * g.k + j) * n;
        int lo = 0;
        int hi = 0;
        tap_range(g, j, lo, hi);
        const int off = j - g.pad;
        for (int r = r0; r < r1; ++r) {
          const int sy = r * g.stride - g.pad + i;
          float* drow = dst + static_cast<std::size_t>(r - r0) * g.wo;
          if (sy < 0 || sy >= g.h) {
            std::fill(drow, drow + g.wo, 0.0f);
            continue;
          }
          const float* srow = xc + static_cast<std::size_t>(sy) * g.w;
          std::fill(drow, drow + lo, 0.0f);
          if (g.stride == 1) {
            std::copy(srow + lo + off, srow + hi + off, drow + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox) drow[ox] = srow[ox * g.stride + off];
          }
          std::fill(drow + hi, drow + g.wo, 0.0f);
        }
      }
    }
  }
}

void col2im(const ConvGeom& g, const float* cols, int r0, int r1, float* dx) {
  const std::size_t n = static_cast<std::size_t>(r1 - r0) * g.wo;
  const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
  for (int c = 0; c < g.cin; ++c) {
    float* dc = dx + c * plane;
    for (int i = 0; i < g.k; ++i) {
      for (int j = 0; j < g.k; ++j) {
        const float* src = cols + ((static_cast<std::size_t>(c) * g.k + i) * g.k + j) * n;
        int lo = 0;
        int hi = 0;
        tap_range(g, j, lo, hi);
        const int off = j - g.pad;
        for (int r = r0; r < r1; ++r) {
          const int sy = r * g.stride - g.pad + i;
          if (sy < 0 || sy >= g.h) continue;
          const float* srow = src + static_cast<std::size_t>(r - r0) * g.wo;
          float* drow = dc + static_cast<std::size_t>(sy) * g.w;
          if (g.stride == 1) {
            float* d = drow + off;
            for (int ox = lo; ox < hi; ++ox) d[ox] += srow[ox];
          } else {
            for (int ox = lo; ox < hi; ++ox) drow[ox * g.stride + off] += srow[ox];
          }
        }
      }
    }
  }
}

// Per-thread column buffer; contents are always fully overwritten before use.
float* scratch(std::size_t n) {
  thread_local std::vector<float> buf;
  if (buf.size() < n) buf.resize(n);
  return buf.data();
}

void conv_forward_item(const ConvGeom& g, const float* x, const float* w, const float* b,
                       float* out) {
  const std::size_t p = g.out_plane();
  for (int o = 0; o < g.cout; ++o) {
    std::fill(out + o * p, out + (o + 1) * p, b != nullptr ? b[o] : 0.0f);
  }
  const int ld = static_cast<int>(p);
  if (g.pointwise()) {
    K().gemm(false, false, g.cout, ld, g.cin, 1.0f, w, g.cin, x, ld, 1.0f, out, ld);
    return;
  }
  const int rows = g.chunk_rows();
  const int kk = static_cast<int>(g.patch());
  float* cols = scratch(static_cast<std::size_t>(kk) * rows * g.wo);
  for (int r0 = 0; r0 < g.ho; r0 += rows) {
    const int r1 = std::min(g.ho, r0 + rows);
    const int n = (r1 - r0) * g.wo;
    im2col(g, x, r0, r1, cols);
    K().gemm(false, false, g.cout, n, kk, 1.0f, w, kk, cols, n, 1.0f,
             out + static_cast<std::size_t>(r0) * g.wo, ld);
  }
}

void conv_backward_item(const ConvGeom& g, const float* x, const float* w, const float* dout,
                        float* dx, float* dw, float* db) {
  const std::size_t p = g.out_plane();
  const int ld = static_cast<int>(p);
  if (db != nullptr) {
    for (int o = 0; o < g.cout; ++o) {
      const float* row = dout + o * p;
      db[o] += std::accumulate(row, row + p, 0.0f);
    }
  }
  if (g.pointwise()) {
    if (dw != nullptr) K().gemm(false, true, g.cout, g.cin, ld, 1.0f, dout, ld, x, ld, 1.0f, dw, g.cin);
    if (dx != nullptr) K().gemm(true, false, g.cin, ld, g.cout, 1.0f, w, g.cin, dout, ld, 1.0f, dx, ld);
    return;
  }
  const int rows = g.chunk_rows();
  const int kk = static_cast<int>(g.patch());
  float* cols = scratch(static_cast<std::size_t>(kk) * rows * g.wo);
  for (int r0 = 0; r0 < g.ho; r0 += rows) {
    const int r1 = std::min(g.ho, r0 + rows);
    const int n = (r1 - r0) * g.wo;
    const float* dchunk = dout + static_cast<std::size_t>(r0) * g.wo;
    if (dw != nullptr) {
      im2col(g, x, r0, r1, cols);
      K().gemm(false, true, g.cout, kk, n, 1.0f, dchunk, ld, cols, n, 1.0f, dw, kk);
    }
    if (dx != nullptr) {
      K().gemm(true, false, kk, n, g.cout, 1.0f, w, kk, dchunk, ld, 0.0f, cols, n);
      col2im(g, cols, r0, r1, dx);
    }
  }
}

}  // namespace

FlopScope::FlopScope() : start_(g_flops) {}
FlopScope::~FlopScope() = default;
std::uint64_t FlopScope::flops() const { return g_flops - start_; }

Variable conv2d(const Variable& x, const Variable& weight, const Variable& bias, int stride,
                int pad) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  require(ws.c == xs.c, "conv2d: input has {} channels, weight expects {}", xs.c, ws.c);
  require(ws.h == ws.w && stride >= 1 && pad >= 0, "conv2d: unsupported geometry");
  ConvGeom g{xs.c, xs.h, xs.w, ws.n, ws.h, stride, pad, 0, 0};
  g.ho = (xs.h + 2 * pad - g.k) / stride + 1;
  g.wo = (xs.w + 2 * pad - g.k) / stride + 1;
  require(g.ho > 0 && g.wo > 0, "conv2d: input {} too small for kernel {}", xs.str(), g.k);
  const bool has_bias = bias.defined();
  if (has_bias) require(bias.value().numel() == static_cast<std::size_t>(g.cout), "conv2d: bias size");

  Tensor out(Shape{xs.n, g.cout, g.ho, g.wo});
  for (int n = 0; n < xs.n; ++n) {
    conv_forward_item(g, x.value().item(n), weight.value().data(),
                      has_bias ? bias.value().data() : nullptr, out.item(n));
  }
  count_flops(std::uint64_t{2} * g.patch() * g.cout * g.out_plane() * xs.n);

  std::vector<Variable> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return Variable::make(std::move(out), std::move(inputs), [g, has_bias](Node& node) {
    const Tensor& xv = node.inputs[0]->value;
    const Tensor& wv = node.inputs[1]->value;
    Tensor* dx = node.input_grad(0);
    Tensor* dw = node.input_grad(1);
    Tensor* db = has_bias ? node.input_grad(2) : nullptr;
    for (int n = 0; n < xv.shape().n; ++n) {
      conv_backward_item(g, xv.item(n), wv.data(), node.grad.item(n),
                         dx != nullptr ? dx->item(n) : nullptr, dw != nullptr ? dw->data() : nullptr,
                         db != nullptr ? db->data() : nullptr);
    }
  });
}

Variable depthwise_conv2d(const Variable& x, const Variable& weight, const Variable& bias) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  require(ws.n == xs.c && ws.c == 1 && ws.h == ws.w && ws.h % 2 == 1,
          "depthwise_conv2d: weight {} incompatible with input {}", ws.str(), xs.str());
  const simd::DepthwiseShape s{xs.c, xs.h, xs.w, ws.h};
  const bool has_bias = bias.defined();
  Tensor out(xs);
  for (int n = 0; n < xs.n; ++n) {
    K().depthwise_conv(s, x.value().item(n), weight.value().data(),
                       has_bias ? bias.value().data() : nullptr, out.item(n));
  }
  count_flops(std::uint64_t{2} * ws.h * ws.w * xs.numel());

  std::vector<Variable> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return Variable::make(std::move(out), std::move(inputs), [s, has_bias](Node& node) {
    const Tensor& xv = node.inputs[0]->value;
    const Tensor& wv = node.inputs[1]->value;
    Tensor* dx = node.input_grad(0);
    Tensor* dw = node.input_grad(1);
    Tensor* db = has_bias ? node.input_grad(2) : nullptr;
    const std::size_t plane = xv.shape().plane();
    for (int n = 0; n < xv.shape().n; ++n) {
      K().depthwise_conv_backward(s, xv.item(n), wv.data(), node.grad.item(n),
                                  dx != nullptr ? dx->item(n) : nullptr,
                                  dw != nullptr ? dw->data() : nullptr);
      if (db != nullptr) {
        for (int c = 0; c < s.channels; ++c) {
          const float* row = node.grad.plane(n, c);
          db->data()[c] += std::accumulate(row, row + plane, 0.0f);
        }
      }
    }
  });
}

Variable leaky_relu(const Variable& x, float slope) {
  Tensor out(x.shape());
  K().leaky_relu(out.numel(), slope, x.value().data(), out.data());
  return Variable::make(std::move(out), {x}, [slope](Node& node) {
    if (Tensor* dx = node.input_grad(0)) {
      K().leaky_relu_backward(dx->numel(), slope, node.inputs[0]->value.data(), node.grad.data(),
                              dx->data());
    }
  });
}

Variable sigmoid(const Variable& x) {
  Tensor out(x.shape());
  const float* xv = x.value().data();
  for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = 1.0f / (1.0f + std::exp(-xv[i]));
  return Variable::make(std::move(out), {x}, [](Node& node) {
    if (Tensor* dx = node.input_grad(0)) {
      const float* y = node.value.data();
      const float* g = node.grad.data();
      for (std::size_t i = 0; i < dx->numel(); ++i) dx->data()[i] += g[i] * y[i] * (1.0f - y[i]);
    }
  });
}

Variable gelu(const Variable& x) {
  Tensor out(x.shape());
  const float* xv = x.value().data();
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out.data()[i] = 0.5f * xv[i] * (1.0f + std::erf(xv[i] * static_cast<float>(M_SQRT1_2)));
  }
  return Variable::make(std::move(out), {x}, [](Node& node) {
    if (Tensor* dx = node.input_grad(0)) {
      const float* xv = node.inputs[0]->value.data();
      const float* g = node.grad.data();
      const float inv_sqrt_2pi = static_cast<float>(0.5 * M_2_SQRTPI * M_SQRT1_2);
      for (std::size_t i = 0; i < dx->numel(); ++i) {
        const float cdf = 0.5f * (1.0f + std::erf(xv[i] * static_cast<float>(M_SQRT1_2)));
        const float pdf = inv_sqrt_2pi * std::exp(-0.5f * xv[i] * xv[i]);
        dx->data()[i] += g[i] * (cdf + xv[i] * pdf);
      }
    }
  });
}

Variable add(const Variable& a, const Variable& b) {
  require_same(a, b, "add");
  Tensor out(a.shape());
  K().add(out.numel(), a.value().data(), b.value().data(), out.data());
  return Variable::make(std::move(out), {a, b}, [](Node& node) {
    accumulate(node.input_grad(0), node.grad);
    accumulate(node.input_grad(1), node.grad);
  });
}

Variable sub(const Variable& a, const Variable& b) {
  require_same(a, b, "sub");
  Tensor out(a.shape());
  const float* av = a.value().data();
  const float* bv = b.value().data();
  for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = av[i] - bv[i];
  return Variable::make(std::move(out), {a, b}, [](Node& node) {
    accumulate(node.input_grad(0), node.grad);
    if (Tensor* db = node.input_grad(1)) K().axpy(db->numel(), -1.0f, node.grad.data(), db->data());
  });
}

Variable mul(const Variable& a, const Variable& b) {
  require_same(a, b, "mul");
  Tensor out(a.shape());
  K().mul(out.numel(), a.value().data(), b.value().data(), out.data());
  return Variable::make(std::move(out), {a, b}, [](Node& node) {
    const std::size_t n = node.grad.numel();
    const float* g = node.grad.data();
    if (Tensor* da = node.input_grad(0)) {
      const float* bv = node.inputs[1]->value.data();
      for (std::size_t i = 0; i < n; ++i) da->data()[i] += g[i] * bv[i];
    }
    if (Tensor* db = node.input_grad(1)) {
      const float* av = node.inputs[0]->value.data();
      for (std::size_t i = 0; i < n; ++i) db->data()[i] += g[i] * av[i];
    }
  });
}

Variable affine(const Variable& x, float a, float b) {
  Tensor out(x.shape());
  const float* xv = x.value().data();
  for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] = a * xv[i] + b;
  return Variable::make(std::move(out), {x}, [a](Node& node) {
    if (Tensor* dx = node.input_grad(0)) K().axpy(dx->numel(), a, node.grad.data(), dx->data());
  });
}

Variable mul_broadcast(const Variable& x, const Variable& m) {
  const Shape xs = x.shape();
  const Shape ms = m.shape();
  require(ms.n == xs.n && ms.c == 1 && ms.same_spatial(xs),
          "mul_broadcast: mask {} does not broadcast over {}", ms.str(), xs.str());
  Tensor out(xs);
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      K().mul(xs.plane(), x.value().plane(n, c), m.value().item(n), out.plane(n, c));
    }
  }
  return Variable::make(std::move(out), {x, m}, [](Node& node) {
    const Tensor& xv = node.inputs[0]->value;
    const Tensor& mv = node.inputs[1]->value;
    const Shape s = xv.shape();
    Tensor* dx = node.input_grad(0);
    Tensor* dm = node.input_grad(1);
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const float* g = node.grad.plane(n, c);
        for (std::size_t p = 0; p < s.plane(); ++p) {
          if (dx != nullptr) dx->plane(n, c)[p] += g[p] * mv.item(n)[p];
          if (dm != nullptr) dm->item(n)[p] += g[p] * xv.plane(n, c)[p];
        }
      }
    }
  });
}

Variable channel_scale(const Variable& x, const std::vector<float>& factors) {
  const Shape s = x.shape();
  require(factors.size() == static_cast<std::size_t>(s.c), "channel_scale: {} factors for {} channels",
          factors.size(), s.c);
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) K().scale(s.plane(), factors[c], x.value().plane(n, c), out.plane(n, c));
  }
  return Variable::make(std::move(out), {x}, [factors](Node& node) {
    Tensor* dx = node.input_grad(0);
    if (dx == nullptr) return;
    const Shape s = dx->shape();
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) K().axpy(s.plane(), factors[c], node.grad.plane(n, c), dx->plane(n, c));
    }
  });
}

Variable concat_channels(const std::vector<Variable>& parts) {
  require(!parts.empty(), "concat_channels: no inputs");
  Shape s = parts[0].shape();
  s.c = 0;
  for (const auto& p : parts) {
    require(p.shape().n == s.n && p.shape().same_spatial(s), "concat_channels: {} vs {}",
            p.shape().str(), parts[0].shape().str());
    s.c += p.shape().c;
  }
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    float* dst = out.item(n);
    for (const auto& p : parts) {
      const std::size_t sz = p.shape().item();
      std::copy(p.value().item(n), p.value().item(n) + sz, dst);
      dst += sz;
    }
  }
  return Variable::make(std::move(out), parts, [](Node& node) {
    const int batch = node.value.shape().n;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      const std::size_t sz = node.inputs[i]->value.shape().item();
      if (Tensor* d = node.input_grad(i)) {
        for (int n = 0; n < batch; ++n) K().axpy(sz, 1.0f, node.grad.item(n) + offset, d->item(n));
      }
      offset += sz;
    }
  });
}

Variable slice_channels(const Variable& x, int begin, int count) {
  const Shape xs = x.shape();
  require(begin >= 0 && count > 0 && begin + count <= xs.c, "slice_channels: [{}, {}) of {}", begin,
          begin + count, xs.c);
  const Shape s{xs.n, count, xs.h, xs.w};
  Tensor out(s);
  for (int n = 0; n < xs.n; ++n) {
    const float* src = x.value().plane(n, begin);
    std::copy(src, src + s.item(), out.item(n));
  }
  return Variable::make(std::move(out), {x}, [begin](Node& node) {
    Tensor* dx = node.input_grad(0);
    if (dx == nullptr) return;
    const Shape s = node.value.shape();
    for (int n = 0; n < s.n; ++n) K().axpy(s.item(), 1.0f, node.grad.item(n), dx->plane(n, begin));
  });
}

Variable concat_batch(const std::vector<Variable>& parts) {
  require(!parts.empty(), "concat_batch: no inputs");
  Shape s = parts[0].shape();
  s.n = 0;
  for (const auto& p : parts) {
    require(p.shape().c == s.c && p.shape().same_spatial(s), "concat_batch: {} vs {}",
            p.shape().str(), parts[0].shape().str());
    s.n += p.shape().n;
  }
  Tensor out(s);
  float* dst = out.data();
  for (const auto& p : parts) dst = std::copy(p.value().data(), p.value().data() + p.value().numel(), dst);
  return Variable::make(std::move(out), parts, [](Node& node) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      const std::size_t sz = node.inputs[i]->value.numel();
      if (Tensor* d = node.input_grad(i)) K().axpy(sz, 1.0f, node.grad.data() + offset, d->data());
      offset += sz;
    }
  });
}

Variable slice_batch(const Variable& x, int begin, int count) {
  const Shape xs = x.shape();
  require(begin >= 0 && count > 0 && begin + count <= xs.n, "slice_batch: [{}, {}) of {}", begin,
          begin + count, xs.n);
  Tensor out(Shape{count, xs.c, xs.h, xs.w});
  std::copy(x.value().item(begin), x.value().item(begin) + out.numel(), out.data());
  return Variable::make(std::move(out), {x}, [begin](Node& node) {
    Tensor* dx = node.input_grad(0);
    if (dx != nullptr) K().axpy(node.grad.numel(), 1.0f, node.grad.data(), dx->item(begin));
  });
}

namespace {

// Half-pixel x2 interpolation along one axis: out[2i] leans on i-1,
// out[2i+1] on i+1, both with weight 1/4 and edge clamping.
void upsample_rows(const float* in, int h, int w, float* out) {
  for (int y = 0; y < h; ++y) {
    const float* r = in + static_cast<std::size_t>(y) * w;
    float* o = out + static_cast<std::size_t>(y) * 2 * w;
    for (int x = 0; x < w; ++x) {
      const float a = r[x];
      const float l = r[std::max(x - 1, 0)];
      const float rr = r[std::min(x + 1, w - 1)];
      o[2 * x] = a + 0.25f * (l - a);
      o[2 * x + 1] = a + 0.25f * (rr - a);
    }
  }
}

void upsample_rows_backward(const float* dout, int h, int w, float* din) {
  for (int y = 0; y < h; ++y) {
    const float* g = dout + static_cast<std::size_t>(y) * 2 * w;
    float* d = din + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      d[x] += 0.75f * (g[2 * x] + g[2 * x + 1]);
      d[std::max(x - 1, 0)] += 0.25f * g[2 * x];
      d[std::min(x + 1, w - 1)] += 0.25f * g[2 * x + 1];
    }
  }
}

// Vertical pass on rows of width w.
void upsample_cols(const float* in, int h, int w, float* out) {
  for (int y = 0; y < h; ++y) {
    const float* a = in + static_cast<std::size_t>(y) * w;
    const float* up = in + static_cast<std::size_t>(std::max(y - 1, 0)) * w;
    const float* dn = in + static_cast<std::size_t>(std::min(y + 1, h - 1)) * w;
    float* o0 = out + static_cast<std::size_t>(2 * y) * w;
    float* o1 = o0 + w;
    for (int x = 0; x < w; ++x) {
      o0[x] = a[x] + 0.25f * (up[x] - a[x]);
      o1[x] = a[x] + 0.25f * (dn[x] - a[x]);
    }
  }
}

void upsample_cols_backward(const float* dout, int h, int w, float* din) {
  for (int y = 0; y < h; ++y) {
    const float* g0 = dout + static_cast<std::size_t>(2 * y) * w;
    const float* g1 = g0 + w;
    float* a = din + static_cast<std::size_t>(y) * w;
    float* up = din + static_cast<std::size_t>(std::max(y - 1, 0)) * w;
    float* dn = din + static_cast<std::size_t>(std::min(y + 1, h - 1)) * w;
    for (int x = 0; x < w; ++x) {
      a[x] += 0.75f * (g0[x] + g1[x]);
      up[x] += 0.25f * g0[x];
      dn[x] += 0.25f * g1[x];
    }
  }
}

}  // namespace

Variable upsample2x(const Variable& x) {
  const Shape s = x.shape();
  Tensor out(Shape{s.n, s.c, 2 * s.h, 2 * s.w});
  std::vector<float> tmp(static_cast<std::size_t>(s.h) * 2 * s.w);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      upsample_rows(x.value().plane(n, c), s.h, s.w, tmp.data());
      upsample_cols(tmp.data(), s.h, 2 * s.w, out.plane(n, c));
    }
  }
  return Variable::make(std::move(out), {x}, [](Node& node) {
    Tensor* dx = node.input_grad(0);
    if (dx == nullptr) return;
    const Shape s = dx->shape();
    std::vector<float> tmp(static_cast<std::size_t>(s.h) * 2 * s.w);
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        std::fill(tmp.begin(), tmp.end(), 0.0f);
        upsample_cols_backward(node.grad.plane(n, c), s.h, 2 * s.w, tmp.data());
        upsample_rows_backward(tmp.data(), s.h, s.w, dx->plane(n, c));
      }
    }
  });
}

Variable avg_pool2x(const Variable& x) {
  const Shape s = x.shape();
  require(s.h % 2 == 0 && s.w % 2 == 0 && s.h > 0 && s.w > 0,
          "avg_pool2x: spatial dims of {} must be even", s.str());
  const int ho = s.h / 2;
  const int wo = s.w / 2;
  Tensor out(Shape{s.n, s.c, ho, wo});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = x.value().plane(n, c);
      float* dst = out.plane(n, c);
      for (int y = 0; y < ho; ++y) {
        const float* r0 = src + static_cast<std::size_t>(2 * y) * s.w;
        const float* r1 = r0 + s.w;
        for (int xo = 0; xo < wo; ++xo) {
          dst[y * wo + xo] = ((r0[2 * xo] + r0[2 * xo + 1]) + (r1[2 * xo] + r1[2 * xo + 1])) * 0.25f;
        }
      }
    }
  }
  return Variable::make(std::move(out), {x}, [](Node& node) {
    Tensor* dx = node.input_grad(0);
    if (dx == nullptr) return;
    const Shape s = dx->shape();
    const int wo = s.w / 2;
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const float* g = node.grad.plane(n, c);
        float* d = dx->plane(n, c);
        for (int y = 0; y < s.h; ++y) {
          for (int xi = 0; xi < s.w; ++xi) d[y * s.w + xi] += 0.25f * g[(y / 2) * wo + xi / 2];
        }
      }
    }
  });
}

Variable backward_warp(const Variable& src, const Variable& flow) {
  const Shape s = src.shape();
  const Shape fs = flow.shape();
  require(fs.n == s.n && fs.c == 2 && fs.same_spatial(s),
          "backward_warp: flow {} does not match source {}", fs.str(), s.str());
  const simd::WarpShape ws{s.c, s.h, s.w};
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    K().warp_bilinear(ws, src.value().item(n), flow.value().item(n), out.item(n));
  }
  return Variable::make(std::move(out), {src, flow}, [ws](Node& node) {
    const Tensor& sv = node.inputs[0]->value;
    const Tensor& fv = node.inputs[1]->value;
    Tensor* ds = node.input_grad(0);
    Tensor* df = node.input_grad(1);
    for (int n = 0; n < sv.shape().n; ++n) {
      simd::reference::warp_backward<float>(ws, sv.item(n), fv.item(n), node.grad.item(n),
                                            ds != nullptr ? ds->item(n) : nullptr,
                                            df != nullptr ? df->item(n) : nullptr);
    }
  });
}

Variable layer_norm_channels(const Variable& x, const Variable& gamma, const Variable& beta,
                             float eps) {
  const Shape s = x.shape();
  require(gamma.value().numel() == static_cast<std::size_t>(s.c) &&
              beta.value().numel() == static_cast<std::size_t>(s.c),
          "layer_norm_channels: affine parameters must have {} entries", s.c);
  const std::size_t plane = s.plane();
  Tensor out(s);
  // Per-pixel reciprocal std, kept for the backward pass.
  auto rstd = std::make_shared<std::vector<float>>(static_cast<std::size_t>(s.n) * plane);
  std::vector<float> mu(plane);
  std::vector<float> var(plane);
  const float inv_c = 1.0f / static_cast<float>(s.c);
  for (int n = 0; n < s.n; ++n) {
    std::fill(mu.begin(), mu.end(), 0.0f);
    std::fill(var.begin(), var.end(), 0.0f);
    for (int c = 0; c < s.c; ++c) K().axpy(plane, inv_c, x.value().plane(n, c), mu.data());
    for (int c = 0; c < s.c; ++c) {
      const float* xc = x.value().plane(n, c);
      for (std::size_t p = 0; p < plane; ++p) {
        const float d = xc[p] - mu[p];
        var[p] += d * d * inv_c;
      }
    }
    float* r = rstd->data() + n * plane;
    for (std::size_t p = 0; p < plane; ++p) r[p] = 1.0f / std::sqrt(var[p] + eps);
    for (int c = 0; c < s.c; ++c) {
      const float* xc = x.value().plane(n, c);
      float* yc = out.plane(n, c);
      const float g = gamma.value().data()[c];
      const float b = beta.value().data()[c];
      for (std::size_t p = 0; p < plane; ++p) yc[p] = (xc[p] - mu[p]) * r[p] * g + b;
    }
  }
  return Variable::make(std::move(out), {x, gamma, beta}, [rstd](Node& node) {
    const Tensor& xv = node.inputs[0]->value;
    const float* gv = node.inputs[1]->value.data();
    const Shape s = xv.shape();
    const std::size_t plane = s.plane();
    Tensor* dx = node.input_grad(0);
    Tensor* dg = node.input_grad(1);
    Tensor* db = node.input_grad(2);
    const float inv_c = 1.0f / static_cast<float>(s.c);
    std::vector<float> mu(plane);
    std::vector<float> a(plane);
    std::vector<float> b(plane);
    std::vector<float> xhat(plane);
    for (int n = 0; n < s.n; ++n) {
      const float* r = rstd->data() + n * plane;
      std::fill(mu.begin(), mu.end(), 0.0f);
      std::fill(a.begin(), a.end(), 0.0f);
      std::fill(b.begin(), b.end(), 0.0f);
      for (int c = 0; c < s.c; ++c) K().axpy(plane, inv_c, xv.plane(n, c), mu.data());
      for (int c = 0; c < s.c; ++c) {
        const float* xc = xv.plane(n, c);
        const float* g = node.grad.plane(n, c);
        float dgc = 0.0f;
        float dbc = 0.0f;
        for (std::size_t p = 0; p < plane; ++p) {
          const float xh = (xc[p] - mu[p]) * r[p];
          const float dxh = g[p] * gv[c];
          a[p] += dxh * inv_c;
          b[p] += dxh * xh * inv_c;
          dgc += g[p] * xh;
          dbc += g[p];
        }
        if (dg != nullptr) dg->data()[c] += dgc;
        if (db != nullptr) db->data()[c] += dbc;
      }
      if (dx == nullptr) continue;
      for (int c = 0; c < s.c; ++c) {
        const float* xc = xv.plane(n, c);
        const float* g = node.grad.plane(n, c);
        float* d = dx->plane(n, c);
        for (std::size_t p = 0; p < plane; ++p) {
          const float xh = (xc[p] - mu[p]) * r[p];
          d[p] += r[p] * (g[p] * gv[c] - a[p] - xh * b[p]);
        }
      }
    }
  });
}

namespace {

struct AttentionGeom {
  int batch, dim, h, w, heads, window;
  int head_dim() const { return dim / heads; }
};

struct Window {
  int y0, x0, wh, ww;
  int tokens() const { return wh * ww; }
};

template <typename Fn>
void for_each_window(const AttentionGeom& g, Fn&& fn) {
  for (int y0 = 0; y0 < g.h; y0 += g.window) {
    for (int x0 = 0; x0 < g.w; x0 += g.window) {
      fn(Window{y0, x0, std::min(g.window, g.h - y0), std::min(g.window, g.w - x0)});
    }
  }
}

// rows x head_dim token matrix of one head, gathered from a (dim, h, w) item.
void gather(const AttentionGeom& g, const Window& win, const float* item, int head, float* dst) {
  const int dh = g.head_dim();
  const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
  for (int e = 0; e < dh; ++e) {
    const float* src = item + (static_cast<std::size_t>(head) * dh + e) * plane;
    int t = 0;
    for (int y = 0; y < win.wh; ++y) {
      const float* row = src + static_cast<std::size_t>(win.y0 + y) * g.w + win.x0;
      for (int x = 0; x < win.ww; ++x, ++t) dst[static_cast<std::size_t>(t) * dh + e] = row[x];
    }
  }
}

void scatter_add(const AttentionGeom& g, const Window& win, const float* src, int head, float* item) {
  const int dh = g.head_dim();
  const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
  for (int e = 0; e < dh; ++e) {
    float* dst = item + (static_cast<std::size_t>(head) * dh + e) * plane;
    int t = 0;
    for (int y = 0; y < win.wh; ++y) {
      float* row = dst + static_cast<std::size_t>(win.y0 + y) * g.w + win.x0;
      for (int x = 0; x < win.ww; ++x, ++t) row[x] += src[static_cast<std::size_t>(t) * dh + e];
    }
  }
}

void softmax_rows(float* s, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    float* r = s + static_cast<std::size_t>(i) * cols;
    const float m = *std::max_element(r, r + cols);
    float total = 0.0f;
    for (int j = 0; j < cols; ++j) {
      r[j] = std::exp(r[j] - m);
      total += r[j];
    }
    const float inv = 1.0f / total;
    for (int j = 0; j < cols; ++j) r[j] *= inv;
  }
}

struct AttentionBuffers {
  std::vector<float> q, k, v, p, o, dp, dq, dk, dv;
  explicit AttentionBuffers(const AttentionGeom& g) {
    const std::size_t t = static_cast<std::size_t>(g.window) * g.window;
    const std::size_t dh = g.head_dim();
    q.resize(t * dh);
    k.resize(2 * t * dh);
    v.resize(2 * t * dh);
    p.resize(t * 2 * t);
    o.resize(t * dh);
    dp.resize(t * 2 * t);
    dq.resize(t * dh);
    dk.resize(2 * t * dh);
    dv.resize(2 * t * dh);
  }
};

// Loads Q, K, V for (item, head, window) and leaves softmax probabilities in buf.p.
void attention_probs(const AttentionGeom& g, const Window& win, const Tensor& q, const Tensor& k,
                     const Tensor& v, int b, int head, AttentionBuffers& buf) {
  const int partner = (b + g.batch / 2) % g.batch;
  const int t = win.tokens();
  const int dh = g.head_dim();
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  gather(g, win, q.item(b), head, buf.q.data());
  gather(g, win, k.item(b), head, buf.k.data());
  gather(g, win, k.item(partner), head, buf.k.data() + static_cast<std::size_t>(t) * dh);
  gather(g, win, v.item(b), head, buf.v.data());
  gather(g, win, v.item(partner), head, buf.v.data() + static_cast<std::size_t>(t) * dh);
  K().gemm(false, true, t, 2 * t, dh, scale, buf.q.data(), dh, buf.k.data(), dh, 0.0f, buf.p.data(),
           2 * t);
  softmax_rows(buf.p.data(), t, 2 * t);
}

}  // namespace

Variable window_cross_attention(const Variable& q, const Variable& k, const Variable& v, int heads,
                                int window) {
  const Shape s = q.shape();
  require_same(q, k, "window_cross_attention");
  require_same(q, v, "window_cross_attention");
  require(s.n % 2 == 0, "window_cross_attention: batch {} must hold frame pairs", s.n);
  require(heads >= 1 && s.c % heads == 0, "window_cross_attention: {} channels, {} heads", s.c, heads);
  require(window >= 1, "window_cross_attention: window must be positive");
  const AttentionGeom g{s.n, s.c, s.h, s.w, heads, window};
  const int dh = g.head_dim();
  Tensor out(s);
  AttentionBuffers buf(g);
  std::uint64_t flops = 0;
  for (int b = 0; b < s.n; ++b) {
    for (int head = 0; head < heads; ++head) {
      for_each_window(g, [&](const Window& win) {
        const int t = win.tokens();
        attention_probs(g, win, q.value(), k.value(), v.value(), b, head, buf);
        K().gemm(false, false, t, dh, 2 * t, 1.0f, buf.p.data(), 2 * t, buf.v.data(), dh, 0.0f,
                 buf.o.data(), dh);
        scatter_add(g, win, buf.o.data(), head, out.item(b));
        flops += std::uint64_t{2} * 2 * t * 2 * t * dh;
      });
    }
  }
  count_flops(flops);

  return Variable::make(std::move(out), {q, k, v}, [g](Node& node) {
    const Tensor& qv = node.inputs[0]->value;
    const Tensor& kv = node.inputs[1]->value;
    const Tensor& vv = node.inputs[2]->value;
    Tensor* dq = node.input_grad(0);
    Tensor* dk = node.input_grad(1);
    Tensor* dv = node.input_grad(2);
    const int dh = g.head_dim();
    const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
    AttentionBuffers buf(g);
    for (int b = 0; b < g.batch; ++b) {
      const int partner = (b + g.batch / 2) % g.batch;
      for (int head = 0; head < g.heads; ++head) {
        for_each_window(g, [&](const Window& win) {
          const int t = win.tokens();
          const std::size_t half = static_cast<std::size_t>(t) * dh;
          attention_probs(g, win, qv, kv, vv, b, head, buf);
          float* dout = buf.o.data();
          std::fill(dout, dout + half, 0.0f);
          gather(g, win, node.grad.item(b), head, dout);
          if (dv != nullptr) {
            K().gemm(true, false, 2 * t, dh, t, 1.0f, buf.p.data(), 2 * t, dout, dh, 0.0f,
                     buf.dv.data(), dh);
            scatter_add(g, win, buf.dv.data(), head, dv->item(b));
            scatter_add(g, win, buf.dv.data() + half, head, dv->item(partner));
          }
          if (dq == nullptr && dk == nullptr) return;
          K().gemm(false, true, t, 2 * t, dh, 1.0f, dout, dh, buf.v.data(), dh, 0.0f,
                   buf.dp.data(), 2 * t);
          // dS = P * (dP - rowsum(dP * P)), written over dp.
          for (int i = 0; i < t; ++i) {
            const float* pr = buf.p.data() + static_cast<std::size_t>(i) * 2 * t;
            float* dr = buf.dp.data() + static_cast<std::size_t>(i) * 2 * t;
            float acc = 0.0f;
            for (int j = 0; j < 2 * t; ++j) acc += dr[j] * pr[j];
            for (int j = 0; j < 2 * t; ++j) dr[j] = pr[j] * (dr[j] - acc);
          }
          if (dq != nullptr) {
            K().gemm(false, false, t, dh, 2 * t, scale, buf.dp.data(), 2 * t, buf.k.data(), dh, 0.0f,
                     buf.dq.data(), dh);
            scatter_add(g, win, buf.dq.data(), head, dq->item(b));
          }
          if (dk != nullptr) {
            K().gemm(true, false, 2 * t, dh, t, scale, buf.dp.data(), 2 * t, buf.q.data(), dh, 0.0f,
                     buf.dk.data(), dh);
            scatter_add(g, win, buf.dk.data(), head, dk->item(b));
            scatter_add(g, win, buf.dk.data() + half, head, dk->item(partner));
          }
        });
      }
    }
  });
}

Variable sum(const Variable& x) {
  double acc = 0.0;
  for (float f : x.value().span()) acc += f;
  Tensor out(Shape{1, 1, 1, 1}, static_cast<float>(acc));
  return Variable::make(std::move(out), {x}, [](Node& node) {
    if (Tensor* dx = node.input_grad(0)) {
      const float g = node.grad.data()[0];
      for (float& d : dx->span()) d += g;
    }
  });
}

Variable mean(const Variable& x) {
  double acc = 0.0;
  for (float f : x.value().span()) acc += f;
  const double n = static_cast<double>(x.value().numel());
  Tensor out(Shape{1, 1, 1, 1}, static_cast<float>(acc / n));
  return Variable::make(std::move(out), {x}, [n](Node& node) {
    if (Tensor* dx = node.input_grad(0)) {
      const float g = static_cast<float>(node.grad.data()[0] / n);
      for (float& d : dx->span()) d += g;
    }
  });
}

Variable scalar_with_grad(const Variable& x, float value, Tensor grad) {
  require(grad.shape() == x.shape(), "scalar_with_grad: gradient shape {} vs input {}",
          grad.shape().str(), x.shape().str());
  Tensor out(Shape{1, 1, 1, 1}, value);
  auto g = std::make_shared<Tensor>(std::move(grad));
  return Variable::make(std::move(out), {x}, [g](Node& node) {
    if (Tensor* dx = node.input_grad(0)) K().axpy(dx->numel(), node.grad.data()[0], g->data(), dx->data());
  });
}

}  // namespace ladder::ops

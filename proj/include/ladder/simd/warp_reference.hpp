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

#include <algorithm>
#include <cmath>

#include "ladder/simd/kernels.hpp"

namespace ladder::simd::reference {

/// Clamped sampling position and bilinear weights for one output pixel.
template <typename T>
struct BilinearTap {
  int x0, x1, y0, y1;
  T wx, wy;
  bool inside_x, inside_y;  // position was not clamped, so d/dflow is nonzero
};

template <typename T>
inline BilinearTap<T> bilinear_tap(T sx, T sy, int width, int height) {
  BilinearTap<T> tap{};
  const T max_x = static_cast<T>(width - 1);
  const T max_y = static_cast<T>(height - 1);
  tap.inside_x = sx > T(0) && sx < max_x;
  tap.inside_y = sy > T(0) && sy < max_y;
  sx = std::clamp(sx, T(0), max_x);
  sy = std::clamp(sy, T(0), max_y);
  const T fx = std::floor(sx);
  const T fy = std::floor(sy);
  tap.x0 = static_cast<int>(fx);
  tap.y0 = static_cast<int>(fy);
  tap.x1 = std::min(tap.x0 + 1, width - 1);
  tap.y1 = std::min(tap.y0 + 1, height - 1);
  tap.wx = sx - fx;
  tap.wy = sy - fy;
  return tap;
}

/// out(c, y, x) = bilinear sample of src(c) at (x + flow_x, y + flow_y).
template <typename T>
void warp_forward(const WarpShape& s, const T* src, const T* flow, T* out) {
  const int h = s.height;
  const int w = s.width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const T* fx = flow;
  const T* fy = flow + plane;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const auto tap = bilinear_tap<T>(static_cast<T>(x) + fx[p], static_cast<T>(y) + fy[p], w, h);
      const std::size_t i00 = static_cast<std::size_t>(tap.y0) * w + tap.x0;
      const std::size_t i01 = static_cast<std::size_t>(tap.y0) * w + tap.x1;
      const std::size_t i10 = static_cast<std::size_t>(tap.y1) * w + tap.x0;
      const std::size_t i11 = static_cast<std::size_t>(tap.y1) * w + tap.x1;
      const T ax = T(1) - tap.wx;
      const T ay = T(1) - tap.wy;
      for (int c = 0; c < s.channels; ++c) {
        const T* sc = src + c * plane;
        const T top = ax * sc[i00] + tap.wx * sc[i01];
        const T bottom = ax * sc[i10] + tap.wx * sc[i11];
        out[c * plane + p] = ay * top + tap.wy * bottom;
      }
    }
  }
}

/// Accumulates gradients of the warp into dsrc and dflow (either may be null).
template <typename T>
void warp_backward(const WarpShape& s, const T* src, const T* flow, const T* dout, T* dsrc,
                   T* dflow) {
  const int h = s.height;
  const int w = s.width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const T* fx = flow;
  const T* fy = flow + plane;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * w + x;
      const auto tap = bilinear_tap<T>(static_cast<T>(x) + fx[p], static_cast<T>(y) + fy[p], w, h);
      const std::size_t i00 = static_cast<std::size_t>(tap.y0) * w + tap.x0;
      const std::size_t i01 = static_cast<std::size_t>(tap.y0) * w + tap.x1;
      const std::size_t i10 = static_cast<std::size_t>(tap.y1) * w + tap.x0;
      const std::size_t i11 = static_cast<std::size_t>(tap.y1) * w + tap.x1;
      const T ax = T(1) - tap.wx;
      const T ay = T(1) - tap.wy;
      T gx = 0;
      T gy = 0;
      for (int c = 0; c < s.channels; ++c) {
        const T g = dout[c * plane + p];
        if (g == T(0)) continue;
        if (dsrc != nullptr) {
          T* dc = dsrc + c * plane;
          dc[i00] += g * ay * ax;
          dc[i01] += g * ay * tap.wx;
          dc[i10] += g * tap.wy * ax;
          dc[i11] += g * tap.wy * tap.wx;
        }
        if (dflow != nullptr) {
          const T* sc = src + c * plane;
          if (tap.inside_x) {
            gx += g * (ay * (sc[i01] - sc[i00]) + tap.wy * (sc[i11] - sc[i10]));
          }
          if (tap.inside_y) {
            gy += g * (ax * (sc[i10] - sc[i00]) + tap.wx * (sc[i11] - sc[i01]));
          }
        }
      }
      if (dflow != nullptr) {
        dflow[p] += gx;
        dflow[plane + p] += gy;
      }
    }
  }
}

}  // namespace ladder::simd::reference

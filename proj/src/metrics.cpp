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

#include "ladder/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ladder/error.hpp"

namespace ladder {

namespace {

ImageView view_of(const Tensor& t, std::vector<double>& storage) {
  storage.assign(t.data(), t.data() + t.numel());
  const Shape s = t.shape();
  return ImageView{storage, s.n, s.c, s.h, s.w};
}

void require_same(const ImageView& a, const ImageView& b, const char* what) {
  require(a.n == b.n && a.c == b.c && a.h == b.h && a.w == b.w && a.data.size() == b.data.size(),
          "{}: shape mismatch", what);
}

std::array<double, kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow> g{};
  double total = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Valid-mode separable filtering of an h x w plane.
std::vector<double> filter_valid(const double* x, int h, int w,
                                 const std::array<double, kSsimWindow>& g) {
  const int ho = h - kSsimWindow + 1;
  const int wo = w - kSsimWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * wo);
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < wo; ++i) {
      double acc = 0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * x[y * w + i + k];
      tmp[y * wo + i] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ho) * wo);
  for (int j = 0; j < ho; ++j) {
    for (int i = 0; i < wo; ++i) {
      double acc = 0;
      for (int k = 0; k < kSsimWindow; ++k) acc += g[k] * tmp[(j + k) * wo + i];
      out[j * wo + i] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const ImageView& a, const ImageView& b) {
  require_same(a, b, "psnr");
  require(!a.data.empty(), "psnr: empty input");
  double acc = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.data.size());
  if (mse == 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double psnr(const Tensor& a, const Tensor& b) {
  std::vector<double> sa;
  std::vector<double> sb;
  return psnr(view_of(a, sa), view_of(b, sb));
}

double ssim(const ImageView& a, const ImageView& b) {
  require_same(a, b, "ssim");
  require(a.h >= kSsimWindow && a.w >= kSsimWindow, "ssim: image {}x{} smaller than the {}x{} window",
          a.w, a.h, kSsimWindow, kSsimWindow);
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const auto g = gaussian_window();
  const std::size_t plane = a.plane();
  std::vector<double> xx(plane);
  std::vector<double> yy(plane);
  std::vector<double> xy(plane);
  double total = 0;
  std::size_t count = 0;
  for (int p = 0; p < a.n * a.c; ++p) {
    const double* x = a.data.data() + p * plane;
    const double* y = b.data.data() + p * plane;
    for (std::size_t k = 0; k < plane; ++k) {
      xx[k] = x[k] * x[k];
      yy[k] = y[k] * y[k];
      xy[k] = x[k] * y[k];
    }
    const auto mx = filter_valid(x, a.h, a.w, g);
    const auto my = filter_valid(y, a.h, a.w, g);
    const auto sxx = filter_valid(xx.data(), a.h, a.w, g);
    const auto syy = filter_valid(yy.data(), a.h, a.w, g);
    const auto sxy = filter_valid(xy.data(), a.h, a.w, g);
    for (std::size_t k = 0; k < mx.size(); ++k) {
      const double vx = sxx[k] - mx[k] * mx[k];
      const double vy = syy[k] - my[k] * my[k];
      const double cov = sxy[k] - mx[k] * my[k];
      total += ((2 * mx[k] * my[k] + c1) * (2 * cov + c2)) /
               ((mx[k] * mx[k] + my[k] * my[k] + c1) * (vx + vy + c2));
    }
    count += mx.size();
  }
  return total / static_cast<double>(count);
}

double ssim(const Tensor& a, const Tensor& b) {
  std::vector<double> sa;
  std::vector<double> sb;
  return ssim(view_of(a, sa), view_of(b, sb));
}

}  // namespace ladder

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

#include "ladder/losses.hpp"

#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "ladder/error.hpp"
#include "ladder/ops.hpp"

namespace ladder {

namespace {

void require_pair(const ImageView& a, const ImageView& b, const char* op) {
  require(a.n == b.n && a.c == b.c && a.h == b.h && a.w == b.w, "{}: shape mismatch", op);
  require(a.data.size() == a.size() && b.data.size() == b.size(), "{}: view size mismatch", op);
}

void require_grad(const ImageView& pred, std::span<double> grad) {
  require(grad.empty() || grad.size() == pred.size(), "loss gradient buffer has wrong size");
}

inline double sign(double x) { return (x > 0) - (x < 0); }
inline int clampi(int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); }

constexpr double kBinomial[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

using Plane = std::vector<double>;

// Blur with the 5-tap binomial kernel (clamped edges) and keep even samples.
Plane reduce(const Plane& x, int h, int w) {
  const int ho = h / 2;
  const int wo = w / 2;
  Plane tmp(static_cast<std::size_t>(h) * wo);
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < wo; ++i) {
      double acc = 0;
      for (int k = 0; k < 5; ++k) acc += kBinomial[k] * x[y * w + clampi(2 * i + k - 2, w)];
      tmp[y * wo + i] = acc;
    }
  }
  Plane out(static_cast<std::size_t>(ho) * wo);
  for (int j = 0; j < ho; ++j) {
    for (int i = 0; i < wo; ++i) {
      double acc = 0;
      for (int k = 0; k < 5; ++k) acc += kBinomial[k] * tmp[clampi(2 * j + k - 2, h) * wo + i];
      out[j * wo + i] = acc;
    }
  }
  return out;
}

// Adjoint of reduce: gradient of an (h/2, w/2) plane back to (h, w).
Plane reduce_adjoint(const Plane& g, int h, int w) {
  const int ho = h / 2;
  const int wo = w / 2;
  Plane tmp(static_cast<std::size_t>(h) * wo, 0.0);
  for (int j = 0; j < ho; ++j) {
    for (int i = 0; i < wo; ++i) {
      for (int k = 0; k < 5; ++k) tmp[clampi(2 * j + k - 2, h) * wo + i] += kBinomial[k] * g[j * wo + i];
    }
  }
  Plane out(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < wo; ++i) {
      for (int k = 0; k < 5; ++k) out[y * w + clampi(2 * i + k - 2, w)] += kBinomial[k] * tmp[y * wo + i];
    }
  }
  return out;
}

// Zero-insert and blur with 4x the kernel, the coarse plane replicated at
// its edges. Even outputs: (a + 6b + c) / 8; odd outputs: (b + c) / 2.
Plane expand(const Plane& d, int h, int w) {
  const int wo = 2 * w;
  Plane tmp(static_cast<std::size_t>(h) * wo);
  for (int y = 0; y < h; ++y) {
    const double* r = d.data() + static_cast<std::size_t>(y) * w;
    for (int i = 0; i < w; ++i) {
      const double a = r[clampi(i - 1, w)], b = r[i], c = r[clampi(i + 1, w)];
      tmp[y * wo + 2 * i] = (a + 6 * b + c) / 8;
      tmp[y * wo + 2 * i + 1] = (b + c) / 2;
    }
  }
  Plane out(static_cast<std::size_t>(2 * h) * wo);
  for (int j = 0; j < h; ++j) {
    for (int x = 0; x < wo; ++x) {
      const double a = tmp[clampi(j - 1, h) * wo + x], b = tmp[j * wo + x], c = tmp[clampi(j + 1, h) * wo + x];
      out[(2 * j) * wo + x] = (a + 6 * b + c) / 8;
      out[(2 * j + 1) * wo + x] = (b + c) / 2;
    }
  }
  return out;
}

// Adjoint of expand: gradient of a (2h, 2w) plane back to (h, w).
Plane expand_adjoint(const Plane& g, int h, int w) {
  const int wo = 2 * w;
  Plane tmp(static_cast<std::size_t>(h) * wo, 0.0);
  for (int j = 0; j < h; ++j) {
    for (int x = 0; x < wo; ++x) {
      const double ge = g[(2 * j) * wo + x];
      const double go = g[(2 * j + 1) * wo + x];
      tmp[clampi(j - 1, h) * wo + x] += ge / 8;
      tmp[j * wo + x] += 6 * ge / 8 + go / 2;
      tmp[clampi(j + 1, h) * wo + x] += ge / 8 + go / 2;
    }
  }
  Plane out(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int i = 0; i < w; ++i) {
      const double ge = tmp[y * wo + 2 * i];
      const double go = tmp[y * wo + 2 * i + 1];
      out[y * w + clampi(i - 1, w)] += ge / 8;
      out[y * w + i] += 6 * ge / 8 + go / 2;
      out[y * w + clampi(i + 1, w)] += ge / 8 + go / 2;
    }
  }
  return out;
}

struct Pyramid {
  std::array<Plane, kLaplacianLevels> bands;
  std::array<int, kLaplacianLevels> h, w;
};

Pyramid laplacian_pyramid(Plane g, int h, int w) {
  Pyramid p;
  for (int i = 0; i < kLaplacianLevels - 1; ++i) {
    Plane d = reduce(g, h, w);
    const Plane up = expand(d, h / 2, w / 2);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] -= up[k];
    p.bands[i] = std::move(g);
    p.h[i] = h;
    p.w[i] = w;
    g = std::move(d);
    h /= 2;
    w /= 2;
  }
  p.bands[kLaplacianLevels - 1] = std::move(g);
  p.h[kLaplacianLevels - 1] = h;
  p.w[kLaplacianLevels - 1] = w;
  return p;
}

void require_laplacian_dims(const ImageView& v) {
  constexpr int m = 1 << (kLaplacianLevels - 1);
  require(v.h >= m && v.w >= m && v.h % m == 0 && v.w % m == 0,
          "laplacian_loss: image {}x{} too small or not a multiple of {} for {} levels", v.w, v.h, m,
          kLaplacianLevels);
}

// Band terms summed over planes; optionally accumulates the gradient.
std::array<double, kLaplacianLevels> laplacian_impl(const ImageView& pred, const ImageView& gt,
                                                    std::span<double> grad) {
  require_pair(pred, gt, "laplacian_loss");
  require_laplacian_dims(pred);
  require_grad(pred, grad);
  std::array<double, kLaplacianLevels> terms{};
  const std::size_t plane = pred.plane();
  const int planes = pred.n * pred.c;
  std::array<double, kLaplacianLevels> coef{};
  for (int i = 0; i < kLaplacianLevels; ++i) {
    const double count = static_cast<double>(planes) * (pred.h >> i) * (pred.w >> i);
    coef[i] = static_cast<double>(1 << i) / count;
  }
  for (int p = 0; p < planes; ++p) {
    Plane e(plane);
    for (std::size_t k = 0; k < plane; ++k) e[k] = pred.data[p * plane + k] - gt.data[p * plane + k];
    const Pyramid pyr = laplacian_pyramid(std::move(e), pred.h, pred.w);
    for (int i = 0; i < kLaplacianLevels; ++i) {
      double acc = 0;
      for (double v : pyr.bands[i]) acc += std::fabs(v);
      terms[i] += coef[i] * acc;
    }
    if (grad.empty()) continue;
    std::array<Plane, kLaplacianLevels> gb;
    for (int i = 0; i < kLaplacianLevels; ++i) {
      gb[i].resize(pyr.bands[i].size());
      for (std::size_t k = 0; k < gb[i].size(); ++k) gb[i][k] = coef[i] * sign(pyr.bands[i][k]);
    }
    Plane g_next = gb[kLaplacianLevels - 1];
    for (int i = kLaplacianLevels - 2; i >= 0; --i) {
      const Plane eadj = expand_adjoint(gb[i], pyr.h[i + 1], pyr.w[i + 1]);
      for (std::size_t k = 0; k < g_next.size(); ++k) g_next[k] -= eadj[k];
      Plane gi = reduce_adjoint(g_next, pyr.h[i], pyr.w[i]);
      for (std::size_t k = 0; k < gi.size(); ++k) gi[k] += gb[i][k];
      g_next = std::move(gi);
    }
    for (std::size_t k = 0; k < plane; ++k) grad[p * plane + k] += g_next[k];
  }
  return terms;
}

// FFTW planning is not thread-safe.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

class Fft2 {
 public:
  Fft2(int h, int w) : h_(h), w_(w), n_(static_cast<std::size_t>(h) * w) {
    in_ = fftw_alloc_complex(n_);
    out_ = fftw_alloc_complex(n_);
    std::lock_guard<std::mutex> lock(fftw_mutex());
    forward_ = fftw_plan_dft_2d(h, w, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(h, w, in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft2() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(in_);
    fftw_free(out_);
  }
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  // Forward transform of a real plane. Bins that are their own conjugate
  // partner get an exact +0 imaginary part so their angle is 0 or pi.
  void forward(const double* x, std::vector<std::complex<double>>& out) {
    for (std::size_t k = 0; k < n_; ++k) {
      in_[k][0] = x[k];
      in_[k][1] = 0.0;
    }
    fftw_execute(forward_);
    out.resize(n_);
    for (int u = 0; u < h_; ++u) {
      for (int v = 0; v < w_; ++v) {
        const std::size_t k = static_cast<std::size_t>(u) * w_ + v;
        const bool self_conj = (2 * u) % h_ == 0 && (2 * v) % w_ == 0;
        out[k] = {out_[k][0], self_conj ? 0.0 : out_[k][1]};
      }
    }
  }

  // Unnormalized inverse transform; returns the real part.
  void backward_real(const std::vector<std::complex<double>>& g, double* x) {
    for (std::size_t k = 0; k < n_; ++k) {
      in_[k][0] = g[k].real();
      in_[k][1] = g[k].imag();
    }
    fftw_execute(backward_);
    for (std::size_t k = 0; k < n_; ++k) x[k] = out_[k][0];
  }

 private:
  int h_, w_;
  std::size_t n_;
  fftw_complex* in_;
  fftw_complex* out_;
  fftw_plan forward_;
  fftw_plan backward_;
};

}  // namespace

double charbonnier_loss(const ImageView& pred, const ImageView& gt, std::span<double> grad) {
  require_pair(pred, gt, "charbonnier_loss");
  require_grad(pred, grad);
  const std::size_t n = pred.size();
  require(n > 0, "charbonnier_loss: empty input");
  constexpr double eps = kCharbonnierEps;
  // sqrt(d^2 + eps^2) = eps + d^2 / (sqrt(d^2 + eps^2) + eps), free of cancellation.
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.data[i] - gt.data[i];
    const double r = std::sqrt(d * d + eps * eps);
    acc += d * d / (r + eps);
    if (!grad.empty()) grad[i] += d / r / static_cast<double>(n);
  }
  return eps + acc / static_cast<double>(n);
}

std::array<double, kLaplacianLevels> laplacian_band_terms(const ImageView& pred, const ImageView& gt) {
  return laplacian_impl(pred, gt, {});
}

double laplacian_loss(const ImageView& pred, const ImageView& gt, std::span<double> grad) {
  const auto terms = laplacian_impl(pred, gt, grad);
  double total = 0;
  for (double t : terms) total += t;
  return total;
}

FrequencyTerms frequency_terms(const ImageView& pred, const ImageView& gt, std::span<double> grad) {
  require_pair(pred, gt, "frequency_loss");
  require_grad(pred, grad);
  const std::size_t plane = pred.plane();
  const int planes = pred.n * pred.c;
  require(plane > 0 && planes > 0, "frequency_loss: empty input");
  Fft2 fft(pred.h, pred.w);
  std::vector<std::complex<double>> fp;
  std::vector<std::complex<double>> fg;
  std::vector<std::vector<std::complex<double>>> spectra_p;
  std::vector<std::vector<std::complex<double>>> spectra_g;

  double amp_sum = 0;
  double phase_sum = 0;
  std::size_t phase_count = 0;
  for (int p = 0; p < planes; ++p) {
    fft.forward(pred.data.data() + p * plane, fp);
    fft.forward(gt.data.data() + p * plane, fg);
    for (std::size_t k = 0; k < plane; ++k) {
      const double ap = std::abs(fp[k]);
      const double ag = std::abs(fg[k]);
      amp_sum += std::fabs(ap - ag);
      if (ag >= kPhaseAmplitudeFloor) {
        phase_sum += std::fabs(std::arg(fp[k]) - std::arg(fg[k]));
        ++phase_count;
      }
    }
    if (!grad.empty()) {
      spectra_p.push_back(fp);
      spectra_g.push_back(fg);
    }
  }
  const double amp_count = static_cast<double>(plane) * planes;
  FrequencyTerms t;
  t.amplitude = amp_sum / amp_count;
  t.phase = phase_count > 0 ? phase_sum / static_cast<double>(phase_count) : 0.0;
  if (grad.empty()) return t;

  // d loss / d F(pred) per bin, then x-gradient = Re(unnormalized inverse DFT).
  const double ca = 0.5 / amp_count;
  const double cp = phase_count > 0 ? 0.5 / static_cast<double>(phase_count) : 0.0;
  std::vector<std::complex<double>> g(plane);
  std::vector<double> gx(plane);
  for (int p = 0; p < planes; ++p) {
    const auto& sp = spectra_p[p];
    const auto& sg = spectra_g[p];
    for (std::size_t k = 0; k < plane; ++k) {
      const double re = sp[k].real();
      const double im = sp[k].imag();
      const double a2 = re * re + im * im;
      const double ap = std::sqrt(a2);
      const double ag = std::abs(sg[k]);
      std::complex<double> gk{0.0, 0.0};
      if (ap > 0) {
        gk += ca * sign(ap - ag) * std::complex<double>(re / ap, im / ap);
        if (ag >= kPhaseAmplitudeFloor) {
          const double s = sign(std::arg(sp[k]) - std::arg(sg[k]));
          gk += cp * s * std::complex<double>(-im / a2, re / a2);
        }
      }
      g[k] = gk;
    }
    fft.backward_real(g, gx.data());
    for (std::size_t k = 0; k < plane; ++k) grad[p * plane + k] += gx[k];
  }
  return t;
}

double frequency_loss(const ImageView& pred, const ImageView& gt, std::span<double> grad) {
  return frequency_terms(pred, gt, grad).loss();
}

LossReport total_loss(const ImageView& pred, const ImageView& gt, const LossWeights& w,
                      std::span<double> grad) {
  validate(w);
  require_grad(pred, grad);
  LossReport r;
  std::vector<double> tmp;
  auto term = [&](double lambda, auto&& fn) -> double {
    if (grad.empty() || lambda == 0) return fn(std::span<double>{});
    tmp.assign(pred.size(), 0.0);
    const double v = fn(std::span<double>(tmp));
    for (std::size_t i = 0; i < tmp.size(); ++i) grad[i] += lambda * tmp[i];
    return v;
  };
  r.charbonnier = term(w.lambda_ch, [&](std::span<double> g) { return charbonnier_loss(pred, gt, g); });
  r.laplacian = term(w.lambda_lap, [&](std::span<double> g) { return laplacian_loss(pred, gt, g); });
  r.frequency = term(w.lambda_f, [&](std::span<double> g) { return frequency_loss(pred, gt, g); });
  r.total = w.lambda_ch * r.charbonnier + w.lambda_lap * r.laplacian + w.lambda_f * r.frequency;
  return r;
}

namespace {

struct DoubleImage {
  std::vector<double> data;
  ImageView view;
  explicit DoubleImage(const Tensor& t) : data(t.data(), t.data() + t.numel()) {
    const Shape s = t.shape();
    view = ImageView{data, s.n, s.c, s.h, s.w};
  }
};

}  // namespace

double charbonnier_loss(const Tensor& pred, const Tensor& gt) {
  return charbonnier_loss(DoubleImage(pred).view, DoubleImage(gt).view);
}
double laplacian_loss(const Tensor& pred, const Tensor& gt) {
  return laplacian_loss(DoubleImage(pred).view, DoubleImage(gt).view);
}
double frequency_loss(const Tensor& pred, const Tensor& gt) {
  return frequency_loss(DoubleImage(pred).view, DoubleImage(gt).view);
}
LossReport total_loss(const Tensor& pred, const Tensor& gt, const LossWeights& w) {
  return total_loss(DoubleImage(pred).view, DoubleImage(gt).view, w);
}

Variable total_loss(const Variable& pred, const Tensor& gt, const LossWeights& w, LossReport* report) {
  require(pred.shape() == gt.shape(), "total_loss: prediction {} vs target {}", pred.shape().str(),
          gt.shape().str());
  const DoubleImage p(pred.value());
  const DoubleImage g(gt);
  std::vector<double> grad(pred.value().numel(), 0.0);
  const LossReport r = total_loss(p.view, g.view, w, grad);
  if (report != nullptr) *report = r;
  Tensor gf(pred.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) gf.data()[i] = static_cast<float>(grad[i]);
  return ops::scalar_with_grad(pred, static_cast<float>(r.total), std::move(gf));
}

Variable charbonnier_loss(const Variable& pred, const Tensor& gt) {
  require(pred.shape() == gt.shape(), "charbonnier_loss: prediction {} vs target {}",
          pred.shape().str(), gt.shape().str());
  const DoubleImage p(pred.value());
  const DoubleImage g(gt);
  std::vector<double> grad(pred.value().numel(), 0.0);
  const double v = charbonnier_loss(p.view, g.view, grad);
  Tensor gf(pred.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) gf.data()[i] = static_cast<float>(grad[i]);
  return ops::scalar_with_grad(pred, static_cast<float>(v), std::move(gf));
}

}  // namespace ladder

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

#include <chrono>

#include "../oracles/oracles.hpp"
#include "../support.hpp"
#include "acceptance.hpp"
#include "ladder/losses.hpp"
#include "ladder/metrics.hpp"
#include "ladder/warping.hpp"

namespace ladder::acceptance {
namespace {

namespace orc = ladder::oracle;

orc::Image plane_of(const Tensor& t, int n, int c) {
  orc::Image img(t.shape().h, t.shape().w);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) img.at(y, x) = t.at(n, c, y, x);
  }
  return img;
}

Tensor constant_flow(int n, int h, int w, float dx, float dy) {
  Tensor f(Shape{n, 2, h, w});
  for (int b = 0; b < n; ++b) {
    std::fill(f.plane(b, 0), f.plane(b, 0) + f.shape().plane(), dx);
    std::fill(f.plane(b, 1), f.plane(b, 1) + f.shape().plane(), dy);
  }
  return f;
}

void warping_oracles(const Context&, Report& r) {
  const Tensor img = test::random_tensor(Shape{2, 3, 31, 45}, 1, 0, 1);
  const Tensor same = backward_warp(Variable(img), Variable(Tensor(Shape{2, 2, 31, 45}))).value();
  r.check(bitwise_equal(same, img), "zero flow returns the input bitwise");

  std::size_t mismatches = 0;
  std::size_t compared = 0;
  for (int dx = -4; dx <= 4; ++dx) {
    for (int dy = -3; dy <= 3; ++dy) {
      const Tensor out = backward_warp(Variable(img), Variable(constant_flow(2, 31, 45, float(dx), float(dy)))).value();
      for (int b = 0; b < 2; ++b) {
        for (int c = 0; c < 3; ++c) {
          const orc::Image ref = orc::shift(plane_of(img, b, c), dx, dy);
          for (int y = 4; y < 31 - 4; ++y) {
            for (int x = 5; x < 45 - 5; ++x) {
              ++compared;
              mismatches += out.at(b, c, y, x) != static_cast<float>(ref.at(y, x));
            }
          }
        }
      }
    }
  }
  r.check(mismatches == 0,
          fmt::format("integer shifts (-4..4, -3..3): {} of {} interior pixels differ from the index oracle",
                      mismatches, compared));

  // Midpoints between horizontal, vertical and diagonal neighbours.
  double worst = 0;
  const orc::Image p = plane_of(img, 0, 0);
  for (auto [fx, fy] : {std::pair{0.5f, 0.0f}, {0.0f, 0.5f}, {0.5f, 0.5f}, {0.25f, 0.75f}}) {
    const Tensor out = backward_warp(Variable(img), Variable(constant_flow(2, 31, 45, fx, fy))).value();
    for (int y = 1; y < 29; ++y) {
      for (int x = 1; x < 43; ++x) {
        const double ref = orc::bilinear(p.at(y, x), p.at(y, x + 1), p.at(y + 1, x), p.at(y + 1, x + 1), fx, fy);
        worst = std::max(worst, std::abs(out.at(0, 0, y, x) - ref));
      }
    }
  }
  r.check(worst < 1e-6, fmt::format("sub-pixel samples vs closed-form bilinear: worst error {:.2e}", worst));
}

struct Dense {
  int n, c, h, w;
  std::vector<double> v;
  ImageView view() const { return ImageView{v, n, c, h, w}; }
};

Dense random_dense(int c, int h, int w, std::uint64_t seed) {
  return Dense{1, c, h, w, test::to_double(test::random_tensor(Shape{1, c, h, w}, seed, 0, 1))};
}

using LossFn = double (*)(const ImageView&, const ImageView&, std::span<double>);

void loss_identities_gradients(const Context&, Report& r) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dense a = random_dense(3, 32, 32, 2);
  const double ch = charbonnier_loss(a.view(), a.view());
  const double lap = laplacian_loss(a.view(), a.view());
  const double fr = frequency_loss(a.view(), a.view());
  r.check(ch == 1e-6 && lap == 0.0 && fr == 0.0,
          fmt::format("pred == gt gives ({:g}, {:g}, {:g})", ch, lap, fr));

  const Dense pred = random_dense(3, 16, 16, 3);
  const Dense gt = random_dense(3, 16, 16, 4);
  const struct {
    const char* name;
    LossFn fn;
  } losses[] = {{"charbonnier", &charbonnier_loss}, {"laplacian", &laplacian_loss}, {"frequency", &frequency_loss}};
  for (const auto& l : losses) {
    std::vector<double> grad(pred.v.size(), 0.0);
    l.fn(pred.view(), gt.view(), grad);
    const double err = test::fd_relative_error(
        [&](const std::vector<double>& x) { return l.fn(ImageView{x, 1, 3, 16, 16}, gt.view(), {}); }, pred.v,
        grad);
    r.check(err < 1e-3, fmt::format("{} gradient vs central differences on 16x16: worst relative {:.2e}",
                                    l.name, err));
  }
  // The float training path goes through the same cores.
  Variable pv(test::random_tensor(Shape{1, 3, 16, 16}, 5, 0, 1), true);
  const Tensor gv = test::random_tensor(Shape{1, 3, 16, 16}, 6, 0, 1);
  total_loss(pv, gv, LossWeights{}).backward();
  std::vector<double> core(pv.value().numel(), 0.0);
  const std::vector<double> pd = test::to_double(pv.value());
  const std::vector<double> gd = test::to_double(gv);
  total_loss(ImageView{pd, 1, 3, 16, 16}, ImageView{gd, 1, 3, 16, 16}, LossWeights{}, core);
  const double tape_err = test::fd_relative_error(
      [&](const std::vector<double>& x) {
        return total_loss(ImageView{x, 1, 3, 16, 16}, ImageView{gd, 1, 3, 16, 16}, LossWeights{}).total;
      },
      pd, test::to_double(pv.grad()), 1e-6, 1e-6);
  r.check(tape_err < 1e-3, fmt::format("total loss through the tape vs central differences: worst relative {:.2e}",
                                       tape_err));

  double worst_amp = 0;
  double least_phase = 1e9;
  for (auto [dx, dy] : {std::pair{1, 0}, {0, 1}, {5, 3}, {-7, 11}, {15, 15}}) {
    Dense shifted = gt;
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
          shifted.v[(c * 16 + y) * 16 + x] = gt.v[(c * 16 + ((y - dy) % 16 + 16) % 16) * 16 + ((x - dx) % 16 + 16) % 16];
        }
      }
    }
    const FrequencyTerms t = frequency_terms(shifted.view(), gt.view());
    worst_amp = std::max(worst_amp, t.amplitude);
    least_phase = std::min(least_phase, t.phase);
  }
  r.check(worst_amp <= 1e-7, fmt::format("amplitude term under circular shifts: worst {:.2e}", worst_amp));
  r.check(least_phase > 0, fmt::format("phase term registers the shift (smallest {:.3f})", least_phase));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.check(secs < 60, fmt::format("runtime {:.1f} s < 1 min", secs));
}

void metric_oracles(const Context&, Report& r) {
  const std::vector<double> zero(3 * 32 * 32, 0.0);
  const std::vector<double> tenth(3 * 32 * 32, 0.1);
  const double pd = psnr(ImageView{zero, 1, 3, 32, 32}, ImageView{tenth, 1, 3, 32, 32});
  r.check(std::abs(pd - 20.0) < 1e-9, fmt::format("uniform difference 0.1 (double): {:.12f} dB", pd));
  const Tensor t0(Shape{1, 3, 32, 32}, 0.25f);
  const Tensor t1(Shape{1, 3, 32, 32}, 0.35f);
  const double pf = psnr(t0, t1);
  r.check(fmt::format("{:.2f}", pf) == "20.00", fmt::format("uniform difference 0.1 (float frames): {:.6f} dB", pf));
  r.check(std::abs(pf - orc::psnr(test::to_double(t0), test::to_double(t1))) < 1e-9,
          "float-frame PSNR equals the long-double oracle");

  double worst = 0;
  for (int i = 0; i < 10; ++i) {
    const int h = 24 + 5 * i;
    const int w = 32 + 3 * i;
    const Tensor a = test::random_tensor(Shape{1, 3, h, w}, 100 + i, 0, 1);
    Tensor b = test::random_tensor(Shape{1, 3, h, w}, 200 + i, -0.3f, 0.3f);
    for (std::size_t k = 0; k < b.numel(); ++k) b.data()[k] = std::clamp(a.data()[k] + b.data()[k], 0.0f, 1.0f);
    double ref = 0;
    for (int c = 0; c < 3; ++c) ref += orc::ssim(plane_of(a, 0, c), plane_of(b, 0, c));
    ref /= 3;
    worst = std::max(worst, std::abs(ssim(a, b) - ref));
  }
  r.check(worst < 1e-6, fmt::format("SSIM vs direct-window oracle on 10 random pairs: worst {:.2e}", worst));
}

const Register a(4, "warping_oracles", "identity, integer-shift and bilinear oracles", warping_oracles);
const Register b(5, "loss_identities_gradients", "loss identities, FD gradients, shift invariance",
                 loss_identities_gradients);
const Register c(9, "metric_oracles", "PSNR closed form and SSIM reference agreement", metric_oracles);

}  // namespace
}  // namespace ladder::acceptance

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

#include <doctest.h>

#include "../oracles/oracles.hpp"
#include "../support.hpp"
#include "ladder/error.hpp"
#include "ladder/losses.hpp"

using namespace ladder;
namespace orc = ladder::oracle;

namespace {

struct Img {
  int n, c, h, w;
  std::vector<double> v;
  Img(int n_, int c_, int h_, int w_, std::vector<double> values = {})
      : n(n_), c(c_), h(h_), w(w_), v(std::move(values)) {
    if (v.empty()) v.assign(static_cast<std::size_t>(n) * c * h * w, 0.0);
  }
  ImageView view() const { return ImageView{v, n, c, h, w}; }
  std::vector<orc::Image> planes() const {
    std::vector<orc::Image> out;
    for (int p = 0; p < n * c; ++p) {
      orc::Image img(h, w);
      std::copy(v.begin() + p * h * w, v.begin() + (p + 1) * h * w, img.v.begin());
      out.push_back(img);
    }
    return out;
  }
};

Img random_img(int n, int c, int h, int w, std::uint64_t seed) {
  const Tensor t = test::random_tensor(Shape{n, c, h, w}, seed, 0, 1);
  return Img(n, c, h, w, test::to_double(t));
}

Img circular_shift(const Img& a, int dx, int dy) {
  Img out = a;
  for (int p = 0; p < a.n * a.c; ++p) {
    for (int y = 0; y < a.h; ++y) {
      for (int x = 0; x < a.w; ++x) {
        const int sy = ((y - dy) % a.h + a.h) % a.h;
        const int sx = ((x - dx) % a.w + a.w) % a.w;
        out.v[(p * a.h + y) * a.w + x] = a.v[(p * a.h + sy) * a.w + sx];
      }
    }
  }
  return out;
}

using LossFn = double (*)(const ImageView&, const ImageView&, std::span<double>);

double fd_error(LossFn fn, const Img& pred, const Img& gt) {
  std::vector<double> grad(pred.v.size(), 0.0);
  fn(pred.view(), gt.view(), grad);
  auto f = [&](const std::vector<double>& x) {
    return fn(ImageView{x, pred.n, pred.c, pred.h, pred.w}, gt.view(), {});
  };
  return test::fd_relative_error(f, pred.v, grad);
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("identical inputs") {
  const Img a = random_img(2, 3, 32, 32, 1);
  CHECK(charbonnier_loss(a.view(), a.view()) == 1e-6);
  CHECK(laplacian_loss(a.view(), a.view()) == 0.0);
  CHECK(frequency_loss(a.view(), a.view()) == 0.0);
  const LossReport r = total_loss(a.view(), a.view(), LossWeights{1, 1, 0.1});
  CHECK(r.total == 1e-6);
}

TEST_CASE("uniform difference closed form") {
  const Img a = random_img(1, 3, 16, 16, 2);
  Img b = a;
  for (double& v : b.v) v += 0.1;
  CHECK(std::abs(charbonnier_loss(b.view(), a.view()) - std::sqrt(0.01 + 1e-12)) < 1e-9);
}

TEST_CASE("weights combine linearly") {
  const Img a = random_img(1, 3, 32, 32, 3);
  const Img b = random_img(1, 3, 32, 32, 4);
  const LossReport only = total_loss(a.view(), b.view(), LossWeights{1, 0, 0});
  CHECK(only.total == only.charbonnier);
  const LossWeights w{0.7, 1.3, 0.2};
  const LossReport r = total_loss(a.view(), b.view(), w);
  const double expect = 0.7 * r.charbonnier + 1.3 * r.laplacian + 0.2 * r.frequency;
  CHECK(std::abs(r.total - expect) <= 1e-12 * std::abs(expect));
  CHECK_THROWS_AS(total_loss(a.view(), b.view(), LossWeights{0, 0, 0}), Error);
}

TEST_CASE("laplacian matches the independent pyramid oracle") {
  for (auto [h, w] : {std::pair{32, 32}, {48, 64}, {16, 16}}) {
    const Img pred = random_img(1, 3, h, w, 5 + h);
    const Img gt = random_img(1, 3, h, w, 6 + w);
    const double ref = orc::laplacian_loss(pred.planes(), gt.planes());
    CHECK(std::abs(laplacian_loss(pred.view(), gt.view()) - ref) < 1e-9);
  }
}

TEST_CASE("constant offset lives in the coarsest band") {
  const Img gt = random_img(1, 3, 32, 32, 7);
  Img pred = gt;
  for (double& v : pred.v) v += 0.05;
  const auto terms = laplacian_band_terms(pred.view(), gt.view());
  for (int i = 0; i < 4; ++i) CHECK(terms[i] < 1e-12);
  CHECK(terms[4] == doctest::Approx(16 * 0.05).epsilon(1e-9));
  CHECK(std::abs(laplacian_loss(pred.view(), gt.view()) -
                 orc::laplacian_loss(pred.planes(), gt.planes())) < 1e-9);
}

// The binomial kernel nulls the Nyquist pattern in the interior; only the
// clamped border leaks into the coarse bands.
TEST_CASE("checkerboard noise lands in band 1, barely in band 5") {
  const Img gt = random_img(1, 1, 128, 128, 8);
  Img pred = gt;
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) pred.v[y * 128 + x] += ((x + y) % 2 ? 0.02 : -0.02);
  }
  const auto terms = laplacian_band_terms(pred.view(), gt.view());
  CHECK(terms[0] > 1e-3);
  CHECK(terms[4] < 0.1 * terms[0]);
  CHECK(std::abs(laplacian_loss(pred.view(), gt.view()) -
                 orc::laplacian_loss(pred.planes(), gt.planes())) < 1e-9);
}

TEST_CASE("laplacian needs dims divisible by 16") {
  const Img a = random_img(1, 1, 24, 32, 9);
  CHECK_THROWS_AS(laplacian_loss(a.view(), a.view()), Error);
}

TEST_CASE("amplitude term is invariant to circular shifts") {
  const Img gt = random_img(1, 3, 16, 16, 10);
  for (auto [dx, dy] : {std::pair{1, 0}, {3, 5}, {-7, 2}}) {
    const FrequencyTerms t = frequency_terms(circular_shift(gt, dx, dy).view(), gt.view());
    CHECK(t.amplitude < 1e-7);
    CHECK(t.phase > 0.0);
  }
  // Translation sensitivity of the pyramid loss, for contrast.
  CHECK(laplacian_loss(circular_shift(gt, 1, 0).view(), gt.view()) > 1e-3);
}

TEST_CASE("scaling the target doubles the spectrum") {
  const Img gt = random_img(1, 2, 16, 16, 11);
  Img pred = gt;
  for (double& v : pred.v) v *= 2;
  const FrequencyTerms t = frequency_terms(pred.view(), gt.view());
  double mean_abs = 0;
  for (const orc::Image& p : gt.planes()) {
    for (const auto& z : orc::dft2(p)) mean_abs += std::abs(z);
  }
  mean_abs /= static_cast<double>(gt.v.size());
  CHECK(std::abs(t.amplitude - mean_abs) <= 1e-9 * mean_abs);
  CHECK(t.phase == 0.0);
}

TEST_CASE("finite-difference gradients on 16x16 inputs") {
  const Img pred = random_img(1, 3, 16, 16, 12);
  const Img gt = random_img(1, 3, 16, 16, 13);
  CHECK(fd_error(&charbonnier_loss, pred, gt) < 1e-3);
  CHECK(fd_error(&laplacian_loss, pred, gt) < 1e-3);
  CHECK(fd_error(&frequency_loss, pred, gt) < 1e-3);
}

TEST_CASE("gradient at the optimum is finite") {
  const Img a = random_img(1, 3, 16, 16, 14);
  std::vector<double> g(a.v.size(), 0.0);
  charbonnier_loss(a.view(), a.view(), g);
  for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("variable total loss agrees with the double core") {
  const Tensor pred = test::random_tensor(Shape{1, 3, 32, 32}, 15, 0, 1);
  const Tensor gt = test::random_tensor(Shape{1, 3, 32, 32}, 16, 0, 1);
  Variable p(pred, true);
  LossReport report;
  const Variable loss = total_loss(p, gt, LossWeights{}, &report);
  loss.backward();
  const LossReport ref = total_loss(pred, gt, LossWeights{});
  CHECK(report.total == doctest::Approx(ref.total).epsilon(1e-12));
  CHECK(loss.value().data()[0] == doctest::Approx(ref.total).epsilon(1e-6));

  const std::vector<double> pv = test::to_double(pred);
  const std::vector<double> gv = test::to_double(gt);
  std::vector<double> grad(pv.size(), 0.0);
  total_loss(ImageView{pv, 1, 3, 32, 32}, ImageView{gv, 1, 3, 32, 32}, LossWeights{}, grad);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    CHECK(p.grad().data()[i] == doctest::Approx(grad[i]).epsilon(1e-5).scale(1e-6));
  }
}

}  // TEST_SUITE

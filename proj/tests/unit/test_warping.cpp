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
#include "ladder/warping.hpp"

using namespace ladder;
namespace orc = ladder::oracle;

namespace {

orc::Image plane_of(const Tensor& t, int n = 0, int c = 0) {
  orc::Image img(t.shape().h, t.shape().w);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) img.at(y, x) = t.at(n, c, y, x);
  }
  return img;
}

Tensor constant_flow(int h, int w, float dx, float dy) {
  Tensor f(Shape{1, 2, h, w});
  std::fill(f.plane(0, 0), f.plane(0, 0) + f.shape().plane(), dx);
  std::fill(f.plane(0, 1), f.plane(0, 1) + f.shape().plane(), dy);
  return f;
}

}  // namespace

TEST_SUITE("warping") {

TEST_CASE("zero flow is the identity, bitwise") {
  const Tensor img = test::random_tensor(Shape{2, 3, 13, 17}, 1, 0, 1);
  const Variable out = backward_warp(Variable(img), Variable(Tensor(Shape{2, 2, 13, 17})));
  CHECK(bitwise_equal(out.value(), img));
}

TEST_CASE("ramp shifted by one column replicates the last column") {
  Tensor ramp(Shape{1, 1, 8, 8});
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) ramp.at(0, 0, y, x) = static_cast<float>(x + 8 * y);
  }
  const Tensor out = backward_warp(Variable(ramp), Variable(constant_flow(8, 8, 1, 0))).value();
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) CHECK(out.at(0, 0, y, x) == ramp.at(0, 0, y, std::min(x + 1, 7)));
  }
}

TEST_CASE("integer shifts match the index oracle exactly") {
  const Tensor img = test::random_tensor(Shape{1, 1, 20, 24}, 2, 0, 1);
  for (auto [dx, dy] : {std::pair{2, 0}, {0, -3}, {-1, 4}, {5, 5}}) {
    const Tensor out =
        backward_warp(Variable(img), Variable(constant_flow(20, 24, static_cast<float>(dx), static_cast<float>(dy))))
            .value();
    const orc::Image ref = orc::shift(plane_of(img), dx, dy);
    for (int y = 0; y < 20; ++y) {
      for (int x = 0; x < 24; ++x) CHECK(out.at(0, 0, y, x) == ref.at(y, x));
    }
  }
}

TEST_CASE("half-pixel horizontal flow averages neighbours") {
  Tensor img(Shape{1, 1, 2, 2}, std::vector<float>{0.2f, 0.9f, 0.4f, 0.1f});
  const Tensor out = backward_warp(Variable(img), Variable(constant_flow(2, 2, 0.5f, 0))).value();
  CHECK(std::abs(out.at(0, 0, 0, 0) - 0.55f) < 1e-6);
  CHECK(std::abs(out.at(0, 0, 1, 0) - 0.25f) < 1e-6);
}

TEST_CASE("fractional flows match the bilinear closed form") {
  const Tensor img = test::random_tensor(Shape{1, 1, 9, 9}, 3, 0, 1);
  const orc::Image p = plane_of(img);
  const Tensor flow = test::random_tensor(Shape{1, 2, 9, 9}, 4, -0.99f, 0.99f);
  const Tensor out = backward_warp(Variable(img), Variable(flow)).value();
  for (int y = 1; y < 8; ++y) {
    for (int x = 1; x < 8; ++x) {
      const double sx = x + double(flow.at(0, 0, y, x));
      const double sy = y + double(flow.at(0, 1, y, x));
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double ref = orc::bilinear(p.at(y0, x0), p.at(y0, x0 + 1), p.at(y0 + 1, x0),
                                       p.at(y0 + 1, x0 + 1), sx - x0, sy - y0);
      CHECK(std::abs(out.at(0, 0, y, x) - ref) < 1e-6);
    }
  }
}

TEST_CASE("warp gradients match finite differences") {
  const Tensor img = test::random_tensor(Shape{1, 2, 7, 8}, 5, 0, 1);
  const Tensor flow = test::random_tensor(Shape{1, 2, 7, 8}, 6, -2.3f, 2.3f);
  auto f = [](const std::vector<Variable>& v) { return backward_warp(v[0], v[1]); };
  CHECK(test::check_gradient(f, {img, flow}, 0).worst_rel < 1e-3);
  // Tiny step: bilinear is piecewise linear in the flow.
  CHECK(test::check_gradient(f, {img, flow}, 1, 7, 1e-3f).worst_rel < 2e-2);
}

TEST_CASE("upsampling a constant flow doubles it") {
  const WarpState w = WarpState::from_parts(Variable(constant_flow(16, 16, 3, -1)),
                                            Variable(constant_flow(16, 16, -2, 0.5f)),
                                            Variable(Tensor(Shape{1, 1, 16, 16}, 0.7f)));
  const WarpState up = upsample_warp_state(w);
  CHECK(up.height() == 32);
  CHECK(up.width() == 32);
  const Tensor f0 = up.flow_to_0().value();
  const Tensor f1 = up.flow_to_1().value();
  const Tensor m = up.mask_logits().value();
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      CHECK(f0.at(0, 0, y, x) == 6.0f);
      CHECK(f0.at(0, 1, y, x) == -2.0f);
      CHECK(f1.at(0, 0, y, x) == -4.0f);
      CHECK(f1.at(0, 1, y, x) == 1.0f);
      CHECK(m.at(0, 0, y, x) == doctest::Approx(0.7f).epsilon(1e-6));
    }
  }
}

TEST_CASE("zero state upsamples to zero") {
  const WarpState up = upsample_warp_state(WarpState::zeros(2, 8, 12));
  CHECK(up.packed.shape() == Shape{2, 5, 16, 24});
  for (float v : up.packed.value().span()) CHECK(v == 0.0f);
}

TEST_CASE("upsample matches the half-pixel bilinear oracle") {
  const Tensor field = test::random_tensor(Shape{1, 5, 4, 4}, 8);
  const WarpState up = upsample_warp_state(WarpState{Variable(field)});
  for (int c = 0; c < 5; ++c) {
    const orc::Image ref = orc::upsample2x(plane_of(field, 0, c));
    const double scale = c < 4 ? 2.0 : 1.0;
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        CHECK(std::abs(up.packed.value().at(0, c, y, x) - scale * ref.at(y, x)) < 1e-6);
      }
    }
  }
}

TEST_CASE("downsampling inverts constant upsampling") {
  const Tensor field = test::random_tensor(Shape{1, 5, 1, 1}, 9);
  Tensor big(Shape{1, 5, 6, 6});
  for (int c = 0; c < 5; ++c) std::fill(big.plane(0, c), big.plane(0, c) + 36, field.data()[c]);
  const WarpState down = downsample_warp_state(upsample_warp_state(WarpState{Variable(big)}));
  CHECK(max_abs_diff(down.packed.value(), big) < 1e-6f);
}

TEST_CASE("area downsample") {
  const Tensor c(Shape{1, 3, 8, 6}, 0.3f);
  const Tensor half = downsample_image(Variable(c)).value();
  CHECK(half.shape() == Shape{1, 3, 4, 3});
  for (float v : half.span()) CHECK(v == doctest::Approx(0.3f));

  const Tensor block(Shape{1, 1, 2, 2}, std::vector<float>{0.1f, 0.2f, 0.3f, 0.6f});
  CHECK(downsample_image(Variable(block)).value().data()[0] == doctest::Approx(0.3f));

  Variable v(Tensor(Shape{1, 3, 256, 448}));
  for (int i = 0; i < 3; ++i) v = downsample_image(v);
  CHECK(v.shape() == Shape{1, 3, 32, 56});
  CHECK_THROWS(downsample_image(Variable(c), 0.25));
}

}  // TEST_SUITE

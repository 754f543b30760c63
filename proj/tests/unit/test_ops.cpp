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

#include "../support.hpp"
#include "ladder/ops.hpp"
#include "ladder/simd/kernels.hpp"

using namespace ladder;
using test::check_gradient;
using test::random_tensor;

namespace {

using Fn = std::function<Variable(const std::vector<Variable>&)>;

void expect_gradients(const Fn& f, const std::vector<Tensor>& inputs, double tol = 1e-3) {
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto r = check_gradient(f, inputs, i);
    CAPTURE(i);
    CHECK(r.checked > 0);
    CHECK(r.worst_rel < tol);
  }
}

// Direct convolution used to check the im2col path.
Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  const int oh = (xs.h + 2 * pad - ws.h) / stride + 1;
  const int ow = (xs.w + 2 * pad - ws.w) / stride + 1;
  Tensor out(Shape{xs.n, ws.n, oh, ow});
  for (int n = 0; n < xs.n; ++n) {
    for (int o = 0; o < ws.n; ++o) {
      for (int y = 0; y < oh; ++y) {
        for (int xx = 0; xx < ow; ++xx) {
          double acc = b.empty() ? 0.0 : b.data()[o];
          for (int c = 0; c < ws.c; ++c) {
            for (int i = 0; i < ws.h; ++i) {
              for (int j = 0; j < ws.w; ++j) {
                const int sy = y * stride - pad + i;
                const int sx = xx * stride - pad + j;
                if (sy < 0 || sx < 0 || sy >= xs.h || sx >= xs.w) continue;
                acc += double(w.at(o, c, i, j)) * x.at(n, c, sy, sx);
              }
            }
          }
          out.at(n, o, y, xx) = static_cast<float>(acc);
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("ops") {

TEST_CASE("conv2d matches a direct convolution") {
  for (auto [k, stride] : {std::pair{3, 1}, {3, 2}, {1, 1}, {5, 1}}) {
    const Tensor x = random_tensor(Shape{2, 3, 9, 10}, 1);
    const Tensor w = random_tensor(Shape{4, 3, k, k}, 2);
    const Tensor b = random_tensor(Shape{1, 4, 1, 1}, 3);
    const Tensor out = ops::conv2d(Variable(x), Variable(w), Variable(b), stride, k / 2).value();
    CHECK(max_abs_diff(out, naive_conv(x, w, b, stride, k / 2)) < 1e-5f);
  }
}

TEST_CASE("conv2d gradients") {
  const Fn f = [](const std::vector<Variable>& v) { return ops::conv2d(v[0], v[1], v[2], 2, 1); };
  expect_gradients(f, {random_tensor(Shape{2, 3, 8, 7}, 4), random_tensor(Shape{5, 3, 3, 3}, 5),
                       random_tensor(Shape{1, 5, 1, 1}, 6)});
}

TEST_CASE("depthwise gradients on both kernel tables") {
  for (simd::Isa isa : {simd::Isa::scalar, simd::Isa::avx2}) {
    if (isa == simd::Isa::avx2 && simd::avx2_kernels() == nullptr) continue;
    simd::select_kernels(isa);
    const Fn f = [](const std::vector<Variable>& v) { return ops::depthwise_conv2d(v[0], v[1], v[2]); };
    expect_gradients(f, {random_tensor(Shape{2, 3, 9, 11}, 7), random_tensor(Shape{3, 1, 7, 7}, 8),
                         random_tensor(Shape{1, 3, 1, 1}, 9)});
  }
  simd::select_kernels(simd::avx2_kernels() ? simd::Isa::avx2 : simd::Isa::scalar);
}

TEST_CASE("pointwise nonlinearities") {
  // Offsets keep samples away from the leaky-ReLU kink.
  Tensor x = random_tensor(Shape{1, 2, 5, 5}, 10);
  for (float& v : x.span()) v += v > 0 ? 0.05f : -0.05f;
  expect_gradients([](const std::vector<Variable>& v) { return ops::leaky_relu(v[0]); }, {x});
  expect_gradients([](const std::vector<Variable>& v) { return ops::sigmoid(v[0]); }, {x});
  expect_gradients([](const std::vector<Variable>& v) { return ops::gelu(v[0]); }, {x});
  expect_gradients([](const std::vector<Variable>& v) { return ops::affine(v[0], -1.7f, 0.2f); }, {x});
}

TEST_CASE("binary and broadcast ops") {
  const Tensor a = random_tensor(Shape{2, 3, 4, 5}, 11);
  const Tensor b = random_tensor(Shape{2, 3, 4, 5}, 12);
  const Tensor m = random_tensor(Shape{2, 1, 4, 5}, 13);
  expect_gradients([](const std::vector<Variable>& v) { return ops::add(v[0], v[1]); }, {a, b});
  expect_gradients([](const std::vector<Variable>& v) { return ops::sub(v[0], v[1]); }, {a, b});
  expect_gradients([](const std::vector<Variable>& v) { return ops::mul(v[0], v[1]); }, {a, b});
  expect_gradients([](const std::vector<Variable>& v) { return ops::mul_broadcast(v[0], v[1]); }, {a, m});
  expect_gradients(
      [](const std::vector<Variable>& v) { return ops::channel_scale(v[0], {2.0f, -1.0f, 0.5f}); }, {a});
}

TEST_CASE("layout ops") {
  const Tensor a = random_tensor(Shape{2, 3, 4, 4}, 14);
  const Tensor b = random_tensor(Shape{2, 2, 4, 4}, 15);
  expect_gradients(
      [](const std::vector<Variable>& v) {
        return ops::slice_channels(ops::concat_channels({v[0], v[1]}), 1, 3);
      },
      {a, b});
  expect_gradients(
      [](const std::vector<Variable>& v) {
        return ops::slice_batch(ops::concat_batch({v[0], v[0]}), 1, 2);
      },
      {a});
  const Variable joined = ops::concat_channels({Variable(a), Variable(b)});
  CHECK(joined.shape() == Shape{2, 5, 4, 4});
  CHECK(bitwise_equal(ops::slice_channels(joined, 0, 3).value(), a));
}

TEST_CASE("resampling") {
  const Tensor x = random_tensor(Shape{1, 2, 6, 8}, 16);
  expect_gradients([](const std::vector<Variable>& v) { return ops::upsample2x(v[0]); }, {x});
  expect_gradients([](const std::vector<Variable>& v) { return ops::avg_pool2x(v[0]); }, {x});
  CHECK(ops::upsample2x(Variable(x)).shape() == Shape{1, 2, 12, 16});
  CHECK(ops::avg_pool2x(Variable(x)).shape() == Shape{1, 2, 3, 4});
}

TEST_CASE("layer norm") {
  const Fn f = [](const std::vector<Variable>& v) { return ops::layer_norm_channels(v[0], v[1], v[2]); };
  expect_gradients(f, {random_tensor(Shape{2, 6, 3, 3}, 17), random_tensor(Shape{1, 6, 1, 1}, 18),
                       random_tensor(Shape{1, 6, 1, 1}, 19)},
                   3e-3);
  const Tensor y = ops::layer_norm_channels(Variable(random_tensor(Shape{1, 8, 2, 2}, 20)),
                                            Variable(Tensor(Shape{1, 8, 1, 1}, 1.0f)),
                                            Variable(Tensor(Shape{1, 8, 1, 1}, 0.0f)))
                       .value();
  for (int p = 0; p < 4; ++p) {
    double mean = 0;
    for (int c = 0; c < 8; ++c) mean += y.data()[c * 4 + p];
    CHECK(std::abs(mean / 8) < 1e-5);
  }
}

TEST_CASE("windowed cross attention") {
  const Fn f = [](const std::vector<Variable>& v) {
    return ops::window_cross_attention(v[0], v[1], v[2], 2, 3);
  };
  // Ragged borders: 5 x 7 with 3 x 3 windows.
  expect_gradients(f, {random_tensor(Shape{2, 4, 5, 7}, 21), random_tensor(Shape{2, 4, 5, 7}, 22),
                       random_tensor(Shape{2, 4, 5, 7}, 23)},
                   3e-3);
}

TEST_CASE("attention with uniform keys averages the values of both frames") {
  const Tensor q = random_tensor(Shape{2, 2, 4, 4}, 24);
  const Tensor k(Shape{2, 2, 4, 4}, 0.0f);
  const Tensor v = random_tensor(Shape{2, 2, 4, 4}, 25);
  const Tensor out = ops::window_cross_attention(Variable(q), Variable(k), Variable(v), 1, 4).value();
  for (int c = 0; c < 2; ++c) {
    double mean = 0;
    for (int b = 0; b < 2; ++b) {
      for (int p = 0; p < 16; ++p) mean += v.plane(b, c)[p];
    }
    mean /= 32;
    for (int b = 0; b < 2; ++b) {
      for (int p = 0; p < 16; ++p) CHECK(out.plane(b, c)[p] == doctest::Approx(mean).epsilon(1e-5));
    }
  }
}

TEST_CASE("reductions and flop counting") {
  const Tensor x = random_tensor(Shape{1, 3, 4, 4}, 26);
  expect_gradients([](const std::vector<Variable>& v) { return ops::mean(v[0]); }, {x});
  expect_gradients([](const std::vector<Variable>& v) { return ops::sum(v[0]); }, {x});

  ops::FlopScope scope;
  ops::conv2d(Variable(x), Variable(random_tensor(Shape{5, 3, 3, 3}, 27)), Variable(), 1, 1);
  CHECK(scope.flops() == 2ull * 9 * 3 * 5 * 16);
}

TEST_CASE("no-grad mode records nothing") {
  Variable a(random_tensor(Shape{1, 1, 2, 2}, 28), true);
  Variable out;
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    out = ops::mul(a, a);
  }
  CHECK(grad_enabled());
  CHECK_FALSE(out.requires_grad());
}

TEST_CASE("gradients accumulate across uses and zero_grad clears them") {
  Variable a(Tensor(Shape{1, 1, 1, 2}, std::vector<float>{1.0f, 2.0f}), true);
  ops::sum(ops::add(a, a)).backward();
  CHECK(a.grad().data()[0] == 2.0f);
  ops::sum(a).backward();
  CHECK(a.grad().data()[1] == 3.0f);
  a.zero_grad();
  CHECK_FALSE(a.has_grad());
}

}  // TEST_SUITE

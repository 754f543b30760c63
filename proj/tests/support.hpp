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

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "ladder/autograd.hpp"
#include "ladder/tensor.hpp"

namespace ladder::test {

inline Tensor random_tensor(Shape s, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(lo, hi);
  Tensor t(s);
  for (float& v : t.span()) v = d(rng);
  return t;
}

inline std::vector<double> to_double(const Tensor& t) { return {t.span().begin(), t.span().end()}; }

struct GradCheck {
  double worst_rel = 0.0;
  std::size_t checked = 0;
};

/// Central differences of sum(f(inputs) * probe) against backward(probe)
/// for every element of inputs[which]. Float ops, so the step is coarse.
inline GradCheck check_gradient(const std::function<Variable(const std::vector<Variable>&)>& f,
                                std::vector<Tensor> inputs, std::size_t which,
                                std::uint64_t seed = 7, float step = 1e-2f,
                                std::size_t max_checks = 64) {
  std::vector<Variable> vars;
  for (std::size_t i = 0; i < inputs.size(); ++i) vars.emplace_back(inputs[i], i == which);
  Variable out = f(vars);
  const Tensor probe = random_tensor(out.shape(), seed);
  out.backward(probe);
  const Tensor analytic = vars[which].grad();

  auto objective = [&](const Tensor& x) {
    std::vector<Variable> v;
    for (std::size_t i = 0; i < inputs.size(); ++i) v.emplace_back(i == which ? x : inputs[i], false);
    const Tensor y = f(v).value();
    double s = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += static_cast<double>(y.data()[i]) * probe.data()[i];
    return s;
  };
  GradCheck r;
  const std::size_t n = inputs[which].numel();
  const std::size_t stride = std::max<std::size_t>(1, n / max_checks);
  for (std::size_t i = 0; i < n; i += stride) {
    Tensor plus = inputs[which];
    Tensor minus = inputs[which];
    plus.data()[i] += step;
    minus.data()[i] -= step;
    const double numeric = (objective(plus) - objective(minus)) / (2.0 * step);
    const double a = analytic.data()[i];
    const double rel = std::abs(a - numeric) / std::max(1e-2, std::abs(a) + std::abs(numeric));
    r.worst_rel = std::max(r.worst_rel, rel);
    ++r.checked;
  }
  return r;
}

/// Worst relative disagreement between an analytic gradient and central
/// differences of a double-precision loss over every element of x. Pairs
/// where both sides are below `floor` count as agreeing.
inline double fd_relative_error(const std::function<double(const std::vector<double>&)>& loss,
                                std::vector<double> x, const std::vector<double>& analytic,
                                double step = 1e-6, double floor = 1e-9) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = loss(x);
    x[i] = keep - step;
    const double down = loss(x);
    x[i] = keep;
    const double numeric = (up - down) / (2 * step);
    const double scale = std::max(std::abs(numeric), std::abs(analytic[i]));
    if (scale < floor) continue;
    worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
  }
  return worst;
}

}  // namespace ladder::test

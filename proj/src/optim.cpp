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

#include "ladder/optim.hpp"

#include <cmath>
#include <numbers>

#include "ladder/error.hpp"
#include "ladder/simd/kernels.hpp"

namespace ladder {

double cosine_lr(double start, double end, std::int64_t step, std::int64_t total) {
  require(total > 0, "cosine_lr: total steps must be positive");
  if (step <= 0) return start;
  if (step >= total - 1) return end;
  const double progress = static_cast<double>(step) / static_cast<double>(total - 1);
  return end + (start - end) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double grad_norm(const std::vector<nn::Parameter>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.var.has_grad()) continue;
    for (float g : p.var.grad().span()) sq += static_cast<double>(g) * g;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(const std::vector<nn::Parameter>& params, double max_norm) {
  require(max_norm > 0, "clip_grad_norm: max norm must be positive");
  const double norm = grad_norm(params);
  if (!std::isfinite(norm) || norm <= max_norm) return norm;
  const auto scale = static_cast<float>(max_norm / norm);
  for (const auto& p : params) {
    if (!p.var.has_grad()) continue;
    Variable v = p.var;
    Tensor& g = v.mutable_grad();
    simd::kernels().scale(g.numel(), scale, g.data(), g.data());
  }
  return norm;
}

AdamW::AdamW(std::vector<nn::Parameter> params, AdamWOptions options) : options_(options) {
  require(options.beta1 >= 0 && options.beta1 < 1 && options.beta2 >= 0 && options.beta2 < 1,
          "AdamW: betas must lie in [0, 1)");
  slots_.reserve(params.size());
  for (auto& p : params) {
    const Shape s = p.var.shape();
    slots_.push_back(Slot{std::move(p), Tensor(s), Tensor(s)});
  }
}

void AdamW::step(double lr) {
  ++t_;
  simd::AdamWStep s;
  s.lr = static_cast<float>(lr);
  s.beta1 = static_cast<float>(options_.beta1);
  s.beta2 = static_cast<float>(options_.beta2);
  s.eps = static_cast<float>(options_.eps);
  s.weight_decay = static_cast<float>(options_.weight_decay);
  s.bias_correction1 = static_cast<float>(1.0 - std::pow(options_.beta1, static_cast<double>(t_)));
  s.bias_correction2 = static_cast<float>(1.0 - std::pow(options_.beta2, static_cast<double>(t_)));
  const auto& k = simd::kernels();
  for (auto& slot : slots_) {
    Variable v = slot.param.var;
    if (!v.has_grad()) continue;
    Tensor& w = v.mutable_value();
    k.adamw(w.numel(), s, w.data(), v.grad().data(), slot.m.data(), slot.v.data());
  }
}

}  // namespace ladder

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

#include "ladder/nn.hpp"

#include <cmath>

#include "ladder/error.hpp"

namespace ladder::nn {

Variable ParamStore::add(const std::string& name, Shape shape) {
  require(find(name) == nullptr, "duplicate parameter name '{}'", name);
  params_.push_back(Parameter{name, Variable(Tensor(shape), true)});
  return params_.back().var;
}

const Parameter* ParamStore::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::size_t ParamStore::count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.var.value().numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

void init_kaiming(Variable& weight, int fan_in, Rng& rng) {
  const double gain = std::sqrt(2.0 / (1.0 + 0.1 * 0.1));
  const double bound = gain * std::sqrt(3.0 / fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (float& w : weight.mutable_value().span()) w = static_cast<float>(dist(rng));
}

Conv2d make_conv(ParamStore& store, const std::string& name, int cin, int cout, int kernel,
                 int stride, Rng& rng, Init init) {
  Conv2d conv;
  conv.weight = store.add(name + ".weight", Shape{cout, cin, kernel, kernel});
  conv.bias = store.add(name + ".bias", Shape{1, cout, 1, 1});
  conv.stride = stride;
  conv.pad = kernel / 2;
  if (init == Init::kaiming) init_kaiming(conv.weight, cin * kernel * kernel, rng);
  return conv;
}

DepthwiseConv2d make_depthwise(ParamStore& store, const std::string& name, int channels, int kernel,
                               Rng& rng) {
  DepthwiseConv2d conv;
  conv.weight = store.add(name + ".weight", Shape{channels, 1, kernel, kernel});
  conv.bias = store.add(name + ".bias", Shape{1, channels, 1, 1});
  init_kaiming(conv.weight, kernel * kernel, rng);
  return conv;
}

LayerNorm make_layer_norm(ParamStore& store, const std::string& name, int channels) {
  LayerNorm ln;
  ln.gamma = store.add(name + ".gamma", Shape{1, channels, 1, 1});
  ln.beta = store.add(name + ".beta", Shape{1, channels, 1, 1});
  ln.gamma.mutable_value().fill(1.0f);
  return ln;
}

}  // namespace ladder::nn

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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ladder/ops.hpp"

namespace ladder::nn {

using Rng = std::mt19937_64;

struct Parameter {
  std::string name;
  Variable var;
};

/// Owns every trainable tensor of a model under a dotted, unique name.
class ParamStore {
 public:
  Variable add(const std::string& name, Shape shape);
  const std::vector<Parameter>& params() const noexcept { return params_; }
  std::vector<Parameter>& params() noexcept { return params_; }
  const Parameter* find(const std::string& name) const;
  std::size_t count() const;
  void zero_grad();

 private:
  std::vector<Parameter> params_;
};

enum class Init { kaiming, zero };

/// Uniform fan-in init scaled for leaky-ReLU(0.1); biases start at zero.
void init_kaiming(Variable& weight, int fan_in, Rng& rng);

struct Conv2d {
  Variable weight;
  Variable bias;
  int stride = 1;
  int pad = 0;
  Variable operator()(const Variable& x) const { return ops::conv2d(x, weight, bias, stride, pad); }
};

Conv2d make_conv(ParamStore& store, const std::string& name, int cin, int cout, int kernel,
                 int stride, Rng& rng, Init init = Init::kaiming);

struct DepthwiseConv2d {
  Variable weight;
  Variable bias;
  Variable operator()(const Variable& x) const {
    return ops::depthwise_conv2d(x, weight, bias);
  }
};

DepthwiseConv2d make_depthwise(ParamStore& store, const std::string& name, int channels, int kernel,
                               Rng& rng);

struct LayerNorm {
  Variable gamma;
  Variable beta;
  Variable operator()(const Variable& x) const {
    return ops::layer_norm_channels(x, gamma, beta);
  }
};

LayerNorm make_layer_norm(ParamStore& store, const std::string& name, int channels);

}  // namespace ladder::nn

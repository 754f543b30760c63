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
#include <string>
#include <vector>

#include "ladder/nn.hpp"

namespace ladder {

/// Cosine decay from `start` at step 0 to `end` at step total-1 (both exact).
double cosine_lr(double start, double end, std::int64_t step, std::int64_t total);

/// Scales all gradients so their joint L2 norm is at most max_norm. Returns the
/// norm before clipping (NaN/inf pass through unchanged).
double clip_grad_norm(const std::vector<nn::Parameter>& params, double max_norm);

/// Joint L2 norm of the gradients present.
double grad_norm(const std::vector<nn::Parameter>& params);

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

/// Decoupled-weight-decay Adam over a fixed parameter subset.
class AdamW {
 public:
  struct Slot {
    nn::Parameter param;
    Tensor m;
    Tensor v;
  };

  AdamW(std::vector<nn::Parameter> params, AdamWOptions options);

  /// Applies one update to every parameter that holds a gradient.
  void step(double lr);
  std::int64_t steps() const { return t_; }
  void set_steps(std::int64_t t) { t_ = t; }

  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }
  const AdamWOptions& options() const { return options_; }

 private:
  std::vector<Slot> slots_;
  AdamWOptions options_;
  std::int64_t t_ = 0;
};

}  // namespace ladder

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
#include <map>
#include <string>
#include <vector>

#include "ladder/config.hpp"

namespace ladder {

/// Analytic cost of one forward pass. A multiply-add counts as 2 FLOPs;
/// normalization, activations, warps, and resampling are not counted.
struct CostReport {
  struct Entry {
    std::uint64_t params = 0;
    std::uint64_t flops = 0;
  };
  std::string label;
  int height = 0;
  int width = 0;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
  std::map<std::string, Entry> breakdown;  // sums to the totals

  std::string table() const;
  std::string json() const;  // one line
};

// Layer-level counts.
std::uint64_t conv_params(int k, int cin, int cout, bool bias = true);
std::uint64_t conv_flops(int k, int cin, int cout, int out_h, int out_w, int groups = 1);
/// Depth-wise k x k followed by point-wise 1 x 1, both ch -> ch.
std::uint64_t dsconv_flops(int k, int ch, int h, int w);
/// Windowed cross-frame attention core (QK^T and PV) for one item.
std::uint64_t attention_flops(int dim, int h, int w, int window);

/// Parameter count only (flops are zero).
CostReport count_params(const ModelConfig& cfg);
/// Params plus FLOPs at height x width (multiples of 32).
CostReport count_flops(const ModelConfig& cfg, int height, int width);

/// Kernel/kind variants of the high-res decoders.
std::vector<CostReport> decoder_ablation(const ModelConfig& base, int height, int width);
/// 2L..5L decoder-only refiners and the UNet baseline.
std::vector<CostReport> refinement_ablation(const ModelConfig& base, int height, int width);

std::string ablation_table(const std::vector<CostReport>& rows);

}  // namespace ladder

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

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "ladder/config.hpp"
#include "ladder/nn.hpp"

namespace ladder {

/// Five feature maps at strides 1, 2, 4, 8, 16.
using FeaturePyramid = std::array<Variable, 5>;

struct CropRecord {
  int height = 0;  // original extents
  int width = 0;
  int pad_bottom = 0;
  int pad_right = 0;
  bool empty() const { return pad_bottom == 0 && pad_right == 0; }
};

/// Replication-pads bottom/right so both dims are multiples of `multiple`.
std::pair<Tensor, CropRecord> pad_to_multiple(const Tensor& img, int multiple);
Tensor crop(const Tensor& img, const CropRecord& record);

/// One pre-norm block: windowed cross-frame attention, then a 4x MLP.
class AttentionBlock {
 public:
  AttentionBlock(nn::ParamStore& store, const std::string& name, int dim, int heads, int window,
                 nn::Rng& rng);
  /// x holds both frames stacked in the batch: [frame0 items; frame1 items].
  Variable operator()(const Variable& x) const;

 private:
  int heads_;
  int window_;
  nn::LayerNorm norm1_, norm2_;
  nn::Conv2d q_, k_, v_, proj_, fc1_, fc2_;
};

class FeatureExtractor {
 public:
  FeatureExtractor(const ModelConfig& cfg, nn::ParamStore& store, nn::Rng& rng,
                   const std::string& prefix = "extractor");

  /// Both frames stacked as (2N, 3, H, W); returns stacked pyramids.
  FeaturePyramid forward_stacked(const Variable& frames) const;

  /// Shared-weight extraction of both frames. Spatial dims must be
  /// multiples of 32.
  std::pair<FeaturePyramid, FeaturePyramid> extract(const Variable& i0, const Variable& i1) const;

 private:
  struct ConvLevel {
    nn::Conv2d first, second;
  };
  std::vector<ConvLevel> conv_levels_;    // levels 0..2
  std::vector<nn::Conv2d> attn_stems_;    // downsampling into levels 3, 4
  std::vector<std::vector<AttentionBlock>> attn_levels_;
};

/// Splits stacked pyramids into the frame-0 and frame-1 halves.
std::pair<FeaturePyramid, FeaturePyramid> split_pyramid(const FeaturePyramid& stacked);

}  // namespace ladder

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
#include <vector>

#include "ladder/config.hpp"
#include "ladder/feature_extractor.hpp"
#include "ladder/nn.hpp"
#include "ladder/warping.hpp"

namespace ladder {

struct DecoderBlockSpec {
  DecoderKind kind = DecoderKind::dw_separable;
  int kernel = 3;
  int in_channels = 0;
  int out_channels = 0;
  int layer_count = 2;
};

void validate(const DecoderBlockSpec& spec);

/// Image pyramid of one frame: level l is the input area-averaged l times.
using ImagePyramid = std::vector<Variable>;
ImagePyramid image_pyramid(const Variable& img, int levels);

struct FlowResult {
  WarpState w0;
  // Lifted coarse estimate, then the outputs after l = 2 and l = 1.
  std::vector<WarpState> intermediates;
};

/// Low-resolution decoder: levels 4 and 3 of both frames -> W at level 3,
/// lifted to level 2.
class LowResDecoder {
 public:
  LowResDecoder(const ModelConfig& cfg, nn::ParamStore& store, nn::Rng& rng, const std::string& name);
  WarpState operator()(const Variable& f0_4, const Variable& f0_3, const Variable& f1_4,
                       const Variable& f1_3) const;
  nn::Conv2d& head() { return head_; }

 private:
  std::vector<nn::Conv2d> body_;
  nn::Conv2d head_;
};

/// High-resolution decoder for one level: predicts a residual on W^{l+1}.
class HighResDecoder {
 public:
  HighResDecoder(const ModelConfig& cfg, int level, nn::ParamStore& store, nn::Rng& rng,
                 const std::string& name);
  WarpState operator()(const Variable& f0, const Variable& f1, const Variable& i0,
                       const Variable& i1, const WarpState& w_next) const;
  const DecoderBlockSpec& spec() const { return spec_; }
  nn::Conv2d& head() { return head_; }

 private:
  int level_;
  DecoderBlockSpec spec_;
  nn::Conv2d fuse_;
  std::vector<nn::DepthwiseConv2d> depthwise_;
  std::vector<nn::Conv2d> mix_;
  nn::Conv2d head_;
};

class FlowEstimator {
 public:
  FlowEstimator(const ModelConfig& cfg, nn::ParamStore& store, nn::Rng& rng,
                const std::string& prefix = "flow");

  WarpState estimate_initial(const Variable& f0_4, const Variable& f0_3, const Variable& f1_4,
                             const Variable& f1_3) const;
  /// l in {2, 1, 0}; w_next is at level-l resolution.
  WarpState refine_level(int level, const Variable& f0, const Variable& f1, const Variable& i0,
                         const Variable& i1, const WarpState& w_next) const;
  FlowResult estimate_flow(const FeaturePyramid& pyr0, const FeaturePyramid& pyr1,
                           const ImagePyramid& img0, const ImagePyramid& img1) const;

  LowResDecoder& low() { return low_; }
  HighResDecoder& high(int level) { return high_[2 - level]; }

 private:
  LowResDecoder low_;
  std::vector<HighResDecoder> high_;  // l = 2, 1, 0
};

}  // namespace ladder

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

#include <memory>
#include <string>
#include <vector>

#include "ladder/config.hpp"
#include "ladder/flow_estimator.hpp"

namespace ladder {

/// Produces the unbounded 3-channel residual R at full resolution.
class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual Variable operator()(const FeaturePyramid& pyr0, const FeaturePyramid& pyr1,
                              const ImagePyramid& img0, const ImagePyramid& img1,
                              const WarpState& w0) const = 0;
  /// Levels of the image pyramid the refiner reads.
  virtual int image_levels() const = 0;
  virtual nn::Conv2d& head() = 0;
};

/// W^0 brought to level l: l area halvings, flow values scaled by 2^-l.
std::vector<WarpState> warp_state_pyramid(const WarpState& w0, int levels);

/// Decoder-only refinement over the `levels` finest pyramid levels.
class DecoderOnlyRefiner final : public Refiner {
 public:
  DecoderOnlyRefiner(const ModelConfig& cfg, int levels, nn::ParamStore& store, nn::Rng& rng,
                     const std::string& prefix);
  Variable operator()(const FeaturePyramid& pyr0, const FeaturePyramid& pyr1,
                      const ImagePyramid& img0, const ImagePyramid& img1,
                      const WarpState& w0) const override;
  int image_levels() const override { return levels_; }
  nn::Conv2d& head() override { return head_; }

 private:
  struct Block {
    nn::Conv2d fuse;
    nn::Conv2d residual;
  };
  int levels_;
  std::vector<Block> blocks_;  // coarsest first
  nn::Conv2d head_;
};

/// Encoder-decoder baseline for the refinement ablation.
class UNetRefiner final : public Refiner {
 public:
  UNetRefiner(const ModelConfig& cfg, nn::ParamStore& store, nn::Rng& rng, const std::string& prefix);
  Variable operator()(const FeaturePyramid& pyr0, const FeaturePyramid& pyr1,
                      const ImagePyramid& img0, const ImagePyramid& img1,
                      const WarpState& w0) const override;
  int image_levels() const override { return 1; }
  nn::Conv2d& head() override { return head_; }

  static constexpr int kStages = 4;

 private:
  nn::Conv2d stem_;
  std::vector<std::pair<nn::Conv2d, nn::Conv2d>> down_;
  std::pair<nn::Conv2d, nn::Conv2d> bottleneck_;
  std::vector<std::pair<nn::Conv2d, nn::Conv2d>> up_;
  nn::Conv2d head_;
};

/// Refiner for cfg.refiner; `levels` (2..5) selects the decoder-only depth.
std::unique_ptr<Refiner> build_refinement(const ModelConfig& cfg, int levels, nn::ParamStore& store,
                                          nn::Rng& rng, const std::string& prefix = "refine");

}  // namespace ladder

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
#include <memory>
#include <string>
#include <vector>

#include "ladder/config.hpp"
#include "ladder/feature_extractor.hpp"
#include "ladder/flow_estimator.hpp"
#include "ladder/refinement.hpp"

namespace ladder {

enum class FlowMode { original_flow, downscaled_flow };

std::string flow_mode_name(FlowMode mode);

/// sigmoid(m) * warp(I0, F0) + (1 - sigmoid(m)) * warp(I1, F1) + R, unclamped.
/// `residual` may be undefined (treated as zero).
Variable compose(const Variable& i0, const Variable& i1, const WarpState& w0,
                 const Variable& residual);

struct ForwardResult {
  Variable frame;  // unclamped
  WarpState w0;
  Variable residual;  // undefined without the refinement stage
  std::vector<WarpState> intermediates;
};

class Model {
 public:
  explicit Model(const ModelConfig& cfg, std::uint64_t seed = 0);

  const ModelConfig& config() const noexcept { return cfg_; }
  nn::ParamStore& params() noexcept { return store_; }
  const nn::ParamStore& params() const noexcept { return store_; }

  /// Inputs must already be padded: multiples of 32, or of 64 in
  /// downscaled_flow mode.
  ForwardResult forward(const Variable& i0, const Variable& i1, FlowMode mode,
                        bool with_residual) const;

  FeatureExtractor& extractor() { return *extractor_; }
  FlowEstimator& flow() { return *flow_; }
  Refiner& refiner() { return *refiner_; }

  /// Parameter name prefixes of the two trainable groups.
  static constexpr const char* kExtractorPrefix = "extractor.";
  static constexpr const char* kFlowPrefix = "flow.";
  static constexpr const char* kRefinePrefix = "refine.";

 private:
  ModelConfig cfg_;
  nn::ParamStore store_;
  std::unique_ptr<FeatureExtractor> extractor_;
  std::unique_ptr<FlowEstimator> flow_;
  std::unique_ptr<Refiner> refiner_;
};

struct InterpolationResult {
  Tensor frame;  // clamped to [0, 1], cropped to the input size
  Tensor warp_state;  // W^0 packed (N, 5, H, W), cropped
  Tensor residual;    // empty when the refinement stage is skipped
  FlowMode mode = FlowMode::original_flow;
};

/// Inference on arbitrary-size frames: pads, runs without a tape, crops back.
InterpolationResult interpolate(const Tensor& i0, const Tensor& i1, const Model& model, FlowMode mode,
                                bool with_residual = true);

/// Elementwise clamp to [0, 1].
Tensor clamp01(const Tensor& t);

}  // namespace ladder

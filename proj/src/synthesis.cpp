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

#include "ladder/synthesis.hpp"

#include <algorithm>

#include "ladder/error.hpp"

namespace ladder {

std::string flow_mode_name(FlowMode mode) {
  return mode == FlowMode::original_flow ? "original_flow" : "downscaled_flow";
}

Variable compose(const Variable& i0, const Variable& i1, const WarpState& w0,
                 const Variable& residual) {
  require(i0.shape() == i1.shape() && i0.shape().same_spatial(w0.packed.shape()) &&
              i0.shape().n == w0.packed.shape().n,
          "compose: frames {} / {} inconsistent with warp state {}", i0.shape().str(),
          i1.shape().str(), w0.packed.shape().str());
  const Variable m = ops::sigmoid(w0.mask_logits());
  const Variable a = ops::mul_broadcast(backward_warp(i0, w0.flow_to_0()), m);
  const Variable b = ops::mul_broadcast(backward_warp(i1, w0.flow_to_1()), ops::affine(m, -1.0f, 1.0f));
  Variable out = ops::add(a, b);
  if (residual.defined()) {
    require(residual.shape() == i0.shape(), "compose: residual {} vs frame {}",
            residual.shape().str(), i0.shape().str());
    out = ops::add(out, residual);
  }
  return out;
}

Model::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  validate(cfg_);
  nn::Rng rng(seed);
  extractor_ = std::make_unique<FeatureExtractor>(cfg_, store_, rng, "extractor");
  flow_ = std::make_unique<FlowEstimator>(cfg_, store_, rng, "flow");
  refiner_ = build_refinement(cfg_, cfg_.refinement_levels, store_, rng, "refine");
}

ForwardResult Model::forward(const Variable& i0, const Variable& i1, FlowMode mode,
                             bool with_residual) const {
  require(i0.shape() == i1.shape(), "forward: frame shapes differ: {} vs {}", i0.shape().str(),
          i1.shape().str());
  const Shape s = i0.shape();
  const int multiple = mode == FlowMode::original_flow ? 32 : 64;
  require(s.h % multiple == 0 && s.w % multiple == 0,
          "forward: {}x{} must be a multiple of {} in {} mode", s.w, s.h, multiple,
          flow_mode_name(mode));

  ForwardResult out;
  const int levels = std::max(3, refiner_->image_levels());
  const ImagePyramid img0 = image_pyramid(i0, levels);
  const ImagePyramid img1 = image_pyramid(i1, levels);
  FeaturePyramid pyr0;
  FeaturePyramid pyr1;
  const bool need_native = mode == FlowMode::original_flow || with_residual;
  if (need_native) std::tie(pyr0, pyr1) = extractor_->extract(i0, i1);

  if (mode == FlowMode::original_flow) {
    FlowResult flow = flow_->estimate_flow(pyr0, pyr1, img0, img1);
    out.w0 = flow.w0;
    out.intermediates = std::move(flow.intermediates);
  } else {
    const ImagePyramid half0(img0.begin() + 1, img0.end());
    const ImagePyramid half1(img1.begin() + 1, img1.end());
    const ImagePyramid low0 = half0.size() >= 3 ? half0 : image_pyramid(img0[1], 3);
    const ImagePyramid low1 = half1.size() >= 3 ? half1 : image_pyramid(img1[1], 3);
    auto [lp0, lp1] = extractor_->extract(low0[0], low1[0]);
    FlowResult flow = flow_->estimate_flow(lp0, lp1, low0, low1);
    out.w0 = upsample_warp_state(flow.w0);
    out.intermediates = std::move(flow.intermediates);
  }
  if (with_residual) out.residual = (*refiner_)(pyr0, pyr1, img0, img1, out.w0);
  out.frame = compose(i0, i1, out.w0, out.residual);
  return out;
}

Tensor clamp01(const Tensor& t) {
  Tensor out = t;
  for (float& v : out.span()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

InterpolationResult interpolate(const Tensor& i0, const Tensor& i1, const Model& model, FlowMode mode,
                                bool with_residual) {
  require(i0.shape() == i1.shape(), "interpolate: frame shapes differ: {} vs {}", i0.shape().str(),
          i1.shape().str());
  require(i0.shape().c == 3, "interpolate: expected RGB frames, got {} channels", i0.shape().c);
  if (mode == FlowMode::downscaled_flow) {
    require(i0.shape().h / 2 >= 32 && i0.shape().w / 2 >= 32,
            "interpolate: {}x{} is below 32 pixels after 0.5x downscale", i0.shape().w / 2,
            i0.shape().h / 2);
  }
  const int multiple = mode == FlowMode::original_flow ? 32 : 64;
  auto [p0, rec] = pad_to_multiple(i0, multiple);
  auto [p1, rec1] = pad_to_multiple(i1, multiple);
  (void)rec1;
  NoGradGuard no_grad;
  const ForwardResult fwd = model.forward(Variable(p0), Variable(p1), mode, with_residual);
  InterpolationResult result;
  result.mode = mode;
  result.frame = clamp01(crop(fwd.frame.value(), rec));
  result.warp_state = crop(fwd.w0.packed.value(), rec);
  if (fwd.residual.defined()) result.residual = crop(fwd.residual.value(), rec);
  return result;
}

}  // namespace ladder

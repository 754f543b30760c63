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

#include "ladder/warping.hpp"

#include "ladder/error.hpp"
#include "ladder/ops.hpp"

namespace ladder {

WarpState WarpState::zeros(int batch, int height, int width) {
  return WarpState{Variable(Tensor(Shape{batch, kChannels, height, width}))};
}

WarpState WarpState::from_parts(const Variable& flow0, const Variable& flow1, const Variable& mask) {
  require(flow0.shape().c == 2 && flow1.shape().c == 2 && mask.shape().c == 1,
          "WarpState needs 2 + 2 + 1 channels");
  return WarpState{ops::concat_channels({flow0, flow1, mask})};
}

Variable WarpState::flow_to_0() const { return ops::slice_channels(packed, 0, 2); }
Variable WarpState::flow_to_1() const { return ops::slice_channels(packed, 2, 2); }
Variable WarpState::mask_logits() const { return ops::slice_channels(packed, 4, 1); }

Variable backward_warp(const Variable& source, const Variable& flow) {
  return ops::backward_warp(source, flow);
}

WarpState upsample_warp_state(const WarpState& w) {
  require(w.packed.shape().c == WarpState::kChannels, "warp state must have 5 channels");
  return WarpState{ops::channel_scale(ops::upsample2x(w.packed), {2, 2, 2, 2, 1})};
}

WarpState downsample_warp_state(const WarpState& w) {
  require(w.packed.shape().c == WarpState::kChannels, "warp state must have 5 channels");
  return WarpState{ops::channel_scale(ops::avg_pool2x(w.packed), {0.5f, 0.5f, 0.5f, 0.5f, 1})};
}

Variable downsample_image(const Variable& img, double factor) {
  require(factor == 0.5, "downsample_image: only factor 0.5 is supported (got {})", factor);
  const Shape s = img.shape();
  require(s.h >= 2 && s.w >= 2, "downsample_image: {} would shrink below 1 pixel", s.str());
  require(s.h % 2 == 0 && s.w % 2 == 0, "downsample_image: {} must have even dims", s.str());
  return ops::avg_pool2x(img);
}

}  // namespace ladder

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

#include "ladder/autograd.hpp"

namespace ladder {

/// {F_t->0, F_t->1, mask logits} packed as channels [0,1], [2,3], [4] of one
/// (N, 5, H, W) variable. Flows are (dx, dy) in pixels of this resolution.
struct WarpState {
  Variable packed;

  static constexpr int kChannels = 5;

  static WarpState zeros(int batch, int height, int width);
  static WarpState from_parts(const Variable& flow0, const Variable& flow1, const Variable& mask);

  Variable flow_to_0() const;
  Variable flow_to_1() const;
  Variable mask_logits() const;
  int height() const { return packed.shape().h; }
  int width() const { return packed.shape().w; }
};

/// Bilinear sample of source at x + flow(x), border replication.
Variable backward_warp(const Variable& source, const Variable& flow);

/// Doubles the spatial size and the flow values; mask logits are not scaled.
WarpState upsample_warp_state(const WarpState& w);

/// Inverse of upsample_warp_state: 2x2 area average and flow values halved.
WarpState downsample_warp_state(const WarpState& w);

/// Area downsample. Only factor 0.5 (one 2x2 average) is supported.
Variable downsample_image(const Variable& img, double factor = 0.5);

}  // namespace ladder

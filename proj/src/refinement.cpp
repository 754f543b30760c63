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

#include "ladder/refinement.hpp"

#include "ladder/error.hpp"

namespace ladder {

namespace {

constexpr int kImageChannels = 4 * 3;

// [warp(f0), warp(f1), I0, I1, warp(I0), warp(I1), W] at one level.
Variable level_inputs(const Variable& f0, const Variable& f1, const Variable& i0, const Variable& i1,
                      const WarpState& w) {
  require(f0.shape().same_spatial(w.packed.shape()) && i0.shape().same_spatial(f0.shape()),
          "refine: level tensors {} / {} do not match warp state {}x{}", f0.shape().str(),
          i0.shape().str(), w.width(), w.height());
  const Variable flow0 = w.flow_to_0();
  const Variable flow1 = w.flow_to_1();
  return ops::concat_channels({backward_warp(f0, flow0), backward_warp(f1, flow1), i0, i1,
                               backward_warp(i0, flow0), backward_warp(i1, flow1), w.packed});
}

}  // namespace

std::vector<WarpState> warp_state_pyramid(const WarpState& w0, int levels) {
  std::vector<WarpState> out{w0};
  for (int l = 1; l < levels; ++l) out.push_back(downsample_warp_state(out.back()));
  return out;
}

DecoderOnlyRefiner::DecoderOnlyRefiner(const ModelConfig& cfg, int levels, nn::ParamStore& store,
                                       nn::Rng& rng, const std::string& prefix)
    : levels_(levels) {
  require(levels >= 2 && levels <= 5, "build_refinement: levels must be in [2, 5] (got {})", levels);
  require(cfg.refinement_channels.size() == static_cast<std::size_t>(levels),
          "build_refinement: {} widths configured for {} levels", cfg.refinement_channels.size(),
          levels);
  int below = 0;
  for (int l = levels - 1; l >= 0; --l) {
    const int width = cfg.refinement_channels[levels - 1 - l];
    const int in = 2 * cfg.channels(l) + kImageChannels + WarpState::kChannels + below;
    const std::string name = fmt::format("{}.level{}", prefix, l);
    blocks_.push_back({nn::make_conv(store, name + ".fuse", in, width, 3, 1, rng),
                       nn::make_conv(store, name + ".res", width, width, 3, 1, rng)});
    below = width;
  }
  head_ = nn::make_conv(store, prefix + ".head", below, 3, 3, 1, rng, nn::Init::zero);
}

Variable DecoderOnlyRefiner::operator()(const FeaturePyramid& pyr0, const FeaturePyramid& pyr1,
                                        const ImagePyramid& img0, const ImagePyramid& img1,
                                        const WarpState& w0) const {
  require(img0.size() >= static_cast<std::size_t>(levels_) && img1.size() >= img0.size(),
          "refine: image pyramids need {} levels", levels_);
  const std::vector<WarpState> ws = warp_state_pyramid(w0, levels_);
  Variable o;
  for (int l = levels_ - 1, b = 0; l >= 0; --l, ++b) {
    Variable x = level_inputs(pyr0[l], pyr1[l], img0[l], img1[l], ws[l]);
    if (o.defined()) x = ops::concat_channels({x, ops::upsample2x(o)});
    x = ops::leaky_relu(blocks_[b].fuse(x));
    o = ops::leaky_relu(ops::add(x, blocks_[b].residual(x)));
  }
  return head_(o);
}

UNetRefiner::UNetRefiner(const ModelConfig& cfg, nn::ParamStore& store, nn::Rng& rng,
                         const std::string& prefix) {
  const int c = cfg.base_width;
  int prev = 2 * c;
  stem_ = nn::make_conv(store, prefix + ".stem",
                        2 * cfg.channels(0) + kImageChannels + WarpState::kChannels, prev, 3, 1, rng);
  std::vector<int> widths{prev};
  for (int s = 0; s < kStages; ++s) {
    const int w = 2 * c << (s + 1);
    const std::string name = fmt::format("{}.down{}", prefix, s);
    down_.emplace_back(nn::make_conv(store, name + ".conv0", prev, w, 3, 2, rng),
                       nn::make_conv(store, name + ".conv1", w, w, 3, 1, rng));
    widths.push_back(w);
    prev = w;
  }
  bottleneck_ = {nn::make_conv(store, prefix + ".mid.conv0", prev, prev, 3, 1, rng),
                 nn::make_conv(store, prefix + ".mid.conv1", prev, prev, 3, 1, rng)};
  for (int s = kStages - 1; s >= 0; --s) {
    const int skip = widths[s];
    const std::string name = fmt::format("{}.up{}", prefix, s);
    up_.emplace_back(nn::make_conv(store, name + ".conv0", prev + skip, skip, 3, 1, rng),
                     nn::make_conv(store, name + ".conv1", skip, skip, 3, 1, rng));
    prev = skip;
  }
  head_ = nn::make_conv(store, prefix + ".head", prev, 3, 3, 1, rng, nn::Init::zero);
}

Variable UNetRefiner::operator()(const FeaturePyramid& pyr0, const FeaturePyramid& pyr1,
                                 const ImagePyramid& img0, const ImagePyramid& img1,
                                 const WarpState& w0) const {
  Variable x = ops::leaky_relu(stem_(level_inputs(pyr0[0], pyr1[0], img0[0], img1[0], w0)));
  std::vector<Variable> skips{x};
  for (const auto& [a, b] : down_) {
    x = ops::leaky_relu(b(ops::leaky_relu(a(x))));
    skips.push_back(x);
  }
  x = ops::leaky_relu(bottleneck_.second(ops::leaky_relu(bottleneck_.first(x))));
  for (int s = kStages - 1, i = 0; s >= 0; --s, ++i) {
    x = ops::concat_channels({ops::upsample2x(x), skips[s]});
    x = ops::leaky_relu(up_[i].second(ops::leaky_relu(up_[i].first(x))));
  }
  return head_(x);
}

std::unique_ptr<Refiner> build_refinement(const ModelConfig& cfg, int levels, nn::ParamStore& store,
                                          nn::Rng& rng, const std::string& prefix) {
  if (cfg.refiner == RefinerKind::unet) return std::make_unique<UNetRefiner>(cfg, store, rng, prefix);
  ModelConfig c = cfg;
  if (c.refinement_levels != levels) apply_refinement_levels(c, levels);
  return std::make_unique<DecoderOnlyRefiner>(c, levels, store, rng, prefix);
}

}  // namespace ladder

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

#include "ladder/flow_estimator.hpp"

#include "ladder/error.hpp"

namespace ladder {

void validate(const DecoderBlockSpec& spec) {
  require(spec.layer_count >= 1, "decoder block: layer_count must be >= 1");
  require(spec.kernel % 2 == 1, "decoder block: kernel {} must be odd", spec.kernel);
  require(spec.kind != DecoderKind::dw_separable || spec.kernel >= 3,
          "decoder block: dw_separable needs kernel >= 3");
  require(spec.in_channels > 0 && spec.out_channels > 0, "decoder block: channels must be positive");
}

ImagePyramid image_pyramid(const Variable& img, int levels) {
  ImagePyramid pyr{img};
  for (int l = 1; l < levels; ++l) pyr.push_back(downsample_image(pyr.back()));
  return pyr;
}

LowResDecoder::LowResDecoder(const ModelConfig& cfg, nn::ParamStore& store, nn::Rng& rng,
                             const std::string& name) {
  const int in = 2 * cfg.channels(4) + 2 * cfg.channels(3);
  const int width = 2 * cfg.base_width;
  body_.push_back(nn::make_conv(store, name + ".conv0", in, width, 3, 1, rng));
  body_.push_back(nn::make_conv(store, name + ".conv1", width, width, 3, 1, rng));
  body_.push_back(nn::make_conv(store, name + ".conv2", width, width, 3, 1, rng));
  head_ = nn::make_conv(store, name + ".head", width, WarpState::kChannels, 3, 1, rng, nn::Init::zero);
}

WarpState LowResDecoder::operator()(const Variable& f0_4, const Variable& f0_3,
                                    const Variable& f1_4, const Variable& f1_3) const {
  require(f0_4.shape() == f1_4.shape() && f0_3.shape() == f1_3.shape(),
          "estimate_initial: frame features differ in shape");
  require(f0_4.shape().h * 2 == f0_3.shape().h && f0_4.shape().w * 2 == f0_3.shape().w,
          "estimate_initial: level-4 features {} are not half of level-3 {}", f0_4.shape().str(),
          f0_3.shape().str());
  Variable x = ops::concat_channels({ops::upsample2x(f0_4), ops::upsample2x(f1_4), f0_3, f1_3});
  for (const auto& conv : body_) x = ops::leaky_relu(conv(x));
  return upsample_warp_state(WarpState{head_(x)});
}

HighResDecoder::HighResDecoder(const ModelConfig& cfg, int level, nn::ParamStore& store,
                               nn::Rng& rng, const std::string& name)
    : level_(level) {
  const int ch = cfg.channels(level);
  spec_ = DecoderBlockSpec{cfg.highres_kind, cfg.highres_kernels[2 - level],
                           2 * ch + 4 * 3 + WarpState::kChannels, ch, cfg.highres_units};
  validate(spec_);
  fuse_ = nn::make_conv(store, name + ".fuse", spec_.in_channels, ch, 3, 1, rng);
  for (int u = 0; u < spec_.layer_count; ++u) {
    const std::string unit = fmt::format("{}.unit{}", name, u);
    if (spec_.kind == DecoderKind::dw_separable) {
      depthwise_.push_back(nn::make_depthwise(store, unit + ".dw", ch, spec_.kernel, rng));
      mix_.push_back(nn::make_conv(store, unit + ".pw", ch, ch, 1, 1, rng));
    } else {
      mix_.push_back(nn::make_conv(store, unit + ".conv", ch, ch, spec_.kernel, 1, rng));
    }
  }
  head_ = nn::make_conv(store, name + ".head", ch, WarpState::kChannels, 3, 1, rng, nn::Init::zero);
}

WarpState HighResDecoder::operator()(const Variable& f0, const Variable& f1, const Variable& i0,
                                     const Variable& i1, const WarpState& w_next) const {
  require(f0.shape().same_spatial(w_next.packed.shape()) && i0.shape().same_spatial(f0.shape()),
          "refine_level {}: warp state {}x{} does not match level resolution {}x{}", level_,
          w_next.width(), w_next.height(), f0.shape().w, f0.shape().h);
  const Variable flow0 = w_next.flow_to_0();
  const Variable flow1 = w_next.flow_to_1();
  Variable x = ops::concat_channels({backward_warp(f0, flow0), backward_warp(f1, flow1), i0, i1,
                                     backward_warp(i0, flow0), backward_warp(i1, flow1),
                                     w_next.packed});
  x = ops::leaky_relu(fuse_(x));
  for (std::size_t u = 0; u < mix_.size(); ++u) {
    if (spec_.kind == DecoderKind::dw_separable) x = ops::leaky_relu(depthwise_[u](x));
    x = ops::leaky_relu(mix_[u](x));
  }
  WarpState w{ops::add(w_next.packed, head_(x))};
  return level_ > 0 ? upsample_warp_state(w) : w;
}

FlowEstimator::FlowEstimator(const ModelConfig& cfg, nn::ParamStore& store, nn::Rng& rng,
                             const std::string& prefix)
    : low_(cfg, store, rng, prefix + ".low") {
  for (int l = 2; l >= 0; --l) high_.emplace_back(cfg, l, store, rng, fmt::format("{}.high{}", prefix, l));
}

WarpState FlowEstimator::estimate_initial(const Variable& f0_4, const Variable& f0_3,
                                          const Variable& f1_4, const Variable& f1_3) const {
  return low_(f0_4, f0_3, f1_4, f1_3);
}

WarpState FlowEstimator::refine_level(int level, const Variable& f0, const Variable& f1,
                                      const Variable& i0, const Variable& i1,
                                      const WarpState& w_next) const {
  require(level >= 0 && level <= 2, "refine_level: level {} not in {{2, 1, 0}}", level);
  return high_[2 - level](f0, f1, i0, i1, w_next);
}

FlowResult FlowEstimator::estimate_flow(const FeaturePyramid& pyr0, const FeaturePyramid& pyr1,
                                        const ImagePyramid& img0, const ImagePyramid& img1) const {
  require(img0.size() >= 3 && img1.size() >= 3, "estimate_flow: image pyramids need 3 levels");
  FlowResult result;
  WarpState w = estimate_initial(pyr0[4], pyr0[3], pyr1[4], pyr1[3]);
  for (int l = 2; l >= 0; --l) {
    result.intermediates.push_back(w);
    w = refine_level(l, pyr0[l], pyr1[l], img0[l], img1[l], w);
  }
  result.w0 = w;
  return result;
}

}  // namespace ladder

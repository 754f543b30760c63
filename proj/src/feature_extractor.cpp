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

#include "ladder/feature_extractor.hpp"

#include <algorithm>

#include "ladder/error.hpp"

namespace ladder {

std::pair<Tensor, CropRecord> pad_to_multiple(const Tensor& img, int multiple) {
  require(multiple >= 1, "pad_to_multiple: multiple must be >= 1 (got {})", multiple);
  const Shape s = img.shape();
  CropRecord rec{s.h, s.w, (multiple - s.h % multiple) % multiple,
                 (multiple - s.w % multiple) % multiple};
  if (rec.empty()) return {img, rec};
  const Shape ps{s.n, s.c, s.h + rec.pad_bottom, s.w + rec.pad_right};
  Tensor out(ps);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < ps.h; ++y) {
        const int sy = std::min(y, s.h - 1);
        for (int x = 0; x < ps.w; ++x) out.at(n, c, y, x) = img.at(n, c, sy, std::min(x, s.w - 1));
      }
    }
  }
  return {std::move(out), rec};
}

Tensor crop(const Tensor& img, const CropRecord& record) {
  const Shape s = img.shape();
  if (s.h == record.height && s.w == record.width) return img;
  require(s.h >= record.height && s.w >= record.width, "crop: {} smaller than record {}x{}",
          s.str(), record.height, record.width);
  Tensor out(Shape{s.n, s.c, record.height, record.width});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < record.height; ++y) {
        const float* src = img.plane(n, c) + static_cast<std::size_t>(y) * s.w;
        std::copy(src, src + record.width, out.plane(n, c) + static_cast<std::size_t>(y) * record.width);
      }
    }
  }
  return out;
}

AttentionBlock::AttentionBlock(nn::ParamStore& store, const std::string& name, int dim, int heads,
                               int window, nn::Rng& rng)
    : heads_(heads), window_(window) {
  norm1_ = nn::make_layer_norm(store, name + ".norm1", dim);
  q_ = nn::make_conv(store, name + ".q", dim, dim, 1, 1, rng);
  k_ = nn::make_conv(store, name + ".k", dim, dim, 1, 1, rng);
  v_ = nn::make_conv(store, name + ".v", dim, dim, 1, 1, rng);
  proj_ = nn::make_conv(store, name + ".proj", dim, dim, 1, 1, rng);
  norm2_ = nn::make_layer_norm(store, name + ".norm2", dim);
  fc1_ = nn::make_conv(store, name + ".fc1", dim, 4 * dim, 1, 1, rng);
  fc2_ = nn::make_conv(store, name + ".fc2", 4 * dim, dim, 1, 1, rng);
}

Variable AttentionBlock::operator()(const Variable& x) const {
  const Variable y = norm1_(x);
  const Variable a = ops::window_cross_attention(q_(y), k_(y), v_(y), heads_, window_);
  const Variable h = ops::add(x, proj_(a));
  return ops::add(h, fc2_(ops::gelu(fc1_(norm2_(h)))));
}

FeatureExtractor::FeatureExtractor(const ModelConfig& cfg, nn::ParamStore& store, nn::Rng& rng,
                                   const std::string& prefix) {
  int cin = 3;
  for (int l = 0; l < 3; ++l) {
    const std::string name = fmt::format("{}.level{}", prefix, l);
    const int c = cfg.channels(l);
    conv_levels_.push_back({nn::make_conv(store, name + ".conv0", cin, c, 3, l == 0 ? 1 : 2, rng),
                            nn::make_conv(store, name + ".conv1", c, c, 3, 1, rng)});
    cin = c;
  }
  for (int l = 3; l < 5; ++l) {
    const std::string name = fmt::format("{}.level{}", prefix, l);
    const int c = cfg.channels(l);
    attn_stems_.push_back(nn::make_conv(store, name + ".stem", cin, c, 3, 2, rng));
    std::vector<AttentionBlock> blocks;
    for (int b = 0; b < cfg.attention_blocks; ++b) {
      blocks.emplace_back(store, fmt::format("{}.block{}", name, b), c, cfg.attention_heads(l),
                          cfg.attention_window, rng);
    }
    attn_levels_.push_back(std::move(blocks));
    cin = c;
  }
}

FeaturePyramid FeatureExtractor::forward_stacked(const Variable& frames) const {
  const Shape s = frames.shape();
  require(s.c == 3, "extract: expected RGB input, got {} channels", s.c);
  require(s.h % 32 == 0 && s.w % 32 == 0,
          "extract: input {}x{} must be a multiple of 32 in both dims; pad with pad_to_multiple",
          s.w, s.h);
  FeaturePyramid pyr;
  Variable x = frames;
  for (int l = 0; l < 3; ++l) {
    x = ops::leaky_relu(conv_levels_[l].first(x));
    x = ops::leaky_relu(conv_levels_[l].second(x));
    pyr[l] = x;
  }
  for (int i = 0; i < 2; ++i) {
    x = ops::leaky_relu(attn_stems_[i](x));
    for (const auto& block : attn_levels_[i]) x = block(x);
    pyr[3 + i] = x;
  }
  return pyr;
}

std::pair<FeaturePyramid, FeaturePyramid> split_pyramid(const FeaturePyramid& stacked) {
  FeaturePyramid a;
  FeaturePyramid b;
  const int n = stacked[0].shape().n / 2;
  for (int l = 0; l < 5; ++l) {
    a[l] = ops::slice_batch(stacked[l], 0, n);
    b[l] = ops::slice_batch(stacked[l], n, n);
  }
  return {a, b};
}

std::pair<FeaturePyramid, FeaturePyramid> FeatureExtractor::extract(const Variable& i0,
                                                                    const Variable& i1) const {
  require(i0.shape() == i1.shape(), "extract: frame shapes differ: {} vs {}", i0.shape().str(),
          i1.shape().str());
  return split_pyramid(forward_stacked(ops::concat_batch({i0, i1})));
}

}  // namespace ladder

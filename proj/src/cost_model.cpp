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

#include "ladder/cost_model.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "ladder/error.hpp"

namespace ladder {

std::uint64_t conv_params(int k, int cin, int cout, bool bias) {
  return std::uint64_t(k) * k * cin * cout + (bias ? cout : 0);
}

std::uint64_t conv_flops(int k, int cin, int cout, int out_h, int out_w, int groups) {
  return std::uint64_t{2} * k * k * (cin / groups) * cout * out_h * out_w;
}

std::uint64_t dsconv_flops(int k, int ch, int h, int w) {
  return conv_flops(k, ch, ch, h, w, ch) + conv_flops(1, ch, ch, h, w);
}

std::uint64_t attention_flops(int dim, int h, int w, int window) {
  std::uint64_t total = 0;
  for (int y = 0; y < h; y += window) {
    for (int x = 0; x < w; x += window) {
      const std::uint64_t t = std::uint64_t(std::min(window, h - y)) * std::min(window, w - x);
      total += 2 * t * (2 * t) * dim * 2;
    }
  }
  return total;
}

namespace {

class Tally {
 public:
  explicit Tally(CostReport& r) : r_(r) {}
  void conv(const std::string& part, int k, int cin, int cout, int out_h, int out_w, int items = 1) {
    add(part, conv_params(k, cin, cout), items * conv_flops(k, cin, cout, out_h, out_w));
  }
  void depthwise(const std::string& part, int k, int ch, int h, int w) {
    add(part, std::uint64_t(k) * k * ch + ch, conv_flops(k, ch, ch, h, w, ch));
  }
  void add(const std::string& part, std::uint64_t params, std::uint64_t flops) {
    auto& e = r_.breakdown[part];
    e.params += params;
    e.flops += flops;
    r_.params += params;
    r_.flops += flops;
  }

 private:
  CostReport& r_;
};

void tally_extractor(Tally& t, const ModelConfig& cfg, int h, int w) {
  const std::string part = "extractor";
  constexpr int frames = 2;
  int cin = 3;
  for (int l = 0; l < 5; ++l) {
    const int c = cfg.channels(l);
    const int lh = h >> l;
    const int lw = w >> l;
    t.conv(part, 3, cin, c, lh, lw, frames);
    if (l < 3) {
      t.conv(part, 3, c, c, lh, lw, frames);
    } else {
      for (int b = 0; b < cfg.attention_blocks; ++b) {
        t.add(part, 4 * std::uint64_t(c), 0);  // two layer norms
        for (int i = 0; i < 4; ++i) t.conv(part, 1, c, c, lh, lw, frames);
        t.conv(part, 1, c, 4 * c, lh, lw, frames);
        t.conv(part, 1, 4 * c, c, lh, lw, frames);
        t.add(part, 0, frames * attention_flops(c, lh, lw, cfg.attention_window));
      }
    }
    cin = c;
  }
}

void tally_flow(Tally& t, const ModelConfig& cfg, int h, int w) {
  const std::string part = "flow_estimator";
  const int width = 2 * cfg.base_width;
  const int h3 = h >> 3;
  const int w3 = w >> 3;
  t.conv(part, 3, 2 * cfg.channels(4) + 2 * cfg.channels(3), width, h3, w3);
  t.conv(part, 3, width, width, h3, w3);
  t.conv(part, 3, width, width, h3, w3);
  t.conv(part, 3, width, 5, h3, w3);
  for (int l = 2; l >= 0; --l) {
    const int ch = cfg.channels(l);
    const int k = cfg.highres_kernels[2 - l];
    const int lh = h >> l;
    const int lw = w >> l;
    t.conv(part, 3, 2 * ch + 17, ch, lh, lw);
    for (int u = 0; u < cfg.highres_units; ++u) {
      if (cfg.highres_kind == DecoderKind::dw_separable) {
        t.depthwise(part, k, ch, lh, lw);
        t.conv(part, 1, ch, ch, lh, lw);
      } else {
        t.conv(part, k, ch, ch, lh, lw);
      }
    }
    t.conv(part, 3, ch, 5, lh, lw);
  }
}

void tally_refinement(Tally& t, const ModelConfig& cfg, int h, int w) {
  const std::string part = "refinement";
  if (cfg.refiner == RefinerKind::unet) {
    const int c = cfg.base_width;
    int prev = 2 * c;
    t.conv(part, 3, 2 * cfg.channels(0) + 17, prev, h, w);
    std::vector<int> widths{prev};
    for (int s = 0; s < 4; ++s) {
      const int wd = 2 * c << (s + 1);
      t.conv(part, 3, prev, wd, h >> (s + 1), w >> (s + 1));
      t.conv(part, 3, wd, wd, h >> (s + 1), w >> (s + 1));
      widths.push_back(wd);
      prev = wd;
    }
    t.conv(part, 3, prev, prev, h >> 4, w >> 4);
    t.conv(part, 3, prev, prev, h >> 4, w >> 4);
    for (int s = 3; s >= 0; --s) {
      const int skip = widths[s];
      t.conv(part, 3, prev + skip, skip, h >> s, w >> s);
      t.conv(part, 3, skip, skip, h >> s, w >> s);
      prev = skip;
    }
    t.conv(part, 3, prev, 3, h, w);
    return;
  }
  int below = 0;
  for (int l = cfg.refinement_levels - 1; l >= 0; --l) {
    const int width = cfg.refinement_width(l);
    const int in = 2 * cfg.channels(l) + 17 + below;
    t.conv(part, 3, in, width, h >> l, w >> l);
    t.conv(part, 3, width, width, h >> l, w >> l);
    below = width;
  }
  t.conv(part, 3, below, 3, h, w);
}

CostReport enumerate(const ModelConfig& cfg, int h, int w) {
  validate(cfg);
  CostReport r;
  r.height = h;
  r.width = w;
  Tally t(r);
  tally_extractor(t, cfg, h, w);
  tally_flow(t, cfg, h, w);
  tally_refinement(t, cfg, h, w);
  return r;
}

}  // namespace

CostReport count_params(const ModelConfig& cfg) {
  CostReport r = enumerate(cfg, 32, 32);
  r.height = 0;
  r.width = 0;
  r.flops = 0;
  for (auto& [name, e] : r.breakdown) e.flops = 0;
  return r;
}

CostReport count_flops(const ModelConfig& cfg, int height, int width) {
  require(height >= 32 && width >= 32 && height % 32 == 0 && width % 32 == 0,
          "count_flops: resolution {}x{} must be a positive multiple of 32", width, height);
  return enumerate(cfg, height, width);
}

std::vector<CostReport> decoder_ablation(const ModelConfig& base, int height, int width) {
  struct Variant {
    const char* label;
    DecoderKind kind;
    std::array<int, 3> k;
  };
  const Variant variants[] = {{"DSConv k=[5,5,5]", DecoderKind::dw_separable, {5, 5, 5}},
                              {"DSConv k=[7,7,7]", DecoderKind::dw_separable, {7, 7, 7}},
                              {"DSConv k=[7,15,15]", DecoderKind::dw_separable, {7, 15, 15}},
                              {"Conv k=[3,3,3]", DecoderKind::normal_conv, {3, 3, 3}}};
  std::vector<CostReport> rows;
  for (const auto& v : variants) {
    ModelConfig cfg = base;
    cfg.highres_kind = v.kind;
    cfg.highres_kernels = v.k;
    rows.push_back(count_flops(cfg, height, width));
    rows.back().label = v.label;
  }
  return rows;
}

std::vector<CostReport> refinement_ablation(const ModelConfig& base, int height, int width) {
  std::vector<CostReport> rows;
  for (int levels = 2; levels <= 5; ++levels) {
    ModelConfig cfg = base;
    cfg.refiner = RefinerKind::decoder_only;
    apply_refinement_levels(cfg, levels);
    rows.push_back(count_flops(cfg, height, width));
    rows.back().label = fmt::format("{}L decoder-only", levels);
  }
  ModelConfig cfg = base;
  cfg.refiner = RefinerKind::unet;
  rows.push_back(count_flops(cfg, height, width));
  rows.back().label = "UNet";
  return rows;
}

std::string CostReport::table() const {
  std::string out;
  if (!label.empty()) out += label + "\n";
  if (height > 0) out += fmt::format("resolution  {}x{}\n", width, height);
  out += fmt::format("{:<16} {:>14} {:>18}\n", "module", "params (M)", "FLOPs (G)");
  for (const auto& [name, e] : breakdown) {
    out += fmt::format("{:<16} {:>14.4f} {:>18.3f}\n", name, e.params / 1e6, e.flops / 1e9);
  }
  out += fmt::format("{:<16} {:>14.4f} {:>18.3f}\n", "total", params / 1e6, flops / 1e9);
  out += fmt::format("total FLOPs   {:.4f} T\n", flops / 1e12);
  return out;
}

std::string CostReport::json() const {
  nlohmann::json j;
  if (!label.empty()) j["label"] = label;
  j["height"] = height;
  j["width"] = width;
  j["params"] = params;
  j["flops"] = flops;
  for (const auto& [name, e] : breakdown) j["breakdown"][name] = {{"params", e.params}, {"flops", e.flops}};
  return j.dump();
}

std::string ablation_table(const std::vector<CostReport>& rows) {
  std::string out = fmt::format("{:<22} {:>12} {:>12}\n", "config", "params (M)", "FLOPs (T)");
  for (const auto& r : rows) {
    out += fmt::format("{:<22} {:>12.3f} {:>12.4f}\n", r.label, r.params / 1e6, r.flops / 1e12);
  }
  return out;
}

}  // namespace ladder

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

#include "ladder/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ladder/error.hpp"

namespace ladder {

int ModelConfig::attention_heads(int level) const {
  return std::max(1, channels(level) / attention_head_dim);
}

void apply_base_width(ModelConfig& cfg, int base_width) {
  cfg.base_width = base_width;
  cfg.level_channels.clear();
  for (int l = 0; l < 5; ++l) cfg.level_channels.push_back(base_width << l);
  apply_refinement_levels(cfg, cfg.refinement_levels);
}

void apply_refinement_levels(ModelConfig& cfg, int levels) {
  cfg.refinement_levels = levels;
  cfg.refinement_channels.clear();
  for (int l = levels - 1; l >= 0; --l) cfg.refinement_channels.push_back(cfg.base_width << (l + 1));
}

ModelConfig small_config() {
  ModelConfig cfg;
  apply_base_width(cfg, 16);
  cfg.attention_blocks = 2;
  return cfg;
}

ModelConfig large_config() {
  ModelConfig cfg;
  apply_base_width(cfg, 32);
  cfg.attention_blocks = 4;
  return cfg;
}

void validate(const ModelConfig& cfg) {
  require(cfg.base_width > 0, "invalid model config: base width must be positive (got {})",
          cfg.base_width);
  require(cfg.level_channels.size() == 5, "invalid model config: expected 5 level channels, got {}",
          cfg.level_channels.size());
  for (int l = 0; l < 5; ++l) {
    require(cfg.level_channels[l] == (cfg.base_width << l),
            "invalid model config: level_channels must be [C, 2C, 4C, 8C, 16C]; level {} has {}, "
            "expected {}",
            l, cfg.level_channels[l], cfg.base_width << l);
  }
  require(cfg.attention_blocks >= 1, "invalid model config: attention_blocks must be positive");
  for (int k : cfg.highres_kernels) {
    require(k % 2 == 1 && k >= 3, "invalid model config: kernels must be odd and >= 3 (got {})", k);
  }
  require(cfg.highres_units >= 1, "invalid model config: highres_units must be positive");
  require(cfg.refinement_levels >= 2 && cfg.refinement_levels <= 5,
          "invalid model config: refinement_levels must be in [2, 5] (got {})",
          cfg.refinement_levels);
  require(cfg.refinement_channels.size() == static_cast<std::size_t>(cfg.refinement_levels),
          "invalid model config: refinement_channels has {} entries for {} levels",
          cfg.refinement_channels.size(), cfg.refinement_levels);
  for (int c : cfg.refinement_channels) {
    require(c > 0, "invalid model config: refinement channel widths must be positive");
  }
  require(cfg.attention_window >= 1, "invalid model config: attention_window must be positive");
  require(cfg.attention_head_dim >= 1, "invalid model config: attention_head_dim must be positive");
  for (int l = 3; l < 5; ++l) {
    require(cfg.channels(l) % cfg.attention_heads(l) == 0,
            "invalid model config: level {} width {} not divisible into {} heads", l,
            cfg.channels(l), cfg.attention_heads(l));
  }
  require(cfg.timestep == 0.5, "invalid model config: only timestep 0.5 is supported");
}

std::string stage_name(TrainStage stage) {
  switch (stage) {
    case TrainStage::flow_only:
      return "flow_only";
    case TrainStage::full:
      return "full";
    case TrainStage::hd_finetune:
      return "hd_finetune";
  }
  return "unknown";
}

TrainStage parse_stage(const std::string& text) {
  if (text == "flow_only" || text == "1") return TrainStage::flow_only;
  if (text == "full" || text == "2") return TrainStage::full;
  if (text == "hd_finetune" || text == "hd") return TrainStage::hd_finetune;
  fail("unknown training stage '{}' (expected flow_only|full|hd_finetune or 1|2|hd)", text);
}

void validate(const TrainConfig& cfg) {
  require(cfg.batch_size >= 1, "invalid train config: batch_size must be positive");
  require(cfg.lr_start > 0 && cfg.lr_end > 0, "invalid train config: learning rates must be positive");
  require(cfg.lr_end < cfg.lr_start, "invalid train config: lr_end ({}) must be below lr_start ({})",
          cfg.lr_end, cfg.lr_start);
  require(cfg.weight_decay > 0, "invalid train config: weight_decay must be positive");
  require(cfg.beta1 > 0 && cfg.beta1 < 1 && cfg.beta2 > 0 && cfg.beta2 < 1,
          "invalid train config: betas must lie in (0, 1)");
  require(cfg.grad_clip > 0, "invalid train config: grad_clip must be positive");
  require(cfg.crop_size >= 32 && cfg.crop_size % 32 == 0,
          "invalid train config: crop_size {} must be a positive multiple of 32", cfg.crop_size);
  require(cfg.hd_aug_probability >= 0 && cfg.hd_aug_probability <= 1,
          "invalid train config: hd_aug_probability must lie in [0, 1]");
  require(cfg.hd_downscale == 0.5, "invalid train config: only hd_downscale 0.5 is supported");
  require(cfg.epochs >= 1 || cfg.steps >= 1, "invalid train config: need epochs or steps");
  require(cfg.steps >= 0 && cfg.epochs >= 0, "invalid train config: negative duration");
  require(cfg.log_every >= 1, "invalid train config: log_every must be positive");
  require(cfg.scale_min >= 1.0 && cfg.scale_max >= cfg.scale_min,
          "invalid train config: scale range must satisfy 1 <= scale_min <= scale_max");
  require(cfg.rotation_degrees >= 0 && cfg.rotation_degrees <= 180,
          "invalid train config: rotation_degrees must lie in [0, 180]");
}

void validate(const LossWeights& w) {
  require(w.lambda_ch >= 0 && w.lambda_lap >= 0 && w.lambda_f >= 0,
          "invalid loss weights: weights must be nonnegative");
  require(w.lambda_ch > 0 || w.lambda_lap > 0 || w.lambda_f > 0,
          "invalid loss weights: at least one weight must be positive");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line;
};

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::string origin)
      : entries_(std::move(entries)), origin_(std::move(origin)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  template <typename T>
  void read(const std::string& key, T& out) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    out = parse<T>(key, it->second);
    used_.push_back(key);
  }

  void done() {
    for (const auto& [key, entry] : entries_) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        fail("{}:{}: unknown config key '{}'", origin_, entry.line, key);
      }
    }
  }

 private:
  template <typename T>
  T parse(const std::string& key, const Entry& e) {
    const std::string& v = e.value;
    auto bad = [&](const char* what) -> Error {
      return Error(fmt::format("{}:{}: '{}' expects {}, got '{}'", origin_, e.line, key, what, v));
    };
    if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw bad("true|false");
    } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
      T x{};
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc() || ptr != v.data() + v.size()) throw bad("an integer");
      return x;
    } else if constexpr (std::is_same_v<T, double>) {
      std::size_t pos = 0;
      double x = 0;
      try {
        x = std::stod(v, &pos);
      } catch (const std::exception&) {
        throw bad("a number");
      }
      if (pos != v.size()) throw bad("a number");
      return x;
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      std::vector<int> out;
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        int x = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
          throw bad("a comma-separated integer list");
        }
        out.push_back(x);
      }
      return out;
    } else if constexpr (std::is_same_v<T, DecoderKind>) {
      if (v == "dw_separable") return DecoderKind::dw_separable;
      if (v == "normal_conv") return DecoderKind::normal_conv;
      throw bad("dw_separable|normal_conv");
    } else if constexpr (std::is_same_v<T, RefinerKind>) {
      if (v == "decoder_only") return RefinerKind::decoder_only;
      if (v == "unet") return RefinerKind::unet;
      throw bad("decoder_only|unet");
    } else if constexpr (std::is_same_v<T, TrainStage>) {
      try {
        return parse_stage(v);
      } catch (const Error&) {
        throw bad("flow_only|full|hd_finetune");
      }
    }
  }

  std::map<std::string, Entry> entries_;
  std::string origin_;
  std::vector<std::string> used_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  std::map<std::string, Entry> entries;
  std::stringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("{}:{}: expected 'key = value'", origin, line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail("{}:{}: expected 'key = value'", origin, line_no);
    if (!entries.emplace(key, Entry{value, line_no}).second) {
      fail("{}:{}: duplicate config key '{}'", origin, line_no, key);
    }
  }

  Reader r(std::move(entries), origin);
  require(r.has("format_version"), "{}: missing format_version", origin);
  int version = 0;
  r.read("format_version", version);
  require(version == kConfigFormatVersion, "{}: unsupported format_version {} (expected {})", origin,
          version, kConfigFormatVersion);

  ExperimentConfig cfg;
  ModelConfig& m = cfg.model;
  int base_width = m.base_width;
  int levels = m.refinement_levels;
  r.read("model.base_width", base_width);
  r.read("model.refinement_levels", levels);
  m.refinement_levels = levels;
  apply_base_width(m, base_width);
  r.read("model.level_channels", m.level_channels);
  r.read("model.refinement_channels", m.refinement_channels);
  r.read("model.attention_blocks", m.attention_blocks);
  std::vector<int> kernels(m.highres_kernels.begin(), m.highres_kernels.end());
  r.read("model.highres_kernels", kernels);
  require(kernels.size() == 3, "{}: model.highres_kernels needs 3 entries (l = 2, 1, 0), got {}",
          origin, kernels.size());
  std::copy(kernels.begin(), kernels.end(), m.highres_kernels.begin());
  r.read("model.highres_kind", m.highres_kind);
  r.read("model.highres_units", m.highres_units);
  r.read("model.refiner", m.refiner);
  r.read("model.attention_window", m.attention_window);
  r.read("model.attention_head_dim", m.attention_head_dim);
  r.read("model.timestep", m.timestep);

  TrainConfig& t = cfg.train;
  r.read("train.batch_size", t.batch_size);
  r.read("train.lr_start", t.lr_start);
  r.read("train.lr_end", t.lr_end);
  r.read("train.weight_decay", t.weight_decay);
  r.read("train.beta1", t.beta1);
  r.read("train.beta2", t.beta2);
  r.read("train.grad_clip", t.grad_clip);
  r.read("train.crop_size", t.crop_size);
  r.read("train.stage", t.stage);
  r.read("train.hd_aug_probability", t.hd_aug_probability);
  r.read("train.hd_downscale", t.hd_downscale);
  r.read("train.epochs", t.epochs);
  r.read("train.steps", t.steps);
  r.read("train.seed", t.seed);
  r.read("train.aux_supervision", t.aux_supervision);
  r.read("train.log_every", t.log_every);
  r.read("train.flip_horizontal", t.flip_horizontal);
  r.read("train.flip_vertical", t.flip_vertical);
  r.read("train.temporal_reverse", t.temporal_reverse);
  r.read("train.scale_min", t.scale_min);
  r.read("train.scale_max", t.scale_max);
  r.read("train.rotation_degrees", t.rotation_degrees);

  r.read("loss.lambda_ch", cfg.loss.lambda_ch);
  r.read("loss.lambda_lap", cfg.loss.lambda_lap);
  r.read("loss.lambda_f", cfg.loss.lambda_f);
  r.done();

  validate(cfg.model);
  validate(cfg.train);
  validate(cfg.loss);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open config file '{}'", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

namespace {

const char* kind_name(DecoderKind k) {
  return k == DecoderKind::dw_separable ? "dw_separable" : "normal_conv";
}
const char* kind_name(RefinerKind k) { return k == RefinerKind::decoder_only ? "decoder_only" : "unet"; }

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  const ModelConfig& m = cfg.model;
  const TrainConfig& t = cfg.train;
  std::string out;
  auto line = [&out](std::string_view key, auto&& value) {
    out += fmt::format("{} = {}\n", key, std::forward<decltype(value)>(value));
  };
  // Round-trip formatting for doubles.
  auto real = [&out](std::string_view key, double value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  line("format_version", kConfigFormatVersion);
  out += "\n# model\n";
  line("model.base_width", m.base_width);
  line("model.level_channels", fmt::join(m.level_channels, ", "));
  line("model.attention_blocks", m.attention_blocks);
  line("model.highres_kernels", fmt::join(m.highres_kernels, ", "));
  line("model.highres_kind", kind_name(m.highres_kind));
  line("model.highres_units", m.highres_units);
  line("model.refiner", kind_name(m.refiner));
  line("model.refinement_levels", m.refinement_levels);
  line("model.refinement_channels", fmt::join(m.refinement_channels, ", "));
  line("model.attention_window", m.attention_window);
  line("model.attention_head_dim", m.attention_head_dim);
  real("model.timestep", m.timestep);
  out += "\n# training\n";
  line("train.batch_size", t.batch_size);
  real("train.lr_start", t.lr_start);
  real("train.lr_end", t.lr_end);
  real("train.weight_decay", t.weight_decay);
  real("train.beta1", t.beta1);
  real("train.beta2", t.beta2);
  real("train.grad_clip", t.grad_clip);
  line("train.crop_size", t.crop_size);
  line("train.stage", stage_name(t.stage));
  real("train.hd_aug_probability", t.hd_aug_probability);
  real("train.hd_downscale", t.hd_downscale);
  line("train.epochs", t.epochs);
  line("train.steps", t.steps);
  line("train.seed", t.seed);
  line("train.aux_supervision", t.aux_supervision ? "true" : "false");
  line("train.log_every", t.log_every);
  line("train.flip_horizontal", t.flip_horizontal ? "true" : "false");
  line("train.flip_vertical", t.flip_vertical ? "true" : "false");
  line("train.temporal_reverse", t.temporal_reverse ? "true" : "false");
  real("train.scale_min", t.scale_min);
  real("train.scale_max", t.scale_max);
  real("train.rotation_degrees", t.rotation_degrees);
  out += "\n# loss\n";
  real("loss.lambda_ch", cfg.loss.lambda_ch);
  real("loss.lambda_lap", cfg.loss.lambda_lap);
  real("loss.lambda_f", cfg.loss.lambda_f);
  return out;
}

}  // namespace ladder

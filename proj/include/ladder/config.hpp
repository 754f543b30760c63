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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ladder {

enum class DecoderKind { dw_separable, normal_conv };
enum class RefinerKind { decoder_only, unet };

struct ModelConfig {
  int base_width = 16;
  std::vector<int> level_channels{16, 32, 64, 128, 256};
  int attention_blocks = 2;
  // One kernel size per high-res decoder, in order l = 2, 1, 0.
  std::array<int, 3> highres_kernels{7, 15, 15};
  DecoderKind highres_kind = DecoderKind::dw_separable;
  int highres_units = 2;
  int refinement_levels = 3;
  // Widths of the refinement blocks from the coarsest level down to level 0.
  std::vector<int> refinement_channels{128, 64, 32};
  RefinerKind refiner = RefinerKind::decoder_only;
  int attention_window = 8;
  int attention_head_dim = 32;
  double timestep = 0.5;

  /// Channel width of level l (0..4).
  int channels(int level) const { return level_channels.at(level); }
  /// Refinement width at pyramid level l (0 <= l < refinement_levels).
  int refinement_width(int level) const {
    return refinement_channels.at(refinement_levels - 1 - level);
  }
  int attention_heads(int level) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Derives level and refinement widths from base_width and refinement_levels.
void apply_base_width(ModelConfig& cfg, int base_width);
void apply_refinement_levels(ModelConfig& cfg, int levels);

ModelConfig small_config();
ModelConfig large_config();

/// Throws ladder::Error naming the first violated invariant.
void validate(const ModelConfig& cfg);

enum class TrainStage { flow_only, full, hd_finetune };

std::string stage_name(TrainStage stage);
TrainStage parse_stage(const std::string& text);

struct TrainConfig {
  int batch_size = 4;
  double lr_start = 2e-4;
  double lr_end = 2e-5;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double grad_clip = 1.0;
  int crop_size = 256;
  TrainStage stage = TrainStage::flow_only;
  double hd_aug_probability = 0.5;
  double hd_downscale = 0.5;
  // Stage length. A positive `steps` wins; otherwise epochs over the dataset.
  int epochs = 1;
  int steps = 2000;
  std::uint64_t seed = 0;
  bool aux_supervision = false;
  int log_every = 50;

  // Augmentation.
  bool flip_horizontal = true;
  bool flip_vertical = true;
  bool temporal_reverse = true;
  double scale_min = 1.0;
  double scale_max = 2.0;
  double rotation_degrees = 45.0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void validate(const TrainConfig& cfg);

struct LossWeights {
  double lambda_ch = 1.0;
  double lambda_lap = 1.0;
  double lambda_f = 0.1;

  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

void validate(const LossWeights& w);

/// Everything a config file can hold.
struct ExperimentConfig {
  ModelConfig model = small_config();
  TrainConfig train;
  LossWeights loss;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline constexpr int kConfigFormatVersion = 1;

/// Parses the `key = value` text format. Unknown keys, duplicate keys, bad
/// values, and a missing or unsupported format_version are errors.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ExperimentConfig load_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace ladder

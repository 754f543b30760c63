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
#include <functional>
#include <string>
#include <vector>

#include "ladder/checkpoint.hpp"
#include "ladder/config.hpp"
#include "ladder/data.hpp"
#include "ladder/losses.hpp"
#include "ladder/synthesis.hpp"

namespace ladder {

struct StepRecord {
  TrainStage stage = TrainStage::flow_only;
  std::int64_t step = 0;
  double lr = 0.0;
  LossReport loss;
  double aux_loss = 0.0;
  double grad_norm = 0.0;
  FlowMode mode = FlowMode::original_flow;
};

struct TrainOptions {
  std::string checkpoint_path;  // final checkpoint; empty skips writing
  std::string metrics_path;     // JSONL, one record per step; empty skips
  int checkpoint_every = 0;     // mid-stage checkpoints to checkpoint_path
  int stop_after = -1;          // stop early after this many steps (resume tests)
  int workers = 1;
  bool track_dead_parameters = false;
  std::function<void(const StepRecord&)> on_step;
};

struct StageResult {
  CheckpointState checkpoint;
  std::vector<StepRecord> history;
  /// Trainable parameters whose gradient stayed exactly zero over the first
  /// full epoch (filled when TrainOptions::track_dead_parameters is set).
  std::vector<std::string> dead_parameters;
};

/// Number of optimizer steps for one stage of `cfg`.
std::int64_t stage_steps(const TrainConfig& cfg, std::size_t dataset_size);

/// Flow-only stage: extractor and flow estimator train, the residual is zero.
/// `resume` may be a partial stage-1 checkpoint to continue from.
StageResult train_stage1(Model& model, const TripletSource& data, const ExperimentConfig& cfg,
                         const TrainOptions& opts, const CheckpointState* resume = nullptr);

/// Full model from a completed stage-1 checkpoint, optimizer restarted.
StageResult train_stage2(Model& model, const TripletSource& data, const ExperimentConfig& cfg,
                         const CheckpointState& stage1, const TrainOptions& opts);

/// Continues from a stage-2 checkpoint; each batch picks its flow path with
/// probability cfg.train.hd_aug_probability.
StageResult finetune_hd(Model& model, const TripletSource& data, const ExperimentConfig& cfg,
                        const CheckpointState& stage2, const TrainOptions& opts);

/// Control: every parameter and the residual from step 0, one stage.
StageResult train_single_stage(Model& model, const TripletSource& data, const ExperimentConfig& cfg,
                               const TrainOptions& opts);

/// Mean PSNR / SSIM of interpolate() over every triplet of `data`.
struct ProbeScore {
  double psnr = 0.0;
  double ssim = 0.0;
  std::vector<double> per_item_psnr;
};
ProbeScore probe(const Model& model, const TripletSource& data, FlowMode mode,
                 bool with_residual = true);

}  // namespace ladder

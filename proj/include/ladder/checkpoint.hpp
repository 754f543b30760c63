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
#include <map>
#include <string>

#include "ladder/config.hpp"
#include "ladder/nn.hpp"
#include "ladder/optim.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to resume or evaluate a run.
struct CheckpointState {
  ExperimentConfig config;
  TrainStage stage = TrainStage::flow_only;
  bool stage_complete = false;
  std::int64_t step = 0;               // steps finished in `stage`
  std::uint64_t samples_consumed = 0;  // position of the batch stream
  std::string rng_state;               // textual std::mt19937_64 state
  std::int64_t optimizer_steps = 0;
  std::map<std::string, Tensor> params;
  std::map<std::string, Tensor> adam_m;  // empty when no optimizer was saved
  std::map<std::string, Tensor> adam_v;
};

/// Binary layout: magic, version, length-prefixed JSON header (config,
/// counters, tensor directory), little-endian float32 payloads, then a CRC-32
/// of all preceding bytes. The file appears atomically.
void save_checkpoint(const std::string& path, const CheckpointState& state);

/// Verifies magic, version, length and checksum before decoding anything.
CheckpointState load_checkpoint(const std::string& path);

/// Copies parameter values (and optimizer moments when `optimizer` is given).
void capture(const nn::ParamStore& store, const AdamW* optimizer, CheckpointState& state);

/// Checks that `state` was produced by the architecture `cfg` and that every
/// tensor matches by name and shape; only then copies values in. Throws
/// without modifying anything on mismatch.
void restore_params(const CheckpointState& state, const ModelConfig& cfg, nn::ParamStore& store);
void restore_optimizer(const CheckpointState& state, AdamW& optimizer);

/// Throws naming the first architecture field that differs.
void require_same_architecture(const ModelConfig& saved, const ModelConfig& current);

}  // namespace ladder

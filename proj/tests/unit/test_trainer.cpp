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

#include <doctest.h>

#include <filesystem>
#include <map>
#include <numeric>

#include <unistd.h>

#include "ladder/error.hpp"
#include "ladder/trainer.hpp"

using namespace ladder;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(int steps) {
  ExperimentConfig cfg;
  apply_base_width(cfg.model, 4);
  cfg.train.batch_size = 2;
  cfg.train.crop_size = 64;
  cfg.train.steps = steps;
  cfg.train.lr_start = 1e-3;
  cfg.train.lr_end = 1e-5;
  cfg.train.seed = 17;
  cfg.train.log_every = 1000;
  return cfg;
}

const InMemoryTriplets& dataset() {
  static const InMemoryTriplets data(generate_synthetic_triplets(4, 64, MotionSpec::small, 3));
  return data;
}

bool same_params(const CheckpointState& a, const CheckpointState& b) {
  if (a.params.size() != b.params.size()) return false;
  for (const auto& [name, t] : a.params) {
    auto it = b.params.find(name);
    if (it == b.params.end() || !bitwise_equal(t, it->second)) return false;
  }
  return true;
}

Tensor probe_output(const Model& m, bool residual) {
  const Triplet t = dataset().get(0);
  NoGradGuard g;
  return m.forward(Variable(t.first), Variable(t.last), FlowMode::original_flow, residual).frame.value();
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("stage length") {
  TrainConfig t;
  t.steps = 0;
  t.epochs = 3;
  t.batch_size = 4;
  CHECK(stage_steps(t, 10) == 9);
  t.steps = 5;
  CHECK(stage_steps(t, 10) == 5);
}

TEST_CASE("stage 1 trains only the extractor and flow estimator") {
  const ExperimentConfig cfg = tiny(3);
  Model model(cfg.model, 1);
  std::map<std::string, Tensor> before;
  for (const auto& p : model.params().params()) before[p.name] = p.var.value();
  const StageResult r = train_stage1(model, dataset(), cfg, TrainOptions{});
  CHECK(r.history.size() == 3);
  CHECK(r.checkpoint.stage == TrainStage::flow_only);
  CHECK(r.checkpoint.stage_complete);
  bool flow_moved = false;
  for (const auto& p : model.params().params()) {
    const bool same = bitwise_equal(before[p.name], p.var.value());
    if (p.name.rfind(Model::kRefinePrefix, 0) == 0) CHECK(same);
    if (p.name.rfind(Model::kFlowPrefix, 0) == 0 && !same) flow_moved = true;
  }
  CHECK(flow_moved);
  CHECK(r.history.front().lr == cfg.train.lr_start);
  CHECK(r.history.back().lr == cfg.train.lr_end);
}

TEST_CASE("same seed gives identical runs") {
  const ExperimentConfig cfg = tiny(4);
  Model a(cfg.model, 2);
  Model b(cfg.model, 2);
  const StageResult ra = train_stage1(a, dataset(), cfg, TrainOptions{});
  const StageResult rb = train_stage1(b, dataset(), cfg, TrainOptions{});
  CHECK(ra.history.back().loss.total == rb.history.back().loss.total);
  CHECK(same_params(ra.checkpoint, rb.checkpoint));
  CHECK(ra.checkpoint.rng_state == rb.checkpoint.rng_state);
}

TEST_CASE("interrupted and resumed stage matches an uninterrupted one") {
  const ExperimentConfig cfg = tiny(6);
  Model full(cfg.model, 3);
  const StageResult ref = train_stage1(full, dataset(), cfg, TrainOptions{});

  const fs::path ckpt = fs::temp_directory_path() / ("ladder_resume_" + std::to_string(::getpid()) + ".ckpt");
  Model part(cfg.model, 3);
  TrainOptions stop;
  stop.stop_after = 4;
  stop.checkpoint_path = ckpt.string();
  const StageResult first = train_stage1(part, dataset(), cfg, stop);
  CHECK_FALSE(first.checkpoint.stage_complete);
  CHECK(first.checkpoint.step == 4);

  const CheckpointState saved = load_checkpoint(ckpt.string());
  Model resumed(cfg.model, 99);
  const StageResult rest = train_stage1(resumed, dataset(), cfg, TrainOptions{}, &saved);
  CHECK(rest.history.size() == 2);
  CHECK(rest.checkpoint.stage_complete);
  CHECK(same_params(rest.checkpoint, ref.checkpoint));
  CHECK(rest.history.back().loss.total == ref.history.back().loss.total);
  fs::remove(ckpt);
}

TEST_CASE("stage 2 starts exactly where stage 1 ended") {
  const ExperimentConfig cfg = tiny(3);
  Model s1(cfg.model, 4);
  const StageResult r1 = train_stage1(s1, dataset(), cfg, TrainOptions{});
  const Tensor flow_only = probe_output(s1, false);

  Model s2(cfg.model, 77);
  TrainOptions none;
  none.stop_after = 0;
  train_stage2(s2, dataset(), cfg, r1.checkpoint, none);
  CHECK(bitwise_equal(probe_output(s2, true), flow_only));

  // The first stage-2 step sees the same loss as the stage-1 model would.
  Model s2b(cfg.model, 78);
  TrainOptions one;
  one.stop_after = 1;
  const StageResult r2 = train_stage2(s2b, dataset(), cfg, r1.checkpoint, one);
  CHECK(r2.history.size() == 1);
  CHECK(r2.checkpoint.stage == TrainStage::full);
}

TEST_CASE("stage order is enforced") {
  const ExperimentConfig cfg = tiny(2);
  Model m(cfg.model, 5);
  TrainOptions partial;
  partial.stop_after = 1;
  const StageResult r = train_stage1(m, dataset(), cfg, partial);
  Model other(cfg.model, 5);
  CHECK_THROWS_WITH_AS(train_stage2(other, dataset(), cfg, r.checkpoint, TrainOptions{}),
                       doctest::Contains("completed stage-1 checkpoint"), Error);
  CHECK_THROWS_AS(finetune_hd(other, dataset(), cfg, r.checkpoint, TrainOptions{}), Error);
}

TEST_CASE("zero probability HD fine-tuning always takes the original path") {
  ExperimentConfig cfg = tiny(2);
  Model m(cfg.model, 6);
  const StageResult r1 = train_stage1(m, dataset(), cfg, TrainOptions{});
  Model m2(cfg.model, 6);
  const StageResult r2 = train_stage2(m2, dataset(), cfg, r1.checkpoint, TrainOptions{});
  cfg.train.hd_aug_probability = 0.0;
  cfg.train.steps = 3;
  Model m3(cfg.model, 6);
  const StageResult r3 = finetune_hd(m3, dataset(), cfg, r2.checkpoint, TrainOptions{});
  for (const auto& rec : r3.history) CHECK(rec.mode == FlowMode::original_flow);
  cfg.train.hd_aug_probability = 1.0;
  Model m4(cfg.model, 6);
  const StageResult r4 = finetune_hd(m4, dataset(), cfg, r2.checkpoint, TrainOptions{});
  for (const auto& rec : r4.history) CHECK(rec.mode == FlowMode::downscaled_flow);
}

TEST_CASE("no trainable parameter is dead in the first epoch") {
  const ExperimentConfig cfg = tiny(2);
  Model m(cfg.model, 7);
  TrainOptions opts;
  opts.track_dead_parameters = true;
  const StageResult r1 = train_stage1(m, dataset(), cfg, opts);
  CHECK(r1.dead_parameters.empty());
  Model m2(cfg.model, 7);
  const StageResult r2 = train_stage2(m2, dataset(), cfg, r1.checkpoint, opts);
  // Zero-initialized heads pass no gradient to the layers behind them on the
  // very first step, but every parameter moves within the epoch.
  CHECK(r2.dead_parameters.empty());
}

TEST_CASE("auxiliary supervision adds a positive term") {
  ExperimentConfig cfg = tiny(2);
  cfg.train.aux_supervision = true;
  Model m(cfg.model, 8);
  const StageResult r = train_stage1(m, dataset(), cfg, TrainOptions{});
  for (const auto& rec : r.history) CHECK(rec.aux_loss > 0.0);
}

// Memorization setup: no augmentation, so the 8 scenes are seen exactly.
TEST_CASE("training loss halves within 500 steps on 8 triplets") {
  ExperimentConfig cfg = tiny(500);
  cfg.train.batch_size = 4;
  cfg.train.crop_size = 128;
  cfg.train.scale_max = 1.0;
  cfg.train.rotation_degrees = 0.0;
  cfg.train.flip_horizontal = cfg.train.flip_vertical = cfg.train.temporal_reverse = false;
  const InMemoryTriplets data(generate_synthetic_triplets(8, 128, MotionSpec::mixed, 9));
  Model m(cfg.model, 9);
  const StageResult r = train_stage1(m, data, cfg, TrainOptions{});
  REQUIRE(r.history.size() == 500);
  double early = 0, late = 0;
  for (int i = 0; i < 10; ++i) early += r.history[i].loss.total;
  for (int i = 490; i < 500; ++i) late += r.history[i].loss.total;
  CHECK(late <= 0.5 * early);
}

}  // TEST_SUITE

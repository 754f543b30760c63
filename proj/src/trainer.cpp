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

#include "ladder/trainer.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ladder/error.hpp"
#include "ladder/metrics.hpp"
#include "ladder/optim.hpp"

namespace ladder {

namespace {

struct StageSpec {
  TrainStage stage = TrainStage::flow_only;
  bool with_residual = false;
  bool flow_params_only = false;
  double hd_probability = -1.0;  // negative: always original_flow
  std::uint64_t stream_salt = 0;
};

std::uint64_t salted(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

std::vector<nn::Parameter> trainable(const Model& model, bool flow_only) {
  std::vector<nn::Parameter> out;
  for (const auto& p : model.params().params()) {
    if (!flow_only || starts_with(p.name, Model::kExtractorPrefix) ||
        starts_with(p.name, Model::kFlowPrefix)) {
      out.push_back(p);
    }
  }
  return out;
}

Tensor pool_to(const Tensor& t, int height) {
  Variable v(t);
  while (v.shape().h > height) v = ops::avg_pool2x(v);
  return v.value();
}

// Charbonnier on the composition from each intermediate warp state.
Variable auxiliary_loss(const ForwardResult& fwd, const Batch& b, double* value) {
  Variable total;
  *value = 0.0;
  for (const auto& state : fwd.intermediates) {
    const int h = state.height();
    if (h < 1 || b.first.shape().h % h != 0) continue;
    const Variable i0(pool_to(b.first, h));
    const Variable i1(pool_to(b.last, h));
    const Variable term = charbonnier_loss(compose(i0, i1, state, Variable()), pool_to(b.middle, h));
    *value += term.value().data()[0];
    total = total.defined() ? ops::add(total, term) : term;
  }
  return total;
}

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

nlohmann::json record_json(const StepRecord& r) {
  return {{"stage", stage_name(r.stage)},
          {"step", r.step},
          {"lr", r.lr},
          {"loss", r.loss.total},
          {"charbonnier", r.loss.charbonnier},
          {"laplacian", r.loss.laplacian},
          {"frequency", r.loss.frequency},
          {"aux", r.aux_loss},
          {"grad_norm", r.grad_norm},
          {"flow_mode", flow_mode_name(r.mode)}};
}

StageResult run_stage(Model& model, const TripletSource& data, const ExperimentConfig& cfg,
                      const StageSpec& spec, const TrainOptions& opts,
                      const CheckpointState* resume) {
  validate(cfg.train);
  validate(cfg.loss);
  require(data.size() > 0, "training data is empty");
  const std::int64_t total = stage_steps(cfg.train, data.size());
  const std::vector<nn::Parameter> params = trainable(model, spec.flow_params_only);

  AdamWOptions ao;
  ao.beta1 = cfg.train.beta1;
  ao.beta2 = cfg.train.beta2;
  ao.weight_decay = cfg.train.weight_decay;
  AdamW optimizer(params, ao);
  BatchStream stream(data, AugmentationPolicy::from(cfg.train), cfg.train.batch_size,
                     salted(cfg.train.seed, spec.stream_salt), opts.workers);
  std::mt19937_64 rng(salted(cfg.train.seed, 100 + spec.stream_salt));

  std::int64_t step = 0;
  if (resume != nullptr) {
    require(resume->stage == spec.stage && !resume->stage_complete,
            "cannot resume a {} stage from a {} checkpoint", stage_name(spec.stage),
            resume->stage_complete ? "completed " + stage_name(resume->stage)
                                   : stage_name(resume->stage));
    restore_params(*resume, model.config(), model.params());
    restore_optimizer(*resume, optimizer);
    stream.seek(resume->samples_consumed);
    std::istringstream is(resume->rng_state);
    is >> rng;
    require(!is.fail(), "checkpoint RNG state is unreadable");
    step = resume->step;
  }

  std::ofstream metrics;
  if (!opts.metrics_path.empty()) {
    metrics.open(opts.metrics_path, resume != nullptr ? std::ios::app : std::ios::trunc);
    require(metrics.good(), "cannot open metrics log '{}'", opts.metrics_path);
  }

  StageResult result;
  auto snapshot = [&](bool complete) {
    CheckpointState st;
    st.config = cfg;
    st.stage = spec.stage;
    st.stage_complete = complete;
    st.step = step;
    st.samples_consumed = stream.consumed();
    st.rng_state = rng_text(rng);
    capture(model.params(), &optimizer, st);
    return st;
  };

  const std::int64_t epoch_steps =
      (static_cast<std::int64_t>(data.size()) + cfg.train.batch_size - 1) / cfg.train.batch_size;
  std::vector<bool> seen(params.size(), false);
  bool dead_checked = false;
  int ran = 0;

  spdlog::info("{}: {} steps, {} trainable tensors, batch {}", stage_name(spec.stage), total,
               params.size(), cfg.train.batch_size);
  while (step < total && (opts.stop_after < 0 || ran < opts.stop_after)) {
    const Batch b = stream.next();
    StepRecord rec;
    rec.stage = spec.stage;
    rec.step = step;
    rec.lr = cosine_lr(cfg.train.lr_start, cfg.train.lr_end, step, total);
    rec.mode = spec.hd_probability >= 0 ? hd_flow_path_sampler(spec.hd_probability, rng)
                                        : FlowMode::original_flow;

    model.params().zero_grad();
    const ForwardResult fwd =
        model.forward(Variable(b.first), Variable(b.last), rec.mode, spec.with_residual);
    Variable loss = total_loss(fwd.frame, b.middle, cfg.loss, &rec.loss);
    if (cfg.train.aux_supervision) {
      const Variable aux = auxiliary_loss(fwd, b, &rec.aux_loss);
      if (aux.defined()) loss = ops::add(loss, aux);
    }
    if (!std::isfinite(rec.loss.total) || !std::isfinite(rec.aux_loss)) {
      fail("non-finite loss at {} step {}: charbonnier {} laplacian {} frequency {} aux {} (lr {})",
           stage_name(spec.stage), step, rec.loss.charbonnier, rec.loss.laplacian,
           rec.loss.frequency, rec.aux_loss, rec.lr);
    }
    loss.backward();
    rec.grad_norm = clip_grad_norm(params, cfg.train.grad_clip);
    if (!std::isfinite(rec.grad_norm)) {
      fail("non-finite gradient norm at {} step {} (loss {})", stage_name(spec.stage), step,
           rec.loss.total);
    }
    if (opts.track_dead_parameters && !dead_checked) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (seen[i] || !params[i].var.has_grad()) continue;
        for (float g : params[i].var.grad().span()) {
          if (g != 0.0f) {
            seen[i] = true;
            break;
          }
        }
      }
    }
    optimizer.step(rec.lr);
    ++step;
    ++ran;

    if (opts.track_dead_parameters && !dead_checked && (step >= epoch_steps || step == total)) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (!seen[i]) result.dead_parameters.push_back(params[i].name);
      }
      dead_checked = true;
    }
    if (metrics.is_open()) metrics << record_json(rec).dump() << '\n' << std::flush;
    if (cfg.train.log_every > 0 && (rec.step % cfg.train.log_every == 0 || step == total)) {
      spdlog::info("{} step {}/{} loss {:.6f} (ch {:.6f} lap {:.6f} freq {:.6f}) lr {:.3e} |g| {:.3f}",
                   stage_name(spec.stage), step, total, rec.loss.total, rec.loss.charbonnier,
                   rec.loss.laplacian, rec.loss.frequency, rec.lr, rec.grad_norm);
    }
    if (opts.on_step) opts.on_step(rec);
    result.history.push_back(rec);
    if (opts.checkpoint_every > 0 && !opts.checkpoint_path.empty() && step < total &&
        step % opts.checkpoint_every == 0) {
      save_checkpoint(opts.checkpoint_path, snapshot(false));
    }
  }
  result.checkpoint = snapshot(step >= total);
  if (!opts.checkpoint_path.empty()) save_checkpoint(opts.checkpoint_path, result.checkpoint);
  return result;
}

}  // namespace

std::int64_t stage_steps(const TrainConfig& cfg, std::size_t dataset_size) {
  if (cfg.steps > 0) return cfg.steps;
  require(dataset_size > 0, "training data is empty");
  const auto per_epoch =
      (static_cast<std::int64_t>(dataset_size) + cfg.batch_size - 1) / cfg.batch_size;
  return per_epoch * cfg.epochs;
}

StageResult train_stage1(Model& model, const TripletSource& data, const ExperimentConfig& cfg,
                         const TrainOptions& opts, const CheckpointState* resume) {
  StageSpec spec;
  spec.stage = TrainStage::flow_only;
  spec.flow_params_only = true;
  spec.stream_salt = 1;
  return run_stage(model, data, cfg, spec, opts, resume);
}

StageResult train_stage2(Model& model, const TripletSource& data, const ExperimentConfig& cfg,
                         const CheckpointState& stage1, const TrainOptions& opts) {
  StageSpec spec;
  spec.stage = TrainStage::full;
  spec.with_residual = true;
  spec.stream_salt = 2;
  if (stage1.stage == TrainStage::full && !stage1.stage_complete) {
    return run_stage(model, data, cfg, spec, opts, &stage1);
  }
  require(stage1.stage == TrainStage::flow_only && stage1.stage_complete,
          "stage-2 training needs a completed stage-1 checkpoint, got a {}{} one",
          stage1.stage_complete ? "" : "partial ", stage_name(stage1.stage));
  restore_params(stage1, model.config(), model.params());
  return run_stage(model, data, cfg, spec, opts, nullptr);
}

StageResult finetune_hd(Model& model, const TripletSource& data, const ExperimentConfig& cfg,
                        const CheckpointState& stage2, const TrainOptions& opts) {
  StageSpec spec;
  spec.stage = TrainStage::hd_finetune;
  spec.with_residual = true;
  spec.hd_probability = cfg.train.hd_aug_probability;
  spec.stream_salt = 3;
  if (stage2.stage == TrainStage::hd_finetune && !stage2.stage_complete) {
    return run_stage(model, data, cfg, spec, opts, &stage2);
  }
  require(stage2.stage == TrainStage::full && stage2.stage_complete,
          "HD fine-tuning needs a completed stage-2 checkpoint, got a {}{} one",
          stage2.stage_complete ? "" : "partial ", stage_name(stage2.stage));
  restore_params(stage2, model.config(), model.params());
  return run_stage(model, data, cfg, spec, opts, nullptr);
}

StageResult train_single_stage(Model& model, const TripletSource& data, const ExperimentConfig& cfg,
                               const TrainOptions& opts) {
  StageSpec spec;
  spec.stage = TrainStage::full;
  spec.with_residual = true;
  spec.stream_salt = 2;
  return run_stage(model, data, cfg, spec, opts, nullptr);
}

ProbeScore probe(const Model& model, const TripletSource& data, FlowMode mode, bool with_residual) {
  require(data.size() > 0, "probe: no triplets");
  ProbeScore score;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Triplet t = data.get(i);
    const InterpolationResult r = interpolate(t.first, t.last, model, mode, with_residual);
    const double p = psnr(r.frame, t.middle);
    score.per_item_psnr.push_back(p);
    score.psnr += p;
    score.ssim += ssim(r.frame, t.middle);
  }
  score.psnr /= static_cast<double>(data.size());
  score.ssim /= static_cast<double>(data.size());
  return score;
}

}  // namespace ladder

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

#include "ladder/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ladder/checkpoint.hpp"
#include "ladder/cost_model.hpp"
#include "ladder/data.hpp"
#include "ladder/error.hpp"
#include "ladder/image_io.hpp"
#include "ladder/log.hpp"
#include "ladder/metrics.hpp"
#include "ladder/trainer.hpp"

namespace ladder {

namespace fs = std::filesystem;

namespace {

void write_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot write '{}'", path);
    out << text;
    if (!out) fail("failed writing '{}'", path);
  }
  fs::rename(tmp, path);
}

ExperimentConfig load_user_config(const std::string& path) {
  if (!fs::exists(path)) fail("config file '{}' does not exist", path);
  return load_config_file(path);
}

std::pair<int, int> parse_resolution(const std::string& text) {
  int w = 0;
  int h = 0;
  char x = 0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%d%c%d%c", &w, &x, &h, &extra) != 3 || (x != 'x' && x != 'X') ||
      w <= 0 || h <= 0) {
    fail("resolution '{}' must look like WIDTHxHEIGHT", text);
  }
  return {w, h};
}

// Evaluation prefers the test list and falls back to the training list.
std::string default_list(const std::string& root, const std::string& list, bool for_eval) {
  if (!list.empty()) return list;
  const fs::path test = fs::path(root) / "tri_testlist.txt";
  if (for_eval && fs::exists(test)) return test.string();
  return (fs::path(root) / "tri_trainlist.txt").string();
}

std::unique_ptr<VimeoTriplets> open_dataset(const std::string& root, const std::string& list_arg,
                                            bool for_eval) {
  const std::string list = default_list(root, list_arg, for_eval);
  if (!fs::exists(list)) fail("triplet list '{}' does not exist", list);
  auto data = std::make_unique<VimeoTriplets>(root, list);
  if (data->size() == 0) fail("dataset '{}' is empty", list);
  return data;
}

struct LoadedModel {
  CheckpointState state;
  std::unique_ptr<Model> model;
};

LoadedModel load_model(const std::string& path) {
  if (!fs::exists(path)) fail("checkpoint '{}' does not exist", path);
  LoadedModel lm;
  lm.state = load_checkpoint(path);
  lm.model = std::make_unique<Model>(lm.state.config.model, 0);
  restore_params(lm.state, lm.state.config.model, lm.model->params());
  return lm;
}

Tensor read_user_png(const std::string& path) {
  if (!fs::exists(path)) fail("image '{}' does not exist", path);
  return read_png(path);
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config;
  std::string data;
  std::string list;
  std::string stage = "1";
  std::string out = "runs";
  std::string from;
  std::string resume;
  int steps = 0;
  int workers = 1;
  int checkpoint_every = 0;
};

int cmd_train(const TrainArgs& a, std::uint64_t seed, bool seed_given) {
  ExperimentConfig cfg = load_user_config(a.config);
  if (seed_given) cfg.train.seed = seed;
  if (a.steps > 0) cfg.train.steps = a.steps;
  const bool single = a.stage == "single";
  const TrainStage stage = single ? TrainStage::full : parse_stage(a.stage);
  const auto data = open_dataset(a.data, a.list, false);

  const fs::path out(a.out);
  const std::string tag = single                           ? "single"
                          : stage == TrainStage::flow_only ? "stage1"
                          : stage == TrainStage::full      ? "stage2"
                                                           : "hd";
  const std::string prev_tag = stage == TrainStage::full ? "stage1" : "stage2";
  std::optional<CheckpointState> previous;
  if (!single && stage != TrainStage::flow_only && a.resume.empty()) {
    const std::string from = a.from.empty() ? (out / (prev_tag + ".ckpt")).string() : a.from;
    if (!fs::exists(from)) {
      fail("{} training needs the {} checkpoint '{}', which does not exist", stage_name(stage),
           prev_tag, from);
    }
    previous = load_checkpoint(from);
  }
  std::optional<CheckpointState> resume;
  if (!a.resume.empty()) {
    if (!fs::exists(a.resume)) fail("resume checkpoint '{}' does not exist", a.resume);
    resume = load_checkpoint(a.resume);
  }
  fs::create_directories(out);

  TrainOptions opts;
  opts.checkpoint_path = (out / (tag + ".ckpt")).string();
  opts.metrics_path = (out / (tag + ".jsonl")).string();
  opts.workers = a.workers;
  opts.checkpoint_every = a.checkpoint_every;
  Model model(cfg.model, cfg.train.seed);
  if (single) {
    train_single_stage(model, *data, cfg, opts);
  } else if (stage == TrainStage::flow_only) {
    train_stage1(model, *data, cfg, opts, resume ? &*resume : nullptr);
  } else if (stage == TrainStage::full) {
    train_stage2(model, *data, cfg, resume ? *resume : *previous, opts);
  } else {
    finetune_hd(model, *data, cfg, resume ? *resume : *previous, opts);
  }
  fmt::print("checkpoint {}\nmetrics {}\n", opts.checkpoint_path, opts.metrics_path);
  return 0;
}

// ---------------------------------------------------------- interpolate

struct InterpolateArgs {
  std::string checkpoint;
  std::string first;
  std::string last;
  std::string out;
  std::string gt;
  bool hd = false;
  bool no_residual = false;
};

int cmd_interpolate(const InterpolateArgs& a) {
  const Tensor i0 = read_user_png(a.first);
  const Tensor i1 = read_user_png(a.last);
  if (!(i0.shape() == i1.shape())) {
    fail("input sizes differ: '{}' is {}x{}, '{}' is {}x{}", a.first, i0.shape().w, i0.shape().h,
         a.last, i1.shape().w, i1.shape().h);
  }
  std::optional<Tensor> gt;
  if (!a.gt.empty()) {
    gt = read_user_png(a.gt);
    if (!(gt->shape() == i0.shape())) fail("ground truth '{}' does not match the input size", a.gt);
  }
  const FlowMode mode = a.hd ? FlowMode::downscaled_flow : FlowMode::original_flow;
  if (a.hd && (i0.shape().w / 2 < 32 || i0.shape().h / 2 < 32)) {
    fail("--hd needs frames of at least 64x64, got {}x{}", i0.shape().w, i0.shape().h);
  }
  LoadedModel lm = load_model(a.checkpoint);
  const InterpolationResult r = interpolate(i0, i1, *lm.model, mode, !a.no_residual);
  write_png(a.out, r.frame);
  const int div = a.hd ? 2 : 1;
  fmt::print("flow {}x{}, output {}x{}\n", i0.shape().w / div, i0.shape().h / div,
             r.frame.shape().w, r.frame.shape().h);
  fmt::print("wrote {}\n", a.out);
  if (gt) {
    const Tensor q = quantize8(r.frame);
    fmt::print("psnr {:.4f}\nssim {:.6f}\n", psnr(q, *gt), ssim(q, *gt));
  }
  return 0;
}

// ------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string checkpoint;
  std::string data;
  std::string list;
  std::string mode = "original";
  std::string out = "results.jsonl";
  bool no_residual = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
  std::vector<FlowMode> modes;
  if (a.mode == "original" || a.mode == "both") modes.push_back(FlowMode::original_flow);
  if (a.mode == "downscaled" || a.mode == "hd" || a.mode == "both") {
    modes.push_back(FlowMode::downscaled_flow);
  }
  if (modes.empty()) fail("--mode must be original, downscaled or both, got '{}'", a.mode);
  const auto data = open_dataset(a.data, a.list, true);
  LoadedModel lm = load_model(a.checkpoint);

  std::string records;
  std::size_t failures = 0;
  std::size_t attempts = 0;
  for (FlowMode mode : modes) {
    fmt::print("mode {}\n{:<24} {:>10} {:>10}\n", flow_mode_name(mode), "triplet", "psnr", "ssim");
    double sum_p = 0.0;
    double sum_s = 0.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < data->size(); ++i) {
      const std::string& id = data->entries()[i];
      nlohmann::json row = {{"mode", flow_mode_name(mode)}, {"triplet", id}};
      ++attempts;
      try {
        const Triplet t = data->get(i);
        const InterpolationResult r = interpolate(t.first, t.last, *lm.model, mode, !a.no_residual);
        const Tensor q = quantize8(r.frame);
        const double p = psnr(q, t.middle);
        const double s = ssim(q, t.middle);
        row["status"] = "ok";
        row["psnr"] = p;
        row["ssim"] = s;
        sum_p += p;
        sum_s += s;
        ++ok;
        fmt::print("{:<24} {:>10.4f} {:>10.6f}\n", id, p, s);
      } catch (const Error& e) {
        row["status"] = "failed";
        row["error"] = e.what();
        ++failures;
        fmt::print("{:<24} {:>10} {:>10}\n", id, "failed", "-");
        spdlog::warn("{}: {}", id, e.what());
      }
      records += row.dump() + "\n";
    }
    nlohmann::json mean = {{"mode", flow_mode_name(mode)}, {"triplet", "mean"}, {"count", ok}};
    if (ok > 0) {
      mean["psnr"] = sum_p / static_cast<double>(ok);
      mean["ssim"] = sum_s / static_cast<double>(ok);
      fmt::print("{:<24} {:>10.4f} {:>10.6f}\n", "mean", sum_p / ok, sum_s / ok);
    } else {
      fmt::print("{:<24} {:>10} {:>10}\n", "mean", "-", "-");
    }
    records += mean.dump() + "\n";
  }
  write_atomic(a.out, records);
  fmt::print("results {}\n", a.out);
  return failures == attempts ? 2 : 0;
}

// ----------------------------------------------------------------- cost

struct CostArgs {
  std::string config;
  std::string preset;
  std::string res = "448x256";
  std::string out;
  bool ablation = false;
};

int cmd_cost(const CostArgs& a) {
  ModelConfig cfg;
  if (!a.config.empty()) {
    cfg = load_user_config(a.config).model;
  } else if (a.preset == "small" || a.preset.empty()) {
    cfg = small_config();
  } else if (a.preset == "large") {
    cfg = large_config();
  } else {
    fail("unknown preset '{}' (expected small or large)", a.preset);
  }
  const auto [w, h] = parse_resolution(a.res);
  if (w % 32 != 0 || h % 32 != 0) fail("resolution {}x{} must be a multiple of 32", w, h);
  nlohmann::json record;
  if (a.ablation) {
    const auto dec = decoder_ablation(cfg, h, w);
    const auto ref = refinement_ablation(cfg, h, w);
    fmt::print("high-res decoder variants at {}x{}\n{}\n", w, h, ablation_table(dec));
    fmt::print("refinement variants at {}x{}\n{}", w, h, ablation_table(ref));
    for (const auto& r : dec) record["decoder"].push_back(nlohmann::json::parse(r.json()));
    for (const auto& r : ref) record["refinement"].push_back(nlohmann::json::parse(r.json()));
  } else {
    const CostReport r = count_flops(cfg, h, w);
    fmt::print("{}", r.table());
    record = nlohmann::json::parse(r.json());
  }
  if (a.out.empty()) {
    fmt::print("{}\n", record.dump());
  } else {
    write_atomic(a.out, record.dump() + "\n");
    fmt::print("record {}\n", a.out);
  }
  return 0;
}

// ------------------------------------------------------- make-synthetic

struct SyntheticArgs {
  std::string out;
  int count = 8;
  int size = 128;
  std::string motion = "mixed";
};

int cmd_make_synthetic(const SyntheticArgs& a, std::uint64_t seed) {
  if (a.count <= 0) fail("--count must be positive, got {}", a.count);
  if (a.size < 32 || a.size % 32 != 0) fail("--size {} must be a positive multiple of 32", a.size);
  const MotionSpec motion = parse_motion_spec(a.motion);
  const auto triplets = generate_synthetic_triplets(a.count, a.size, motion, seed);
  const std::string list = write_vimeo_layout(a.out, triplets);
  fmt::print("wrote {} triplets ({}x{}, {} motion) under {}\nlist {}\n", a.count, a.size, a.size,
             motion_spec_name(motion), a.out, list);
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"LADDER video frame interpolation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = app.add_option("--seed", seed, "Seed for every random choice")
                               ->default_val(0)
                               ->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Run one training stage");
  train->add_option("--config", ta.config, "Experiment config file")->required();
  train->add_option("--data", ta.data, "Dataset root (Vimeo-style layout)")->required();
  train->add_option("--list", ta.list, "Triplet list (default <data>/tri_trainlist.txt)");
  train->add_option("--stage", ta.stage, "1, 2, hd, or single (one-stage control)")
      ->capture_default_str();
  train->add_option("--out", ta.out, "Output directory for checkpoints and logs")
      ->capture_default_str();
  train->add_option("--from", ta.from, "Previous-stage checkpoint (default <out>/stageN.ckpt)");
  train->add_option("--resume", ta.resume, "Partial checkpoint of the same stage");
  train->add_option("--steps", ta.steps, "Override train.steps");
  train->add_option("--workers", ta.workers, "Prefetch workers")->capture_default_str();
  train->add_option("--checkpoint-every", ta.checkpoint_every, "Mid-stage checkpoint interval");

  InterpolateArgs ia;
  auto* interp = app.add_subcommand("interpolate", "Synthesize the middle frame");
  interp->add_option("--checkpoint", ia.checkpoint, "Model checkpoint")->required();
  interp->add_option("--first", ia.first, "Frame at t=0")->required();
  interp->add_option("--last", ia.last, "Frame at t=1")->required();
  interp->add_option("--out", ia.out, "Output PNG")->required();
  interp->add_option("--gt", ia.gt, "Ground-truth middle frame; prints PSNR/SSIM");
  interp->add_flag("--hd", ia.hd, "Estimate flow at half resolution");
  interp->add_flag("--no-residual", ia.no_residual, "Skip the refinement stage");

  EvaluateArgs ea;
  auto* eval = app.add_subcommand("evaluate", "Score a checkpoint on a triplet folder");
  eval->add_option("--checkpoint", ea.checkpoint, "Model checkpoint")->required();
  eval->add_option("--data", ea.data, "Dataset root")->required();
  eval->add_option("--list", ea.list,
                   "Triplet list (default <data>/tri_testlist.txt, else tri_trainlist.txt)");
  eval->add_option("--mode", ea.mode, "original, downscaled or both")->capture_default_str();
  eval->add_option("--out", ea.out, "Results file (JSON lines)")->capture_default_str();
  eval->add_flag("--no-residual", ea.no_residual, "Skip the refinement stage");

  CostArgs ca;
  auto* cost = app.add_subcommand("cost", "Analytic parameter and FLOP count");
  cost->add_option("--config", ca.config, "Experiment config file");
  cost->add_option("--preset", ca.preset, "small or large when no config is given");
  cost->add_option("--res", ca.res, "Resolution WIDTHxHEIGHT")->capture_default_str();
  cost->add_option("--out", ca.out, "Write the JSON record here instead of stdout");
  cost->add_flag("--ablation", ca.ablation, "Decoder and refinement variant tables");

  SyntheticArgs sa;
  auto* synth = app.add_subcommand("make-synthetic", "Write a synthetic triplet dataset");
  synth->add_option("--out", sa.out, "Dataset root")->required();
  synth->add_option("--count", sa.count, "Number of triplets")->capture_default_str();
  synth->add_option("--size", sa.size, "Square frame size, multiple of 32")->capture_default_str();
  synth->add_option("--motion", sa.motion, "static, small, large or mixed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    init_logging();
    if (*train) return cmd_train(ta, seed, seed_opt->count() > 0);
    if (*interp) return cmd_interpolate(ia);
    if (*eval) return cmd_evaluate(ea);
    if (*cost) return cmd_cost(ca);
    if (*synth) return cmd_make_synthetic(sa, seed);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return 2;
  }
  return 2;
}

}  // namespace ladder

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
#include <deque>
#include <future>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ladder/config.hpp"
#include "ladder/synthesis.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

/// Three frames (1, 3, H, W) each; `middle` is the supervision target.
struct Triplet {
  Tensor first;
  Tensor middle;
  Tensor last;
  std::string source_id;
};

/// Random-access triplet collection. get() must be safe to call concurrently.
class TripletSource {
 public:
  virtual ~TripletSource() = default;
  virtual std::size_t size() const = 0;
  virtual Triplet get(std::size_t index) const = 0;
};

class InMemoryTriplets final : public TripletSource {
 public:
  explicit InMemoryTriplets(std::vector<Triplet> triplets) : triplets_(std::move(triplets)) {}
  std::size_t size() const override { return triplets_.size(); }
  Triplet get(std::size_t index) const override { return triplets_.at(index); }
  const std::vector<Triplet>& triplets() const { return triplets_; }

 private:
  std::vector<Triplet> triplets_;
};

/// Parses a newline-delimited list of `<seq>/<clip>` entries. Blank lines are
/// skipped; anything else malformed is an error naming the line number.
std::vector<std::string> read_triplet_list(const std::string& list_file);

/// Vimeo-style layout: <root>/sequences/<seq>/<clip>/im{1,2,3}.png. Only the
/// list is held in memory; frames are decoded on access.
class VimeoTriplets final : public TripletSource {
 public:
  VimeoTriplets(std::string root, const std::string& list_file);
  std::size_t size() const override { return entries_.size(); }
  Triplet get(std::size_t index) const override;
  const std::vector<std::string>& entries() const { return entries_; }

 private:
  std::string root_;
  std::vector<std::string> entries_;
};

/// Sequential reader over a source, in list order.
class TripletStream {
 public:
  explicit TripletStream(const TripletSource& source) : source_(source) {}
  std::optional<Triplet> next();

 private:
  const TripletSource& source_;
  std::size_t pos_ = 0;
};

/// Writes triplets as <root>/sequences/<seq>/<clip>/im{1,2,3}.png plus the
/// list file; returns the list path.
std::string write_vimeo_layout(const std::string& root, const std::vector<Triplet>& triplets,
                               const std::string& list_name = "tri_trainlist.txt");

struct AugmentationPolicy {
  bool flip_horizontal = false;
  bool flip_vertical = false;
  bool temporal_reverse = false;
  double scale_min = 1.0;
  double scale_max = 1.0;
  double rotation_degrees = 0.0;
  int crop_size = 0;  // 0 keeps the full frame

  static AugmentationPolicy identity() { return {}; }
  static AugmentationPolicy from(const TrainConfig& cfg);
};

/// Scale, rotate (replication border), crop, flip, then maybe reverse time.
/// Deterministic in (triplet, policy, seed).
Triplet augment(const Triplet& t, const AugmentationPolicy& policy, std::uint64_t seed);

enum class MotionSpec { static_scene, small, large, mixed };
MotionSpec parse_motion_spec(const std::string& text);
std::string motion_spec_name(MotionSpec spec);

struct SyntheticWave {
  double amplitude[3];
  double kx;
  double ky;
  double phase;
};

struct SyntheticObject {
  bool disk = true;
  double cx = 0, cy = 0;  // centre at t = 0.5
  double rx = 1, ry = 1;  // radius, or rectangle half-extents
  double vx = 0, vy = 0;  // displacement from t = 0 to t = 1
  double color[3] = {0.5, 0.5, 0.5};
  SyntheticWave texture{};  // evaluated in object coordinates
};

struct SyntheticScene {
  int size = 0;
  double background[3] = {0.5, 0.5, 0.5};
  std::vector<SyntheticWave> background_waves;
  double bg_vx = 0, bg_vy = 0;
  std::vector<SyntheticObject> objects;  // back to front
};

SyntheticScene random_scene(int size, MotionSpec motion, std::mt19937_64& rng);
/// Analytic render at time t in [0, 1] with anti-aliased edges, (1, 3, S, S).
Tensor render_scene(const SyntheticScene& scene, double t);
Triplet render_triplet(const SyntheticScene& scene, std::string source_id = {});

/// Scenes of textured rectangles and disks over a textured background, all
/// translating at constant velocity; the middle frame is rendered at half the
/// displacement. size must be a multiple of 32.
std::vector<Triplet> generate_synthetic_triplets(int count, int size, MotionSpec motion,
                                                 std::uint64_t seed);

/// Bernoulli(p) choice of the flow path for one batch.
FlowMode hd_flow_path_sampler(double p, std::mt19937_64& rng);

struct Batch {
  Tensor first;
  Tensor middle;
  Tensor last;
};

/// Stacks same-shape triplets into (N, 3, H, W) tensors.
Batch make_batch(const std::vector<Triplet>& triplets);

/// Epoch-shuffled, augmented batches with `workers` triplets decoded ahead.
/// The sample order and every augmentation seed derive from (seed, epoch,
/// position), so worker count never changes the stream.
class BatchStream {
 public:
  BatchStream(const TripletSource& source, AugmentationPolicy policy, int batch_size,
              std::uint64_t seed, int workers = 1);
  Batch next();
  std::uint64_t epoch() const { return epoch_; }
  /// Position for checkpointing: samples consumed so far.
  std::uint64_t consumed() const { return consumed_; }
  /// Restores a position previously returned by consumed().
  void seek(std::uint64_t consumed);

 private:
  Triplet produce(std::uint64_t serial) const;
  void refill();

  const TripletSource& source_;
  AugmentationPolicy policy_;
  int batch_size_;
  std::uint64_t seed_;
  int workers_;
  std::uint64_t epoch_ = 0;
  std::uint64_t consumed_ = 0;
  std::uint64_t scheduled_ = 0;
  std::deque<std::future<Triplet>> pending_;
};

/// Index of sample `serial` in the shuffled stream.
std::size_t stream_index(std::size_t dataset_size, std::uint64_t seed, std::uint64_t serial);

}  // namespace ladder

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

#include "ladder/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "ladder/error.hpp"
#include "ladder/image_io.hpp"

namespace ladder {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix(a ^ splitmix(b)); }

double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * u01(rng); }

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_segment(const std::string& seg) {
  if (seg.empty() || seg == "." || seg == "..") return false;
  return std::none_of(seg.begin(), seg.end(), [](char ch) {
    return std::isspace(static_cast<unsigned char>(ch)) || ch == '\\';
  });
}

// Bilinear read with edge replication.
float sample(const float* plane, int h, int w, double y, double x) {
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const int y1 = std::min(y0 + 1, h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const double fy = y - y0;
  const double fx = x - x0;
  const double top = plane[y0 * w + x0] + fx * (plane[y0 * w + x1] - plane[y0 * w + x0]);
  const double bot = plane[y1 * w + x0] + fx * (plane[y1 * w + x1] - plane[y1 * w + x0]);
  return static_cast<float>(top + fy * (bot - top));
}

Tensor resize(const Tensor& img, int oh, int ow) {
  const Shape s = img.shape();
  Tensor out(Shape{s.n, s.c, oh, ow});
  const double sy = static_cast<double>(s.h) / oh;
  const double sx = static_cast<double>(s.w) / ow;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = img.plane(n, c);
      float* dst = out.plane(n, c);
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          dst[y * ow + x] = sample(src, s.h, s.w, (y + 0.5) * sy - 0.5, (x + 0.5) * sx - 0.5);
        }
      }
    }
  }
  return out;
}

Tensor rotate(const Tensor& img, double radians) {
  const Shape s = img.shape();
  Tensor out(s);
  const double cy = (s.h - 1) * 0.5;
  const double cx = (s.w - 1) * 0.5;
  const double cs = std::cos(radians);
  const double sn = std::sin(radians);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = img.plane(n, c);
      float* dst = out.plane(n, c);
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
          const double dx = x - cx;
          const double dy = y - cy;
          dst[y * s.w + x] = sample(src, s.h, s.w, cy - sn * dx + cs * dy, cx + cs * dx + sn * dy);
        }
      }
    }
  }
  return out;
}

Tensor crop(const Tensor& img, int top, int left, int size) {
  const Shape s = img.shape();
  Tensor out(Shape{s.n, s.c, size, size});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < size; ++y) {
        std::copy_n(img.plane(n, c) + (top + y) * s.w + left, size, out.plane(n, c) + y * size);
      }
    }
  }
  return out;
}

Tensor flip(const Tensor& img, bool horizontal) {
  const Shape s = img.shape();
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
          out.at(n, c, y, x) = horizontal ? img.at(n, c, y, s.w - 1 - x) : img.at(n, c, s.h - 1 - y, x);
        }
      }
    }
  }
  return out;
}

double coverage(double edge_distance) { return std::clamp(edge_distance + 0.5, 0.0, 1.0); }

double wave(const SyntheticWave& w, int c, double x, double y) {
  return w.amplitude[c] * std::sin(w.kx * x + w.ky * y + w.phase);
}

SyntheticWave random_wave(std::mt19937_64& rng, int size, double amp_lo, double amp_hi) {
  SyntheticWave w{};
  const double period = uniform(rng, size / 12.0, size / 2.0);
  const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double k = 2.0 * std::numbers::pi / period;
  w.kx = k * std::cos(angle);
  w.ky = k * std::sin(angle);
  w.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  for (double& a : w.amplitude) a = uniform(rng, amp_lo, amp_hi);
  return w;
}

void random_velocity(std::mt19937_64& rng, double max_mag, double& vx, double& vy) {
  const double mag = uniform(rng, 0.0, max_mag);
  const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  vx = mag * std::cos(angle);
  vy = mag * std::sin(angle);
}

}  // namespace

std::vector<std::string> read_triplet_list(const std::string& list_file) {
  std::ifstream in(list_file);
  if (!in) fail("cannot open triplet list '{}'", list_file);
  std::vector<std::string> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string entry = trim(line);
    if (entry.empty()) continue;
    const auto slash = entry.find('/');
    const bool ok = slash != std::string::npos && entry.find('/', slash + 1) == std::string::npos &&
                    valid_segment(entry.substr(0, slash)) && valid_segment(entry.substr(slash + 1));
    if (!ok) fail("{}:{}: malformed entry '{}', expected <sequence>/<clip>", list_file, lineno, entry);
    entries.push_back(entry);
  }
  return entries;
}

VimeoTriplets::VimeoTriplets(std::string root, const std::string& list_file)
    : root_(std::move(root)), entries_(read_triplet_list(list_file)) {}

Triplet VimeoTriplets::get(std::size_t index) const {
  const std::string& entry = entries_.at(index);
  Tensor frames[3];
  for (int k = 0; k < 3; ++k) {
    const fs::path path = fs::path(root_) / "sequences" / entry / fmt::format("im{}.png", k + 1);
    if (!fs::exists(path)) fail("missing frame '{}'", path.string());
    frames[k] = read_png(path.string());
  }
  require(frames[0].shape() == frames[1].shape() && frames[1].shape() == frames[2].shape(),
          "triplet '{}' has frames of different sizes", entry);
  return Triplet{std::move(frames[0]), std::move(frames[1]), std::move(frames[2]), entry};
}

std::optional<Triplet> TripletStream::next() {
  if (pos_ >= source_.size()) return std::nullopt;
  return source_.get(pos_++);
}

std::string write_vimeo_layout(const std::string& root, const std::vector<Triplet>& triplets,
                               const std::string& list_name) {
  const fs::path base(root);
  fs::create_directories(base / "sequences");
  std::string list;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const std::string entry = fmt::format("{:05d}/{:04d}", i / 1000 + 1, i % 1000 + 1);
    const fs::path dir = base / "sequences" / entry;
    fs::create_directories(dir);
    write_png((dir / "im1.png").string(), triplets[i].first);
    write_png((dir / "im2.png").string(), triplets[i].middle);
    write_png((dir / "im3.png").string(), triplets[i].last);
    list += entry + "\n";
  }
  const fs::path list_path = base / list_name;
  const fs::path tmp = list_path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << list;
    if (!out) fail("cannot write '{}'", tmp.string());
  }
  fs::rename(tmp, list_path);
  return list_path.string();
}

AugmentationPolicy AugmentationPolicy::from(const TrainConfig& cfg) {
  AugmentationPolicy p;
  p.flip_horizontal = cfg.flip_horizontal;
  p.flip_vertical = cfg.flip_vertical;
  p.temporal_reverse = cfg.temporal_reverse;
  p.scale_min = cfg.scale_min;
  p.scale_max = cfg.scale_max;
  p.rotation_degrees = cfg.rotation_degrees;
  p.crop_size = cfg.crop_size;
  return p;
}

Triplet augment(const Triplet& t, const AugmentationPolicy& policy, std::uint64_t seed) {
  require(policy.scale_min > 0 && policy.scale_min <= policy.scale_max,
          "augment: bad scale range [{}, {}]", policy.scale_min, policy.scale_max);
  require(policy.rotation_degrees >= 0, "augment: rotation must be non-negative");
  std::mt19937_64 rng(splitmix(seed));
  // Fixed draw order keeps each decision independent of the others' flags.
  const double u_scale = u01(rng);
  const double u_rot = u01(rng);
  const double u_top = u01(rng);
  const double u_left = u01(rng);
  const double u_fh = u01(rng);
  const double u_fv = u01(rng);
  const double u_rev = u01(rng);

  Tensor f[3] = {t.first, t.middle, t.last};
  const double scale = policy.scale_min + (policy.scale_max - policy.scale_min) * u_scale;
  if (scale != 1.0) {
    const Shape s = f[0].shape();
    const int oh = std::max(1, static_cast<int>(std::lround(s.h * scale)));
    const int ow = std::max(1, static_cast<int>(std::lround(s.w * scale)));
    for (auto& img : f) img = resize(img, oh, ow);
  }
  if (policy.rotation_degrees > 0) {
    const double deg = (2.0 * u_rot - 1.0) * policy.rotation_degrees;
    if (deg != 0.0) {
      for (auto& img : f) img = rotate(img, deg * std::numbers::pi / 180.0);
    }
  }
  if (policy.crop_size > 0) {
    const Shape s = f[0].shape();
    require(policy.crop_size <= s.h && policy.crop_size <= s.w,
            "augment: crop {} exceeds frame {}x{}", policy.crop_size, s.w, s.h);
    const int top = std::min(s.h - policy.crop_size,
                             static_cast<int>(u_top * (s.h - policy.crop_size + 1)));
    const int left = std::min(s.w - policy.crop_size,
                              static_cast<int>(u_left * (s.w - policy.crop_size + 1)));
    for (auto& img : f) img = crop(img, top, left, policy.crop_size);
  }
  if (policy.flip_horizontal && u_fh < 0.5) {
    for (auto& img : f) img = flip(img, true);
  }
  if (policy.flip_vertical && u_fv < 0.5) {
    for (auto& img : f) img = flip(img, false);
  }
  if (policy.temporal_reverse && u_rev < 0.5) std::swap(f[0], f[2]);
  return Triplet{std::move(f[0]), std::move(f[1]), std::move(f[2]), t.source_id};
}

MotionSpec parse_motion_spec(const std::string& text) {
  if (text == "static") return MotionSpec::static_scene;
  if (text == "small") return MotionSpec::small;
  if (text == "large") return MotionSpec::large;
  if (text == "mixed") return MotionSpec::mixed;
  fail("unknown motion spec '{}' (expected static, small, large or mixed)", text);
}

std::string motion_spec_name(MotionSpec spec) {
  switch (spec) {
    case MotionSpec::static_scene: return "static";
    case MotionSpec::small: return "small";
    case MotionSpec::large: return "large";
    case MotionSpec::mixed: return "mixed";
  }
  return "?";
}

SyntheticScene random_scene(int size, MotionSpec motion, std::mt19937_64& rng) {
  SyntheticScene scene;
  scene.size = size;
  const double small = size / 32.0;
  const double large = size / 8.0;
  auto max_motion = [&]() {
    switch (motion) {
      case MotionSpec::static_scene: return 0.0;
      case MotionSpec::small: return small;
      case MotionSpec::large: return large;
      case MotionSpec::mixed: return u01(rng) < 0.5 ? small : large;
    }
    return 0.0;
  };
  for (double& b : scene.background) b = uniform(rng, 0.3, 0.7);
  for (int i = 0; i < 3; ++i) scene.background_waves.push_back(random_wave(rng, size, 0.02, 0.09));
  random_velocity(rng, max_motion(), scene.bg_vx, scene.bg_vy);
  const int count = 3 + static_cast<int>(u01(rng) * 4);
  for (int i = 0; i < count; ++i) {
    SyntheticObject o;
    o.disk = u01(rng) < 0.5;
    o.cx = uniform(rng, 0.1 * size, 0.9 * size);
    o.cy = uniform(rng, 0.1 * size, 0.9 * size);
    o.rx = uniform(rng, size / 16.0, size / 5.0);
    o.ry = o.disk ? o.rx : uniform(rng, size / 16.0, size / 5.0);
    for (double& c : o.color) c = uniform(rng, 0.15, 0.85);
    o.texture = random_wave(rng, size, 0.03, 0.12);
    random_velocity(rng, max_motion(), o.vx, o.vy);
    scene.objects.push_back(o);
  }
  return scene;
}

Tensor render_scene(const SyntheticScene& scene, double t) {
  const int s = scene.size;
  Tensor out(Shape{1, 3, s, s});
  const double dt = t - 0.5;
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      double px[3];
      const double bx = x - scene.bg_vx * dt;
      const double by = y - scene.bg_vy * dt;
      for (int c = 0; c < 3; ++c) {
        px[c] = scene.background[c];
        for (const auto& w : scene.background_waves) px[c] += wave(w, c, bx, by);
      }
      for (const auto& o : scene.objects) {
        const double dx = x - (o.cx + o.vx * dt);
        const double dy = y - (o.cy + o.vy * dt);
        const double cov = o.disk ? coverage(o.rx - std::hypot(dx, dy))
                                  : coverage(o.rx - std::abs(dx)) * coverage(o.ry - std::abs(dy));
        if (cov <= 0.0) continue;
        for (int c = 0; c < 3; ++c) {
          const double col = o.color[c] + wave(o.texture, c, dx, dy);
          px[c] = cov * col + (1.0 - cov) * px[c];
        }
      }
      for (int c = 0; c < 3; ++c) out.at(0, c, y, x) = static_cast<float>(std::clamp(px[c], 0.0, 1.0));
    }
  }
  return out;
}

Triplet render_triplet(const SyntheticScene& scene, std::string source_id) {
  return Triplet{render_scene(scene, 0.0), render_scene(scene, 0.5), render_scene(scene, 1.0),
                 std::move(source_id)};
}

std::vector<Triplet> generate_synthetic_triplets(int count, int size, MotionSpec motion,
                                                 std::uint64_t seed) {
  require(count >= 0, "synthetic: count must be non-negative");
  require(size >= 32 && size % 32 == 0, "synthetic: size {} must be a positive multiple of 32", size);
  std::vector<Triplet> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(mix(seed, static_cast<std::uint64_t>(i)));
    out.push_back(render_triplet(random_scene(size, motion, rng), fmt::format("synthetic/{:05d}", i)));
  }
  return out;
}

FlowMode hd_flow_path_sampler(double p, std::mt19937_64& rng) {
  require(p >= 0.0 && p <= 1.0, "hd sampler: probability {} outside [0, 1]", p);
  return u01(rng) < p ? FlowMode::downscaled_flow : FlowMode::original_flow;
}

Batch make_batch(const std::vector<Triplet>& triplets) {
  require(!triplets.empty(), "make_batch: no triplets");
  const Shape s = triplets.front().first.shape();
  const Shape bs{static_cast<int>(triplets.size()), s.c, s.h, s.w};
  Batch b{Tensor(bs), Tensor(bs), Tensor(bs)};
  for (int i = 0; i < bs.n; ++i) {
    const Triplet& t = triplets[i];
    require(t.first.shape() == s && t.middle.shape() == s && t.last.shape() == s,
            "make_batch: triplet {} has shape {}, expected {}", i, t.first.shape().str(), s.str());
    std::copy_n(t.first.data(), s.item(), b.first.item(i));
    std::copy_n(t.middle.data(), s.item(), b.middle.item(i));
    std::copy_n(t.last.data(), s.item(), b.last.item(i));
  }
  return b;
}

namespace {

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(mix(seed, epoch));
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(u01(rng) * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
  }
  return perm;
}

}  // namespace

std::size_t stream_index(std::size_t dataset_size, std::uint64_t seed, std::uint64_t serial) {
  require(dataset_size > 0, "stream_index: empty dataset");
  return epoch_permutation(dataset_size, seed, serial / dataset_size)[serial % dataset_size];
}

BatchStream::BatchStream(const TripletSource& source, AugmentationPolicy policy, int batch_size,
                         std::uint64_t seed, int workers)
    : source_(source), policy_(policy), batch_size_(batch_size), seed_(seed), workers_(workers) {
  require(source.size() > 0, "batch stream: dataset is empty");
  require(batch_size > 0, "batch stream: batch size must be positive");
  require(workers >= 1, "batch stream: need at least one worker");
}

Triplet BatchStream::produce(std::uint64_t serial) const {
  const std::size_t n = source_.size();
  const std::size_t index = stream_index(n, seed_, serial);
  return augment(source_.get(index), policy_, mix(seed_ ^ 0xa0761f62ull, serial));
}

void BatchStream::refill() {
  const std::size_t want = static_cast<std::size_t>(std::max(batch_size_, workers_));
  const auto policy = workers_ > 1 ? std::launch::async : std::launch::deferred;
  while (pending_.size() < want) {
    const std::uint64_t serial = scheduled_++;
    pending_.push_back(std::async(policy, [this, serial] { return produce(serial); }));
  }
}

Batch BatchStream::next() {
  refill();
  std::vector<Triplet> items;
  items.reserve(batch_size_);
  for (int i = 0; i < batch_size_; ++i) {
    items.push_back(pending_.front().get());
    pending_.pop_front();
    ++consumed_;
  }
  epoch_ = consumed_ / source_.size();
  refill();
  return make_batch(items);
}

void BatchStream::seek(std::uint64_t consumed) {
  pending_.clear();  // async futures join on destruction; deferred ones never run
  consumed_ = consumed;
  scheduled_ = consumed;
  epoch_ = consumed_ / source_.size();
}

}  // namespace ladder

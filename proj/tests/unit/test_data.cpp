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
#include <fstream>
#include <map>

#include <unistd.h>

#include "../support.hpp"
#include "ladder/data.hpp"
#include "ladder/error.hpp"
#include "ladder/image_io.hpp"

using namespace ladder;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("ladder_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

bool same(const Triplet& a, const Triplet& b) {
  return bitwise_equal(a.first, b.first) && bitwise_equal(a.middle, b.middle) &&
         bitwise_equal(a.last, b.last);
}

Triplet random_triplet(int h, int w, std::uint64_t seed) {
  return Triplet{test::random_tensor(Shape{1, 3, h, w}, seed, 0, 1),
                 test::random_tensor(Shape{1, 3, h, w}, seed + 1, 0, 1),
                 test::random_tensor(Shape{1, 3, h, w}, seed + 2, 0, 1), "t"};
}

// Intensity-weighted column centroid of pixels that differ from the background.
double centroid_x(const Tensor& img, float background) {
  double sum = 0, weight = 0;
  for (int y = 0; y < img.shape().h; ++y) {
    for (int x = 0; x < img.shape().w; ++x) {
      const double d = std::abs(img.at(0, 0, y, x) - background);
      sum += d * x;
      weight += d;
    }
  }
  return sum / weight;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("triplet list parsing") {
  TempDir dir("list");
  write_text(dir.path / "ok.txt", "00001/0001\n\n  00001/0002  \r\n00002/0001\n");
  CHECK(read_triplet_list((dir.path / "ok.txt").string()) ==
        std::vector<std::string>{"00001/0001", "00001/0002", "00002/0001"});
  write_text(dir.path / "empty.txt", "");
  CHECK(read_triplet_list((dir.path / "empty.txt").string()).empty());

  for (const char* bad : {"00001\n", "a/b/c\n", "../x\n", "a b/c\n", "a\\b/c\n", "/x\n"}) {
    write_text(dir.path / "bad.txt", std::string("00001/0001\n") + bad);
    const std::string msg = error_of([&] { read_triplet_list((dir.path / "bad.txt").string()); });
    CAPTURE(bad);
    CHECK(msg.find("bad.txt:2: malformed entry") != std::string::npos);
  }
  CHECK(error_of([&] { read_triplet_list((dir.path / "nope.txt").string()); }).find("nope.txt") !=
        std::string::npos);
}

TEST_CASE("vimeo layout round trip and lazy decoding") {
  TempDir dir("vimeo");
  std::vector<Triplet> ts;
  for (int i = 0; i < 3; ++i) ts.push_back(random_triplet(256, 448, 10 * i));
  const std::string list = write_vimeo_layout(dir.path.string(), ts);
  const VimeoTriplets data(dir.path.string(), list);
  REQUIRE(data.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const Triplet t = data.get(i);
    CHECK(t.first.shape() == Shape{1, 3, 256, 448});
    CHECK(bitwise_equal(t.middle, quantize8(ts[i].middle)));
  }
  TripletStream stream(data);
  int n = 0;
  while (stream.next()) ++n;
  CHECK(n == 3);

  fs::remove(dir.path / "sequences" / data.entries()[1] / "im2.png");
  const std::string msg = error_of([&] { data.get(1); });
  CHECK(msg.find(data.entries()[1]) != std::string::npos);
  CHECK(msg.find("im2.png") != std::string::npos);
}

TEST_CASE("empty list gives an empty stream") {
  TempDir dir("emptylist");
  write_text(dir.path / "tri_trainlist.txt", "\n");
  const VimeoTriplets data(dir.path.string(), (dir.path / "tri_trainlist.txt").string());
  TripletStream stream(data);
  CHECK_FALSE(stream.next().has_value());
}

TEST_CASE("identity augmentation returns the input") {
  const Triplet t = random_triplet(32, 48, 1);
  CHECK(same(augment(t, AugmentationPolicy::identity(), 123), t));
}

TEST_CASE("forced reversal swaps the outer frames") {
  const Triplet t = random_triplet(16, 16, 2);
  AugmentationPolicy p;
  p.temporal_reverse = true;
  int reversed = 0;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    const Triplet r = augment(t, p, seed);
    CHECK(bitwise_equal(r.middle, t.middle));
    if (bitwise_equal(r.first, t.last)) {
      CHECK(bitwise_equal(r.last, t.first));
      ++reversed;
    } else {
      CHECK(same(r, t));
    }
  }
  CHECK(reversed > 16);
  CHECK(reversed < 48);
}

TEST_CASE("augmentation is deterministic in the seed") {
  const Triplet t = random_triplet(64, 80, 3);
  TrainConfig cfg;
  cfg.crop_size = 32;
  const AugmentationPolicy p = AugmentationPolicy::from(cfg);
  CHECK(p.rotation_degrees == 45.0);
  const Triplet a = augment(t, p, 99);
  const Triplet b = augment(t, p, 99);
  CHECK(same(a, b));
  CHECK(a.first.shape() == Shape{1, 3, 32, 32});
  CHECK_FALSE(same(a, augment(t, p, 100)));
  AugmentationPolicy too_big;
  too_big.crop_size = 96;
  CHECK_THROWS_AS(augment(t, too_big, 0), Error);
}

TEST_CASE("spatial augmentation keeps the temporal midpoint") {
  // Uniform motion: the transformed middle frame stays the average pose, so
  // re-rendering is not needed; a static scene must stay static.
  std::mt19937_64 rng(4);
  const Triplet t = render_triplet(random_scene(64, MotionSpec::static_scene, rng));
  TrainConfig cfg;
  cfg.crop_size = 64;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Triplet a = augment(t, AugmentationPolicy::from(cfg), seed);
    CHECK(bitwise_equal(a.first, a.middle));
    CHECK(bitwise_equal(a.last, a.middle));
  }
}

TEST_CASE("static synthetic triplets are identical frames") {
  for (const Triplet& t : generate_synthetic_triplets(3, 64, MotionSpec::static_scene, 5)) {
    CHECK(bitwise_equal(t.first, t.middle));
    CHECK(bitwise_equal(t.middle, t.last));
  }
}

TEST_CASE("disk moving from x=10 to x=20 sits at x=15 in the middle") {
  SyntheticScene scene;
  scene.size = 32;
  for (double& b : scene.background) b = 0.2;
  SyntheticObject disk;
  disk.cx = 15;
  disk.cy = 16;
  disk.rx = disk.ry = 4;
  disk.vx = 10;
  for (double& c : disk.color) c = 0.9;
  scene.objects.push_back(disk);
  const Triplet t = render_triplet(scene);
  CHECK(centroid_x(t.first, 0.2f) == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(centroid_x(t.middle, 0.2f) == doctest::Approx(15.0).epsilon(1e-6));
  CHECK(centroid_x(t.last, 0.2f) == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("synthetic generation is seeded") {
  const auto a = generate_synthetic_triplets(4, 64, MotionSpec::mixed, 7);
  const auto b = generate_synthetic_triplets(4, 64, MotionSpec::mixed, 7);
  const auto c = generate_synthetic_triplets(4, 64, MotionSpec::mixed, 8);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(same(a[i], b[i]));
  CHECK_FALSE(same(a[0], c[0]));
  CHECK_THROWS_AS(generate_synthetic_triplets(1, 100, MotionSpec::small, 0), Error);
  CHECK(parse_motion_spec("static") == MotionSpec::static_scene);
  CHECK_THROWS_AS(parse_motion_spec("fast"), Error);
}

TEST_CASE("motion magnitudes follow the split") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const SyntheticScene s = random_scene(128, MotionSpec::small, rng);
    for (const auto& o : s.objects) CHECK(std::hypot(o.vx, o.vy) <= 128 / 32.0 + 1e-9);
  }
  double largest = 0;
  for (int i = 0; i < 20; ++i) {
    const SyntheticScene s = random_scene(128, MotionSpec::large, rng);
    for (const auto& o : s.objects) largest = std::max(largest, std::hypot(o.vx, o.vy));
  }
  CHECK(largest > 128 / 32.0);
  CHECK(largest <= 128 / 8.0 + 1e-9);
}

TEST_CASE("hd flow path sampler") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) CHECK(hd_flow_path_sampler(0.0, rng) == FlowMode::original_flow);
  for (int i = 0; i < 100; ++i) CHECK(hd_flow_path_sampler(1.0, rng) == FlowMode::downscaled_flow);
  std::mt19937_64 fixed(12);
  int down = 0;
  for (int i = 0; i < 10000; ++i) down += hd_flow_path_sampler(0.5, fixed) == FlowMode::downscaled_flow;
  CHECK(down >= 4700);
  CHECK(down <= 5300);
  CHECK_THROWS_AS(hd_flow_path_sampler(1.5, rng), Error);
}

TEST_CASE("batch stream visits each sample once per epoch") {
  std::vector<Triplet> ts;
  for (int i = 0; i < 7; ++i) ts.push_back(random_triplet(8, 8, 100 + 3 * i));
  const InMemoryTriplets data(ts);
  std::map<std::size_t, int> seen;
  for (std::uint64_t s = 0; s < 7; ++s) ++seen[stream_index(7, 13, s)];
  CHECK(seen.size() == 7);
  std::map<std::size_t, int> second;
  for (std::uint64_t s = 7; s < 14; ++s) ++second[stream_index(7, 13, s)];
  CHECK(second.size() == 7);

  BatchStream stream(data, AugmentationPolicy::identity(), 3, 13);
  const Batch b = stream.next();
  CHECK(b.first.shape() == Shape{3, 3, 8, 8});
  for (int k = 0; k < 3; ++k) {
    const Triplet& src = ts[stream_index(7, 13, k)];
    CHECK(std::equal(src.middle.data(), src.middle.data() + src.middle.numel(), b.middle.item(k)));
  }
  CHECK(stream.consumed() == 3);
}

TEST_CASE("worker count never changes the stream") {
  std::vector<Triplet> ts;
  for (int i = 0; i < 5; ++i) ts.push_back(random_triplet(64, 64, 200 + 3 * i));
  const InMemoryTriplets data(ts);
  TrainConfig cfg;
  cfg.crop_size = 32;
  BatchStream one(data, AugmentationPolicy::from(cfg), 2, 21, 1);
  BatchStream four(data, AugmentationPolicy::from(cfg), 2, 21, 4);
  for (int i = 0; i < 6; ++i) {
    const Batch a = one.next();
    const Batch b = four.next();
    CHECK(bitwise_equal(a.first, b.first));
    CHECK(bitwise_equal(a.middle, b.middle));
    CHECK(bitwise_equal(a.last, b.last));
  }
}

TEST_CASE("seek resumes the same stream") {
  std::vector<Triplet> ts;
  for (int i = 0; i < 5; ++i) ts.push_back(random_triplet(32, 32, 300 + 3 * i));
  const InMemoryTriplets data(ts);
  TrainConfig cfg;
  cfg.crop_size = 32;
  BatchStream ref(data, AugmentationPolicy::from(cfg), 2, 5);
  for (int i = 0; i < 3; ++i) ref.next();
  const std::uint64_t pos = ref.consumed();
  const Batch expect = ref.next();
  BatchStream resumed(data, AugmentationPolicy::from(cfg), 2, 5, 2);
  resumed.seek(pos);
  const Batch got = resumed.next();
  CHECK(bitwise_equal(expect.first, got.first));
  CHECK(bitwise_equal(expect.last, got.last));
}

TEST_CASE("png round trip") {
  TempDir dir("png");
  const Tensor img = test::random_tensor(Shape{1, 3, 9, 13}, 31, 0, 1);
  const std::string p = (dir.path / "a.png").string();
  write_png(p, img);
  CHECK(bitwise_equal(read_png(p), quantize8(img)));
  CHECK_FALSE(fs::exists(p + ".tmp"));
  write_text(dir.path / "bad.png", "not a png");
  CHECK_THROWS_AS(read_png((dir.path / "bad.png").string()), Error);
}

}  // TEST_SUITE

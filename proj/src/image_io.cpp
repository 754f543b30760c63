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

#include "ladder/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include <png.h>

#include "ladder/error.hpp"

namespace ladder {

namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

Tensor read_png(const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
    fail("cannot read PNG '{}': {}", path, image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail("cannot decode PNG '{}': {}", path, msg);
  }
  const int h = static_cast<int>(image.height);
  const int w = static_cast<int>(image.width);
  Tensor out(Shape{1, 3, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t* px = buf.data() + (static_cast<std::size_t>(y) * w + x) * 3;
      for (int c = 0; c < 3; ++c) out.at(0, c, y, x) = px[c] / 255.0f;
    }
  }
  return out;
}

void write_png(const std::string& path, const Tensor& img, int item) {
  const Shape s = img.shape();
  require(s.c == 3 && item >= 0 && item < s.n, "write_png: need an RGB item, got {} (item {})",
          s.str(), item);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(s.h) * s.w * 3);
  for (int y = 0; y < s.h; ++y) {
    for (int x = 0; x < s.w; ++x) {
      std::uint8_t* px = buf.data() + (static_cast<std::size_t>(y) * s.w + x) * 3;
      for (int c = 0; c < 3; ++c) px[c] = to_byte(img.at(item, c, y, x));
    }
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(s.w);
  image.height = static_cast<png_uint_32>(s.h);
  image.format = PNG_FORMAT_RGB;
  const std::string tmp = path + ".tmp";
  if (png_image_write_to_file(&image, tmp.c_str(), 0, buf.data(), 0, nullptr) == 0) {
    std::remove(tmp.c_str());
    fail("cannot write PNG '{}': {}", path, image.message);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    fail("cannot move PNG into place at '{}': {}", path, ec.message());
  }
}

Tensor quantize8(const Tensor& img) {
  Tensor out = img;
  for (float& v : out.span()) v = to_byte(v) / 255.0f;
  return out;
}

}  // namespace ladder

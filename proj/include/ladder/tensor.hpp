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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ladder {

/// NCHW extents. Every tensor in the library is four-dimensional; scalars are
/// 1x1x1x1 and weight matrices use (out, in, kh, kw).
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  constexpr std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  constexpr std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  constexpr std::size_t item() const { return static_cast<std::size_t>(c) * h * w; }
  constexpr bool same_spatial(const Shape& o) const { return h == o.h && w == o.w; }

  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  std::string str() const;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> span() noexcept { return data_; }
  std::span<const float> span() const noexcept { return data_; }

  float* item(int n) noexcept { return data_.data() + n * shape_.item(); }
  const float* item(int n) const noexcept { return data_.data() + n * shape_.item(); }
  float* plane(int n, int c) noexcept { return item(n) + c * shape_.plane(); }
  const float* plane(int n, int c) const noexcept { return item(n) + c * shape_.plane(); }

  float& at(int n, int c, int y, int x) noexcept {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  float at(int n, int c, int y, int x) const noexcept {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }

  void fill(float value);
  /// Same values, new extents with equal element count.
  Tensor reshaped(Shape shape) const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_{};
  std::vector<float> data_;
};

/// True when both tensors have identical shape and bit patterns.
bool bitwise_equal(const Tensor& a, const Tensor& b);

float max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace ladder

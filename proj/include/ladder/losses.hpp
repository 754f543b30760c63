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

#include <array>
#include <span>

#include "ladder/autograd.hpp"
#include "ladder/config.hpp"

namespace ladder {

/// Dense double-precision image batch used by the loss and metric cores.
struct ImageView {
  std::span<const double> data;
  int n = 0, c = 0, h = 0, w = 0;
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t size() const { return plane() * n * c; }
};

inline constexpr double kCharbonnierEps = 1e-6;
inline constexpr int kLaplacianLevels = 5;
inline constexpr double kPhaseAmplitudeFloor = 1e-8;

// Each core returns the loss and, when `grad` is non-empty, adds d loss /
// d pred into it (same layout as pred).

/// mean(sqrt((pred - gt)^2 + eps^2)).
double charbonnier_loss(const ImageView& pred, const ImageView& gt, std::span<double> grad = {});

/// Sum over 5 bands of 2^(i-1) * mean|L^i(pred) - L^i(gt)|. Bands 1..4 are
/// band-pass, band 5 is the low-pass residual. Dims must be multiples of 16.
double laplacian_loss(const ImageView& pred, const ImageView& gt, std::span<double> grad = {});

/// Per-band weighted terms of laplacian_loss (index 0 is band 1).
std::array<double, kLaplacianLevels> laplacian_band_terms(const ImageView& pred, const ImageView& gt);

struct FrequencyTerms {
  double amplitude = 0.0;  // mean | |F(pred)| - |F(gt)| |
  double phase = 0.0;      // mean |angle F(pred) - angle F(gt)| over bins with |F(gt)| >= floor
  double loss() const { return 0.5 * amplitude + 0.5 * phase; }
};

FrequencyTerms frequency_terms(const ImageView& pred, const ImageView& gt, std::span<double> grad = {});
double frequency_loss(const ImageView& pred, const ImageView& gt, std::span<double> grad = {});

struct LossReport {
  double charbonnier = 0.0;
  double laplacian = 0.0;
  double frequency = 0.0;
  double total = 0.0;
};

LossReport total_loss(const ImageView& pred, const ImageView& gt, const LossWeights& w,
                      std::span<double> grad = {});

// Float-tensor conveniences.
double charbonnier_loss(const Tensor& pred, const Tensor& gt);
double laplacian_loss(const Tensor& pred, const Tensor& gt);
double frequency_loss(const Tensor& pred, const Tensor& gt);
LossReport total_loss(const Tensor& pred, const Tensor& gt, const LossWeights& w);

/// Differentiable total loss w.r.t. pred; the report is filled when given.
Variable total_loss(const Variable& pred, const Tensor& gt, const LossWeights& w,
                    LossReport* report = nullptr);

/// Charbonnier only, differentiable (auxiliary supervision).
Variable charbonnier_loss(const Variable& pred, const Tensor& gt);

}  // namespace ladder

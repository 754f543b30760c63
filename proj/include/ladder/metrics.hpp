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

#include "ladder/losses.hpp"
#include "ladder/tensor.hpp"

namespace ladder {

inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over every element; identical inputs give kPsnrCap.
double psnr(const Tensor& a, const Tensor& b);
double psnr(const ImageView& a, const ImageView& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Mean local SSIM over channels and all valid 11x11 Gaussian windows
/// (K1 = 0.01, K2 = 0.03, dynamic range 1).
double ssim(const Tensor& a, const Tensor& b);
double ssim(const ImageView& a, const ImageView& b);

}  // namespace ladder

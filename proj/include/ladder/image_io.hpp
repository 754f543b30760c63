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

#include <string>

#include "ladder/tensor.hpp"

namespace ladder {

/// Decodes any PNG to an RGB (1, 3, H, W) tensor in [0, 1].
Tensor read_png(const std::string& path);

/// Writes item `item` of an RGB tensor as 8-bit PNG (values clamped and
/// rounded). The file appears atomically.
void write_png(const std::string& path, const Tensor& img, int item = 0);

/// Rounds to the 8-bit grid, as a PNG round trip would.
Tensor quantize8(const Tensor& img);

}  // namespace ladder

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

#include <atomic>
#include <cstdlib>
#include <string>

#include "ladder/error.hpp"
#include "ladder/simd/kernels.hpp"

namespace ladder::simd {

#if defined(LADDER_HAVE_AVX2)
namespace avx2 {
const KernelTable& table();
}
#endif

const CpuFeatures& cpu_features() {
  static const CpuFeatures features = [] {
    CpuFeatures f;
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    f.avx2 = __builtin_cpu_supports("avx2");
    f.fma = __builtin_cpu_supports("fma");
    f.avx512f = __builtin_cpu_supports("avx512f");
#endif
    return f;
  }();
  return features;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable* avx2_kernels() {
#if defined(LADDER_HAVE_AVX2)
  const auto& f = cpu_features();
  if (f.avx2 && f.fma) return &avx2::table();
#endif
  return nullptr;
}

namespace {

const KernelTable* initial_table() {
  const char* env = std::getenv("LADDER_SIMD");
  const std::string choice = env != nullptr ? env : "auto";
  if (choice == "scalar") return &scalar_kernels();
  if (choice == "avx2") {
    const KernelTable* t = avx2_kernels();
    require(t != nullptr, "LADDER_SIMD=avx2 requested but AVX2/FMA is unavailable");
    return t;
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& kernels() { return *active().load(std::memory_order_relaxed); }

void select_kernels(Isa isa) {
  if (isa == Isa::scalar) {
    active().store(&scalar_kernels());
    return;
  }
  const KernelTable* t = avx2_kernels();
  require(t != nullptr, "AVX2 kernels are not available on this machine");
  active().store(t);
}

}  // namespace ladder::simd

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

#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace ladder::acceptance {

/// Outcome of one criterion. Every individual check is listed so a failure
/// shows which route disagreed.
class Report {
 public:
  void check(bool ok, std::string what) {
    pass_ = pass_ && ok;
    lines_.push_back(fmt::format("  [{}] {}", ok ? "ok" : "FAIL", what));
  }
  void note(std::string what) { lines_.push_back("  " + std::move(what)); }
  bool passed() const { return pass_ && !lines_.empty(); }
  const std::vector<std::string>& lines() const { return lines_; }

 private:
  bool pass_ = true;
  std::vector<std::string> lines_;
};

struct Context {
  std::string work_dir;    // shared scratch space between criteria
  std::string source_dir;  // repository root, for configs/
};

struct Criterion {
  int order = 0;  // position in the report
  std::string name;
  std::string summary;
  std::function<void(const Context&, Report&)> run;
};

std::vector<Criterion>& registry();

struct Register {
  Register(int order, std::string name, std::string summary,
           std::function<void(const Context&, Report&)> fn) {
    registry().push_back({order, std::move(name), std::move(summary), std::move(fn)});
  }
};

}  // namespace ladder::acceptance

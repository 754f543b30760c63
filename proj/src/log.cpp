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

#include "ladder/log.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_color_sinks.h>

#include "ladder/error.hpp"

namespace ladder {

spdlog::level::level_enum parse_log_level(const std::string& name) {
  if (name == "debug") return spdlog::level::debug;
  if (name == "info") return spdlog::level::info;
  if (name == "warn") return spdlog::level::warn;
  fail("LADDER_LOG_LEVEL must be debug, info or warn, got '{}'", name);
}

void init_logging() {
  static bool done = false;
  if (!done) {
    auto logger = spdlog::stderr_color_mt("ladder");
    logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::set_default_logger(logger);
    done = true;
  }
  const char* env = std::getenv("LADDER_LOG_LEVEL");
  spdlog::set_level(env != nullptr && *env != '\0' ? parse_log_level(env) : spdlog::level::info);
}

}  // namespace ladder

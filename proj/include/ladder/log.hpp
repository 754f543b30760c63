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

#include <spdlog/spdlog.h>

namespace ladder {

/// Routes library logging to stderr. The level comes from LADDER_LOG_LEVEL
/// (debug, info, warn; default info); anything else is a user error.
void init_logging();

/// Parses a level name; throws on unknown names.
spdlog::level::level_enum parse_log_level(const std::string& name);

}  // namespace ladder

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

namespace ladder {

/// Entry point of the `ladder` tool. Returns 0 on success, 1 for user errors
/// (bad paths, configs, arguments), 2 for internal failures.
int run_cli(int argc, char** argv);

}  // namespace ladder

// Copyright 2026 The sqlpref Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace sqlpref::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;  // bad flags, missing or malformed inputs
inline constexpr int kExitRuntime = 2;     // I/O, database, or endpoint failures

/// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

} // namespace sqlpref::cli

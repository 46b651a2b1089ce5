// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>

namespace svae {

/// Writes "slowvae: warning: <msg>" to stderr unless warnings are silenced.
void warn(std::string_view msg);
/// Writes "slowvae: <msg>" to stderr when verbose logging is on.
void info(std::string_view msg);

void set_warnings_enabled(bool on);
void set_verbose(bool on);
bool verbose();
/// Number of warnings issued by this process so far.
std::uint64_t warning_count();

}  // namespace svae

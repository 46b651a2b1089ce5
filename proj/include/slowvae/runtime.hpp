// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace svae {

/// Raises the glibc mmap and trim thresholds so the per-batch temporaries of
/// training are recycled from the heap instead of mapped and unmapped on
/// every step. A no-op on other C libraries. Safe to call more than once.
void tune_allocator();

}  // namespace svae

// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "slowvae/runtime.hpp"

#if __has_include(<malloc.h>)
#include <malloc.h>
#endif

namespace svae {

void tune_allocator() {
#if defined(__GLIBC__) && defined(M_MMAP_THRESHOLD)
  constexpr int kThreshold = 1 << 30;
  mallopt(M_MMAP_THRESHOLD, kThreshold);
  mallopt(M_TRIM_THRESHOLD, kThreshold);
#endif
}

}  // namespace svae

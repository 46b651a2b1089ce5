// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "slowvae/log.hpp"
#include "slowvae/runtime.hpp"

int main(int argc, char** argv) {
  svae::tune_allocator();
  svae::set_warnings_enabled(false);
  doctest::Context context(argc, argv);
  return context.run();
}

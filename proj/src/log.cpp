// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "slowvae/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace svae {

namespace {
std::atomic<bool> g_warnings{true};
std::atomic<bool> g_verbose{false};
std::atomic<std::uint64_t> g_count{0};
std::mutex g_mu;
}  // namespace

void warn(std::string_view msg) {
  g_count.fetch_add(1);
  if (!g_warnings.load()) return;
  std::lock_guard lock(g_mu);
  std::cerr << "slowvae: warning: " << msg << '\n';
}

void info(std::string_view msg) {
  if (!g_verbose.load()) return;
  std::lock_guard lock(g_mu);
  std::cerr << "slowvae: " << msg << '\n';
}

void set_warnings_enabled(bool on) { g_warnings.store(on); }
void set_verbose(bool on) { g_verbose.store(on); }
bool verbose() { return g_verbose.load(); }
std::uint64_t warning_count() { return g_count.load(); }

}  // namespace svae

// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace svae {

/// Mixes a master seed with a stream index (SplitMix64 finalizer).
/// Used to give every sequence, run and sub-task an independent stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Seeded generator. The output stream is a pure function of the seed and
/// the sequence of calls made on it; nothing depends on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be positive.
  std::size_t index(std::size_t n);
  /// Standard normal draw (Box-Muller, second value cached).
  double normal();

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// n independent N(0,1) draws. n must be at least 1.
Eigen::VectorXd sample_standard_normal(Rng& rng, std::size_t n);

/// Fills a matrix with N(0,1) draws in column-major order.
Eigen::MatrixXd sample_standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols);

/// In-place Fisher-Yates shuffle driven by `rng`.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.index(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace svae

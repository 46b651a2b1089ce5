// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0
//
// Closed-form algebra for diagonal Gaussians: the approximate posterior,
// the distribution of the difference of two latents, the Brownian
// increment prior, and the two KL divergences the training loss needs.
//
// Variances live in log space. Before exponentiation every log-variance is
// clamped to [kLogVarMin, kLogVarMax]; each clamped value bumps a
// per-thread counter that the trainer reports as a health signal.

#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace svae {

inline constexpr double kLogVarMin = -20.0;
inline constexpr double kLogVarMax = 20.0;

struct DiagonalGaussian {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_var;

  DiagonalGaussian() = default;
  DiagonalGaussian(Eigen::VectorXd m, Eigen::VectorXd lv);

  static DiagonalGaussian standard(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  /// exp(log_var) after clamping.
  Eigen::VectorXd variance() const;
};

/// Clamps to the representable log-variance range, counting clamp events.
double clamp_log_var(double lv);
std::uint64_t log_var_clamp_events();
void reset_log_var_clamp_events();

/// Pair of indices (i, j), i < j, taken from one sequence.
struct TemporalPair {
  std::size_t first = 0;
  std::size_t second = 0;

  /// Throws InvalidInput unless first < second.
  TemporalPair(std::size_t i, std::size_t j);
  std::size_t delta_t() const { return second - first; }
};

/// KL(q || N(0, I)) = 1/2 sum_d [exp(lv_d) + mu_d^2 - 1 - lv_d].
double kl_to_standard_normal(const DiagonalGaussian& q);

/// Distribution of z_j - z_i for independent z_i ~ q_i, z_j ~ q_j:
/// N(mu_j - mu_i, Sigma_j + Sigma_i).
DiagonalGaussian difference_distribution(const DiagonalGaussian& q_i, const DiagonalGaussian& q_j);

/// Increment of a Brownian motion over delta_t steps: N(0, delta_t I).
DiagonalGaussian brownian_prior(std::size_t dim, double delta_t);

/// KL(difference_distribution(q_i, q_j) || brownian_prior(dim, delta_t)).
double similarity_loss(const DiagonalGaussian& q_i, const DiagonalGaussian& q_j, double delta_t);

struct GaussianGrad {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_var;
};

struct PairGrad {
  GaussianGrad first;   // w.r.t. q_i
  GaussianGrad second;  // w.r.t. q_j
};

/// Partial derivatives of kl_to_standard_normal. Zero for clamped entries.
GaussianGrad kl_standard_gradient(const DiagonalGaussian& q);

/// Partial derivatives of similarity_loss. Zero for clamped entries.
PairGrad similarity_gradient(const DiagonalGaussian& q_i, const DiagonalGaussian& q_j,
                             double delta_t);

}  // namespace svae

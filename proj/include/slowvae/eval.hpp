// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation: test MSE, seed-ensemble bias/variance, data-efficiency
// crossover, latent slowness and latent scatter export.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slowvae/ball_sim.hpp"
#include "slowvae/downstream.hpp"
#include "slowvae/vae.hpp"

namespace svae::eval {

/// Mean over columns of the squared Euclidean error. Throws on empty input
/// or a shape mismatch.
double mean_squared_error(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& labels);

/// Test MSE of a head on the given pairs.
double evaluate_mse(const LatentTable& latents, const DownstreamHead& head,
                    const sim::Dataset& dataset, std::span<const PairIndex> test_pairs);

struct BiasVariance {
  double bias_sq = 0.0;
  double variance = 0.0;
  double mean_mse = 0.0;  // mean over seeds of each seed's MSE
};

/// Squared-error decomposition over a seed ensemble. Each prediction matrix
/// is [label_dim x n_points] and congruent with `labels`. Needs >= 2 seeds.
BiasVariance bias_variance(std::span<const Eigen::MatrixXd> predictions,
                           const Eigen::MatrixXd& labels);

struct SubsetPoint {
  std::size_t n_examples = 0;
  double fraction = 1.0;
  double loss_mean = 0.0;
  double loss_std = 0.0;  // sample standard deviation over seeds
  std::vector<double> per_seed_losses;
};

struct SubsetCurve {
  std::vector<SubsetPoint> points;  // n_examples strictly increasing

  void validate() const;
};

/// Builds a point from per-seed losses.
SubsetPoint make_point(std::size_t n_examples, double fraction, std::vector<double> per_seed_losses);

struct DataEfficiency {
  bool achieved = false;
  double n_needed = 0.0;          // interpolated size at which the candidate hits the target
  double n_reference_best = 0.0;  // size at which the reference attains its best mean loss
  double reference_best_loss = 0.0;
  double percent_savings = 0.0;   // 100 * (1 - n_needed / n_reference_best)
};

/// Smallest n at which `candidate` reaches the best mean loss of
/// `reference`, interpolating linearly in (log n, loss) between grid points.
DataEfficiency data_efficiency(const SubsetCurve& candidate, const SubsetCurve& reference);

struct SlownessResult {
  double ratio = 0.0;
  double consecutive_mean = 0.0;
  double random_mean = 0.0;
  bool degenerate = false;
};

/// Random pairs are enumerated exhaustively up to this many frames and
/// sampled above it.
inline constexpr std::size_t kExhaustiveFrameLimit = 2000;
inline constexpr std::size_t kRandomPairSamples = 200000;

/// Mean latent distance of consecutive frames divided by the mean latent
/// distance of uniformly random frame pairs drawn from the same sequences.
SlownessResult latent_slowness_ratio(const LatentTable& latents,
                                     std::span<const std::size_t> sequences,
                                     std::uint64_t seed = 0);

SlownessResult latent_slowness_ratio(const VaeModel& model, const sim::Dataset& dataset,
                                     std::span<const std::size_t> sequences,
                                     std::uint64_t seed = 0);

struct ScatterRow {
  double ball_x = 0.0;
  double ball_y = 0.0;
  std::size_t latent_index = 0;
  double value = 0.0;
};

/// Samples `n_samples` frames without replacement and emits one row per
/// (frame, latent dimension). Ball centers come from the simulator state, so
/// the dataset must carry positions.
std::vector<ScatterRow> export_latent_scatter(const LatentTable& latents, const sim::Dataset& dataset,
                                              std::size_t n_samples, std::uint64_t seed);

std::vector<ScatterRow> export_latent_scatter(const VaeModel& model, const sim::Dataset& dataset,
                                              std::size_t n_samples, std::uint64_t seed);

}  // namespace svae::eval

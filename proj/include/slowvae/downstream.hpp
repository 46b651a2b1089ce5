// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0
//
// Few-shot regression on top of a frozen encoder. A pair of consecutive
// frames is encoded to posterior means, the two means are concatenated and
// fed to a small dense head trained with squared error against the labels.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slowvae/ball_sim.hpp"
#include "slowvae/nn.hpp"
#include "slowvae/vae.hpp"

namespace svae {

struct HeadConfig {
  std::size_t hidden_width = 50;
  std::size_t hidden_layers = 3;
  std::size_t epochs = 50;
  /// Lower bound on optimizer steps, so tiny subsets still train.
  std::size_t min_steps = 2000;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;

  void validate() const;
};

/// Posterior means of every frame of a dataset, [latent_dim x n_frames],
/// column index = sequence * seq_len + step.
struct LatentTable {
  Eigen::MatrixXd means;
  std::size_t seq_len = 0;

  std::size_t latent_dim() const { return static_cast<std::size_t>(means.rows()); }
  Eigen::VectorXd at(std::size_t sequence, std::size_t step) const {
    return means.col(static_cast<Eigen::Index>(sequence * seq_len + step));
  }
  /// [mean(step); mean(step + 1)] for a consecutive pair.
  Eigen::VectorXd pair_features(const PairIndex& p) const;
};

LatentTable encode_dataset(const VaeModel& model, const sim::Dataset& dataset,
                           std::size_t batch = 256);

struct DownstreamHead {
  nn::DenseNet net;
  /// Inputs are standardized as (features - shift) / scale before the net.
  Eigen::VectorXd input_shift;
  Eigen::VectorXd input_scale;

  Eigen::VectorXd predict_features(const Eigen::VectorXd& features) const;
  Eigen::MatrixXd predict_features(const Eigen::MatrixXd& features) const;
};

/// floor(fraction * n_pairs), at least 1.
std::size_t subset_size(std::size_t n_pairs, double fraction);

/// True for 1, 1/2, ..., 1/128.
bool is_valid_subset_fraction(double fraction);

/// Seeded subsample of `pool`. For a fixed seed the subsets are nested:
/// a smaller fraction is always a prefix of a larger one.
std::vector<PairIndex> select_subset(std::span<const PairIndex> pool, double fraction,
                                     std::uint64_t seed);

struct DownstreamResult {
  DownstreamHead head;
  std::size_t n_examples = 0;
  std::size_t batch_size = 0;
  bool batch_clamped = false;
  std::vector<double> loss_log;  // per-epoch training MSE
};

/// Trains a head on the seeded `fraction` of `pool`. Standardization
/// statistics come from the latent means of every frame referenced by `pool`
/// (inputs only, no labels). The encoder is never touched.
DownstreamResult train_downstream(const LatentTable& latents, const sim::Dataset& dataset,
                                  std::span<const PairIndex> pool, double fraction,
                                  const HeadConfig& config, std::uint64_t seed);

/// Convenience form that encodes the dataset with `model` first.
DownstreamResult train_downstream(const VaeModel& model, const sim::Dataset& dataset,
                                  std::span<const PairIndex> pool, double fraction,
                                  const HeadConfig& config, std::uint64_t seed);

/// Encodes both frames, concatenates their means and runs the head.
Eigen::VectorXd predict(const VaeModel& model, const DownstreamHead& head,
                        const Eigen::VectorXd& frame_first, const Eigen::VectorXd& frame_second);

/// Labels of the given pairs, [label_dim x n]. The label of pair (t, t+1)
/// is the velocity stored at step t.
Eigen::MatrixXd pair_labels(const sim::Dataset& dataset, std::span<const PairIndex> pairs);

/// Head predictions for the given pairs, [label_dim x n].
Eigen::MatrixXd predict_pairs(const LatentTable& latents, const DownstreamHead& head,
                              std::span<const PairIndex> pairs);

}  // namespace svae

// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fully connected VAE with the slowness-regularized pair objective.
//
// For a consecutive pair (o_i, o_{i+1}) the minimized loss is
//
//   total = -reconstruction + beta * kl_prior + lambda * kl_similarity
//
// where, in the default symmetric form, reconstruction averages both
// frames' Bernoulli log-likelihoods, kl_prior averages KL(q_i || N(0, I))
// and KL(q_{i+1} || N(0, I)), and kl_similarity is the KL between the
// latent difference distribution and the unit-time Brownian prior.
// lambda = 0 is the beta-VAE.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slowvae/ball_sim.hpp"
#include "slowvae/gaussian.hpp"
#include "slowvae/nn.hpp"
#include "slowvae/rng.hpp"

namespace svae {

enum class Method { svae, bvae };

std::string to_string(Method m);
/// Throws ConfigError for anything but "svae" / "bvae".
Method method_from_string(const std::string& name);

struct TrainConfig {
  Method method = Method::svae;
  double beta = 1e-6;
  double lambda = 1e-5;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  std::size_t latent_dim = 2;
  std::size_t hidden_width = 300;
  std::size_t hidden_layers = 4;
  /// Average the beta term (and reconstruction) over both frames of the pair.
  /// When false only the first frame enters those terms.
  bool symmetric_beta = true;

  /// Throws ConfigError. A bvae config must carry lambda == 0.
  void validate() const;
  /// Copy of `base` set up for `m`; bvae forces lambda to 0.
  static TrainConfig for_method(Method m, TrainConfig base);
};

struct VaeModel {
  nn::DenseNet encoder;  // frame -> [mean; log_var], 2 * latent_dim outputs
  nn::DenseNet decoder;  // latent -> per-pixel logits
  std::size_t latent_dim = 0;
  std::size_t frame_size = 0;

  /// Glorot-initialized encoder/decoder with `hidden_layers` ReLU layers of
  /// `hidden_width` units each and identity outputs.
  static VaeModel initialize(std::size_t frame_size, const TrainConfig& config, Rng& rng);
  /// Same architecture, all parameters zero.
  static VaeModel zeros(std::size_t frame_size, const TrainConfig& config);

  /// Throws InvalidInput when encoder/decoder shapes disagree with the dims.
  void validate() const;
};

DiagonalGaussian encode(const VaeModel& model, const Eigen::VectorXd& frame);
/// Posterior means / log-variances for a batch [frame_size x n].
void encode_batch(const VaeModel& model, const Eigen::MatrixXd& frames, Eigen::MatrixXd& means,
                  Eigen::MatrixXd& log_vars);
/// Per-pixel Bernoulli means, strictly inside (0, 1) for finite logits.
Eigen::VectorXd decode(const VaeModel& model, const Eigen::VectorXd& z);

/// sum_p [x_p ln m_p + (1 - x_p) ln(1 - m_p)].
double reconstruction_log_likelihood(const Eigen::VectorXd& frame, const Eigen::VectorXd& means);
/// Same quantity evaluated from logits, stable for large |logit|.
double reconstruction_log_likelihood_from_logits(const Eigen::VectorXd& frame,
                                                 const Eigen::VectorXd& logits);

struct LossBreakdown {
  double reconstruction = 0.0;  // log-likelihood (<= 0 for binary frames)
  double kl_prior = 0.0;
  double kl_similarity = 0.0;
  double total = 0.0;

  static double compose(double reconstruction, double kl_prior, double kl_similarity, double beta,
                        double lambda) {
    return -reconstruction + beta * kl_prior + lambda * kl_similarity;
  }
};

/// Reparameterization noise for a batch of pairs, [latent_dim x batch] each.
struct PairNoise {
  Eigen::MatrixXd first;
  Eigen::MatrixXd second;

  static PairNoise draw(Rng& rng, std::size_t latent_dim, std::size_t batch);
};

struct PairLossResult {
  LossBreakdown loss;
  nn::GradientTape encoder_grad;
  nn::GradientTape decoder_grad;
};

/// Batch-mean pair loss and its gradients for fixed noise. Columns of
/// `frames_first` / `frames_second` are the two frames of each pair.
/// Throws TrainingDivergence on a non-finite loss.
PairLossResult svae_batch_loss(const VaeModel& model, const Eigen::MatrixXd& frames_first,
                               const Eigen::MatrixXd& frames_second, const TrainConfig& config,
                               const PairNoise& noise, bool want_gradients = true);

/// Single pair, drawing one reparameterized sample per frame from `rng`.
PairLossResult svae_pair_loss(const VaeModel& model, const Eigen::VectorXd& frame_first,
                              const Eigen::VectorXd& frame_second, const TrainConfig& config,
                              Rng& rng);

struct PairIndex {
  std::size_t sequence = 0;
  std::size_t step = 0;  // pair is (step, step + 1)

  friend bool operator==(const PairIndex&, const PairIndex&) = default;
};

/// Every adjacent pair of every listed sequence, in sequence order.
std::vector<PairIndex> consecutive_pairs(const sim::Dataset& dataset,
                                         std::span<const std::size_t> sequences);

struct Checkpoint {
  VaeModel model;
  TrainConfig config;
  std::size_t epochs_completed = 0;
  std::vector<LossBreakdown> loss_log;  // per-epoch means
  std::uint64_t clamp_events = 0;
};

using EpochCallback = std::function<void(std::size_t epoch, const LossBreakdown& mean)>;

/// Optimizes encoder and decoder jointly over shuffled consecutive pairs of
/// `train_sequences`. Deterministic in config.seed; the pair order and the
/// reparameterization noise do not depend on beta or lambda.
Checkpoint train_representation(const sim::Dataset& dataset,
                                std::span<const std::size_t> train_sequences,
                                const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace svae

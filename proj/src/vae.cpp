// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "slowvae/vae.hpp"

#include <cmath>
#include <string>

#include "slowvae/adam.hpp"
#include "slowvae/errors.hpp"

namespace svae {

std::string to_string(Method m) { return m == Method::svae ? "svae" : "bvae"; }

Method method_from_string(const std::string& name) {
  if (name == "svae") return Method::svae;
  if (name == "bvae") return Method::bvae;
  throw ConfigError("unknown method '" + name + "' (expected svae or bvae)");
}

void TrainConfig::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be a non-negative real");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a non-negative real");
  if (method == Method::bvae && lambda != 0.0) throw ConfigError("bvae requires lambda = 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (latent_dim == 0) throw ConfigError("latent_dim must be positive");
  if (hidden_width == 0) throw ConfigError("hidden_width must be positive");
}

TrainConfig TrainConfig::for_method(Method m, TrainConfig base) {
  base.method = m;
  if (m == Method::bvae) base.lambda = 0.0;
  return base;
}

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, std::size_t out, const TrainConfig& c) {
  std::vector<std::size_t> sizes{in};
  for (std::size_t k = 0; k < c.hidden_layers; ++k) sizes.push_back(c.hidden_width);
  sizes.push_back(out);
  return sizes;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::MatrixXd to_matrix(const Eigen::VectorXd& v) { return Eigen::MatrixXd(v); }

}  // namespace

VaeModel VaeModel::initialize(std::size_t frame_size, const TrainConfig& config, Rng& rng) {
  config.validate();
  VaeModel m;
  m.latent_dim = config.latent_dim;
  m.frame_size = frame_size;
  const auto enc = layer_sizes(frame_size, 2 * config.latent_dim, config);
  const auto dec = layer_sizes(config.latent_dim, frame_size, config);
  m.encoder = nn::DenseNet::glorot_uniform(enc, nn::Activation::relu, nn::Activation::identity, rng);
  m.decoder = nn::DenseNet::glorot_uniform(dec, nn::Activation::relu, nn::Activation::identity, rng);
  return m;
}

VaeModel VaeModel::zeros(std::size_t frame_size, const TrainConfig& config) {
  config.validate();
  VaeModel m;
  m.latent_dim = config.latent_dim;
  m.frame_size = frame_size;
  m.encoder = nn::DenseNet::zeros(layer_sizes(frame_size, 2 * config.latent_dim, config),
                                  nn::Activation::relu, nn::Activation::identity);
  m.decoder = nn::DenseNet::zeros(layer_sizes(config.latent_dim, frame_size, config),
                                  nn::Activation::relu, nn::Activation::identity);
  return m;
}

void VaeModel::validate() const {
  if (encoder.input_dim() != frame_size || encoder.output_dim() != 2 * latent_dim ||
      decoder.input_dim() != latent_dim || decoder.output_dim() != frame_size) {
    throw InvalidInput("VaeModel: encoder/decoder shapes do not match frame_size " +
                       std::to_string(frame_size) + " and latent_dim " + std::to_string(latent_dim));
  }
}

void encode_batch(const VaeModel& model, const Eigen::MatrixXd& frames, Eigen::MatrixXd& means,
                  Eigen::MatrixXd& log_vars) {
  if (static_cast<std::size_t>(frames.rows()) != model.frame_size) {
    throw InvalidInput("encode: frame has " + std::to_string(frames.rows()) + " pixels, model expects " +
                       std::to_string(model.frame_size));
  }
  const Eigen::MatrixXd out = nn::forward(model.encoder, frames);
  const auto L = static_cast<Eigen::Index>(model.latent_dim);
  means = out.topRows(L);
  log_vars = out.bottomRows(L);
}

DiagonalGaussian encode(const VaeModel& model, const Eigen::VectorXd& frame) {
  Eigen::MatrixXd mu;
  Eigen::MatrixXd lv;
  encode_batch(model, to_matrix(frame), mu, lv);
  return {mu.col(0), lv.col(0)};
}

Eigen::VectorXd decode(const VaeModel& model, const Eigen::VectorXd& z) {
  if (static_cast<std::size_t>(z.size()) != model.latent_dim) {
    throw InvalidInput("decode: latent has " + std::to_string(z.size()) + " entries, model expects " +
                       std::to_string(model.latent_dim));
  }
  Eigen::VectorXd logits = nn::forward(model.decoder, z);
  for (Eigen::Index p = 0; p < logits.size(); ++p) logits[p] = logistic(logits[p]);
  return logits;
}

double reconstruction_log_likelihood(const Eigen::VectorXd& frame, const Eigen::VectorXd& means) {
  if (frame.size() != means.size()) throw InvalidInput("reconstruction_log_likelihood: size mismatch");
  double sum = 0.0;
  for (Eigen::Index p = 0; p < frame.size(); ++p) {
    const double x = frame[p];
    const double m = means[p];
    if (!(m > 0.0 && m < 1.0)) throw InvalidInput("reconstruction_log_likelihood: means must lie in (0, 1)");
    sum += x * std::log(m) + (1.0 - x) * std::log1p(-m);
  }
  return sum;
}

double reconstruction_log_likelihood_from_logits(const Eigen::VectorXd& frame,
                                                 const Eigen::VectorXd& logits) {
  if (frame.size() != logits.size()) {
    throw InvalidInput("reconstruction_log_likelihood_from_logits: size mismatch");
  }
  double sum = 0.0;
  // x ln s(l) + (1 - x) ln(1 - s(l)) = x l - softplus(l)
  for (Eigen::Index p = 0; p < frame.size(); ++p) sum += frame[p] * logits[p] - softplus(logits[p]);
  return sum;
}

PairNoise PairNoise::draw(Rng& rng, std::size_t latent_dim, std::size_t batch) {
  const auto L = static_cast<Eigen::Index>(latent_dim);
  const auto B = static_cast<Eigen::Index>(batch);
  PairNoise n;
  n.first = sample_standard_normal(rng, L, B);
  n.second = sample_standard_normal(rng, L, B);
  return n;
}

PairLossResult svae_batch_loss(const VaeModel& model, const Eigen::MatrixXd& frames_first,
                               const Eigen::MatrixXd& frames_second, const TrainConfig& config,
                               const PairNoise& noise, bool want_gradients) {
  const auto L = static_cast<Eigen::Index>(model.latent_dim);
  const Eigen::Index B = frames_first.cols();
  if (B == 0 || frames_second.cols() != B || frames_first.rows() != frames_second.rows()) {
    throw InvalidInput("svae_batch_loss: frame batches must be non-empty and of equal shape");
  }
  if (static_cast<std::size_t>(frames_first.rows()) != model.frame_size) {
    throw InvalidInput("svae_batch_loss: frames have " + std::to_string(frames_first.rows()) +
                       " pixels, model expects " + std::to_string(model.frame_size));
  }
  if (noise.first.rows() != L || noise.first.cols() != B || noise.second.rows() != L ||
      noise.second.cols() != B) {
    throw InvalidInput("svae_batch_loss: noise shape does not match latent_dim x batch");
  }

  // Both frames go through the networks as one batch of 2B columns:
  // columns [0, B) are first frames, [B, 2B) second frames.
  Eigen::MatrixXd frames(frames_first.rows(), 2 * B);
  frames << frames_first, frames_second;
  Eigen::MatrixXd eps(L, 2 * B);
  eps << noise.first, noise.second;

  nn::ForwardCache enc_cache;
  const Eigen::MatrixXd enc_out = nn::forward(model.encoder, frames, enc_cache);
  const Eigen::MatrixXd mu = enc_out.topRows(L);
  const Eigen::MatrixXd lv = enc_out.bottomRows(L);

  Eigen::MatrixXd half_std(L, 2 * B);
  for (Eigen::Index c = 0; c < 2 * B; ++c) {
    for (Eigen::Index d = 0; d < L; ++d) half_std(d, c) = std::exp(0.5 * clamp_log_var(lv(d, c)));
  }
  const Eigen::MatrixXd z = mu + half_std.cwiseProduct(eps);

  nn::ForwardCache dec_cache;
  const Eigen::MatrixXd logits = nn::forward(model.decoder, z, dec_cache);

  // Per-frame weights of the reconstruction and beta terms.
  const double w_first = config.symmetric_beta ? 0.5 : 1.0;
  const double w_second = config.symmetric_beta ? 0.5 : 0.0;
  const double inv_b = 1.0 / static_cast<double>(B);

  LossBreakdown sum;
  Eigen::MatrixXd d_enc = Eigen::MatrixXd::Zero(2 * L, 2 * B);
  Eigen::MatrixXd d_logits;

  // Bernoulli log-likelihood from logits: x l - softplus(l), with
  // softplus(l) = max(l, 0) + ln(1 + exp(-|l|)).
  const Eigen::ArrayXXd l = logits.array();
  const Eigen::ArrayXXd x = frames.array();
  const Eigen::ArrayXXd e = (-l.abs()).exp();
  const Eigen::ArrayXXd one_plus_e = 1.0 + e;
  const Eigen::RowVectorXd ll =
      (x * l - l.max(0.0) - one_plus_e.log()).matrix().colwise().sum();
  const Eigen::ArrayXXd sig = (l >= 0.0).select(Eigen::ArrayXXd::Ones(l.rows(), l.cols()), e) / one_plus_e;
  Eigen::RowVectorXd col_weight(2 * B);
  col_weight.head(B).setConstant(w_first);
  col_weight.tail(B).setConstant(w_second);
  if (want_gradients) {
    d_logits = ((sig - x).matrix() * (inv_b * col_weight).asDiagonal());
  }
  sum.reconstruction = ll.dot(col_weight);

  for (Eigen::Index c = 0; c < 2 * B; ++c) {
    const double w = col_weight[c];
    const DiagonalGaussian q(mu.col(c), lv.col(c));
    sum.kl_prior += w * kl_to_standard_normal(q);
    if (want_gradients && w != 0.0) {
      const GaussianGrad g = kl_standard_gradient(q);
      d_enc.col(c).head(L) += config.beta * w * inv_b * g.mean;
      d_enc.col(c).tail(L) += config.beta * w * inv_b * g.log_var;
    }
  }
  for (Eigen::Index b = 0; b < B; ++b) {
    const DiagonalGaussian qi(mu.col(b), lv.col(b));
    const DiagonalGaussian qj(mu.col(B + b), lv.col(B + b));
    sum.kl_similarity += similarity_loss(qi, qj, 1.0);
    if (want_gradients) {
      const PairGrad g = similarity_gradient(qi, qj, 1.0);
      const double s = config.lambda * inv_b;
      d_enc.col(b).head(L) += s * g.first.mean;
      d_enc.col(b).tail(L) += s * g.first.log_var;
      d_enc.col(B + b).head(L) += s * g.second.mean;
      d_enc.col(B + b).tail(L) += s * g.second.log_var;
    }
  }

  PairLossResult result;
  result.loss.reconstruction = sum.reconstruction * inv_b;
  result.loss.kl_prior = sum.kl_prior * inv_b;
  result.loss.kl_similarity = sum.kl_similarity * inv_b;
  result.loss.total = LossBreakdown::compose(result.loss.reconstruction, result.loss.kl_prior,
                                             result.loss.kl_similarity, config.beta, config.lambda);
  if (!std::isfinite(result.loss.total)) {
    throw TrainingDivergence("svae_batch_loss: non-finite loss");
  }
  if (!want_gradients) return result;

  nn::BackwardResult dec = nn::backward(model.decoder, dec_cache, d_logits);
  // z = mu + exp(lv / 2) * eps
  d_enc.topRows(L) += dec.input_grad;
  for (Eigen::Index c = 0; c < 2 * B; ++c) {
    for (Eigen::Index d = 0; d < L; ++d) {
      const double l = lv(d, c);
      if (l >= kLogVarMin && l <= kLogVarMax) {
        d_enc(L + d, c) += dec.input_grad(d, c) * eps(d, c) * 0.5 * half_std(d, c);
      }
    }
  }
  nn::BackwardResult enc = nn::backward(model.encoder, enc_cache, d_enc, false);
  result.encoder_grad = std::move(enc.tape);
  result.decoder_grad = std::move(dec.tape);
  return result;
}

PairLossResult svae_pair_loss(const VaeModel& model, const Eigen::VectorXd& frame_first,
                              const Eigen::VectorXd& frame_second, const TrainConfig& config,
                              Rng& rng) {
  const PairNoise noise = PairNoise::draw(rng, model.latent_dim, 1);
  return svae_batch_loss(model, to_matrix(frame_first), to_matrix(frame_second), config, noise);
}

std::vector<PairIndex> consecutive_pairs(const sim::Dataset& dataset,
                                         std::span<const std::size_t> sequences) {
  std::vector<PairIndex> pairs;
  if (dataset.seq_len() < 2) return pairs;
  pairs.reserve(sequences.size() * (dataset.seq_len() - 1));
  for (const std::size_t s : sequences) {
    if (s >= dataset.n_sequences()) throw InvalidInput("consecutive_pairs: sequence index out of range");
    for (std::size_t t = 0; t + 1 < dataset.seq_len(); ++t) pairs.push_back({s, t});
  }
  return pairs;
}

namespace {

void load_frame(const sim::Dataset& ds, std::size_t seq, std::size_t t, Eigen::MatrixXd& dst,
                Eigen::Index col) {
  const auto f = ds.frame(seq, t);
  for (std::size_t p = 0; p < f.size(); ++p) dst(static_cast<Eigen::Index>(p), col) = f[p];
}

}  // namespace

Checkpoint train_representation(const sim::Dataset& dataset,
                                std::span<const std::size_t> train_sequences,
                                const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (dataset.seq_len() < 2) throw InvalidInput("train_representation: sequences must have length >= 2");
  std::vector<PairIndex> pairs = consecutive_pairs(dataset, train_sequences);
  if (pairs.empty()) throw InvalidInput("train_representation: no training pairs");

  Rng init_rng(derive_seed(config.seed, 1));
  Rng order_rng(derive_seed(config.seed, 2));
  Rng noise_rng(derive_seed(config.seed, 3));

  Checkpoint ck;
  ck.config = config;
  ck.model = VaeModel::initialize(dataset.frame_size(), config, init_rng);
  const nn::AdamHyperparams hyper{config.learning_rate, 0.9, 0.999, 1e-8};
  nn::OptimizerState enc_opt(ck.model.encoder, hyper);
  nn::OptimizerState dec_opt(ck.model.decoder, hyper);
  const std::uint64_t clamps_before = log_var_clamp_events();

  const auto P = static_cast<Eigen::Index>(dataset.frame_size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(pairs, order_rng);
    LossBreakdown acc;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < pairs.size(); start += config.batch_size, ++batch_index) {
      const std::size_t n = std::min(config.batch_size, pairs.size() - start);
      Eigen::MatrixXd first(P, static_cast<Eigen::Index>(n));
      Eigen::MatrixXd second(P, static_cast<Eigen::Index>(n));
      for (std::size_t b = 0; b < n; ++b) {
        const PairIndex& pi = pairs[start + b];
        load_frame(dataset, pi.sequence, pi.step, first, static_cast<Eigen::Index>(b));
        load_frame(dataset, pi.sequence, pi.step + 1, second, static_cast<Eigen::Index>(b));
      }
      const PairNoise noise = PairNoise::draw(noise_rng, config.latent_dim, n);
      PairLossResult r;
      try {
        r = svae_batch_loss(ck.model, first, second, config, noise);
        nn::adam_step(enc_opt, ck.model.encoder, r.encoder_grad);
        nn::adam_step(dec_opt, ck.model.decoder, r.decoder_grad);
      } catch (const TrainingDivergence& e) {
        throw TrainingDivergence(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batch_index) + ")",
                                 e.layer(), epoch, batch_index);
      }
      const double w = static_cast<double>(n);
      acc.reconstruction += w * r.loss.reconstruction;
      acc.kl_prior += w * r.loss.kl_prior;
      acc.kl_similarity += w * r.loss.kl_similarity;
    }
    const double inv = 1.0 / static_cast<double>(pairs.size());
    acc.reconstruction *= inv;
    acc.kl_prior *= inv;
    acc.kl_similarity *= inv;
    acc.total = LossBreakdown::compose(acc.reconstruction, acc.kl_prior, acc.kl_similarity, config.beta,
                                       config.lambda);
    ck.loss_log.push_back(acc);
    ck.epochs_completed = epoch + 1;
    if (on_epoch) on_epoch(epoch, acc);
  }
  ck.clamp_events = log_var_clamp_events() - clamps_before;
  return ck;
}

}  // namespace svae

// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "slowvae/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slowvae/adam.hpp"
#include "slowvae/errors.hpp"
#include "slowvae/log.hpp"

namespace svae {

void HeadConfig::validate() const {
  if (hidden_width == 0) throw ConfigError("head hidden_width must be positive");
  if (batch_size == 0) throw ConfigError("head batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("head learning_rate must be positive");
  if (epochs == 0 && min_steps == 0) throw ConfigError("head needs epochs or min_steps");
}

Eigen::VectorXd LatentTable::pair_features(const PairIndex& p) const {
  const auto L = means.rows();
  Eigen::VectorXd f(2 * L);
  f << at(p.sequence, p.step), at(p.sequence, p.step + 1);
  return f;
}

LatentTable encode_dataset(const VaeModel& model, const sim::Dataset& dataset, std::size_t batch) {
  if (dataset.frame_size() != model.frame_size) {
    throw InvalidInput("encode_dataset: dataset frames have " + std::to_string(dataset.frame_size()) +
                       " pixels, model expects " + std::to_string(model.frame_size));
  }
  batch = std::max<std::size_t>(batch, 1);
  LatentTable table;
  table.seq_len = dataset.seq_len();
  const std::size_t n = dataset.n_frames();
  table.means.resize(static_cast<Eigen::Index>(model.latent_dim), static_cast<Eigen::Index>(n));
  const auto P = static_cast<Eigen::Index>(dataset.frame_size());
  const float* data = dataset.frames_data().data();
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t m = std::min(batch, n - start);
    const Eigen::Map<const Eigen::MatrixXf> block(data + start * dataset.frame_size(), P,
                                                  static_cast<Eigen::Index>(m));
    Eigen::MatrixXd mu;
    Eigen::MatrixXd lv;
    encode_batch(model, block.cast<double>(), mu, lv);
    table.means.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(m)) = mu;
  }
  return table;
}

Eigen::VectorXd DownstreamHead::predict_features(const Eigen::VectorXd& features) const {
  return predict_features(Eigen::MatrixXd(features)).col(0);
}

Eigen::MatrixXd DownstreamHead::predict_features(const Eigen::MatrixXd& features) const {
  if (static_cast<std::size_t>(features.rows()) != net.input_dim() ||
      input_shift.size() != features.rows() || input_scale.size() != features.rows()) {
    throw InvalidInput("DownstreamHead: expected " + std::to_string(net.input_dim()) +
                       " input features, got " + std::to_string(features.rows()));
  }
  Eigen::MatrixXd x = features;
  x.colwise() -= input_shift;
  x = input_scale.cwiseInverse().asDiagonal() * x;
  return nn::forward(net, x);
}

std::size_t subset_size(std::size_t n_pairs, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidInput("subset fraction must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n_pairs)));
  return std::max<std::size_t>(n, 1);
}

bool is_valid_subset_fraction(double fraction) {
  for (int k = 0; k <= 7; ++k) {
    if (fraction == std::ldexp(1.0, -k)) return true;
  }
  return false;
}

std::vector<PairIndex> select_subset(std::span<const PairIndex> pool, double fraction,
                                     std::uint64_t seed) {
  if (pool.empty()) throw InvalidInput("select_subset: empty pool");
  std::vector<PairIndex> order(pool.begin(), pool.end());
  Rng rng(derive_seed(seed, 0x5B5E7ULL));
  shuffle(order, rng);
  order.resize(subset_size(pool.size(), fraction));
  return order;
}

Eigen::MatrixXd pair_labels(const sim::Dataset& dataset, std::span<const PairIndex> pairs) {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(dataset.label_dim()), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto l = dataset.label(pairs[i].sequence, pairs[i].step);
    for (std::size_t d = 0; d < l.size(); ++d) {
      y(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i)) = l[d];
    }
  }
  return y;
}

namespace {

Eigen::MatrixXd pair_feature_matrix(const LatentTable& latents, std::span<const PairIndex> pairs) {
  const auto L = static_cast<Eigen::Index>(latents.latent_dim());
  Eigen::MatrixXd f(2 * L, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    f.col(static_cast<Eigen::Index>(i)) = latents.pair_features(pairs[i]);
  }
  return f;
}

std::vector<std::size_t> head_sizes(std::size_t in, std::size_t out, const HeadConfig& c) {
  std::vector<std::size_t> sizes{in};
  for (std::size_t k = 0; k < c.hidden_layers; ++k) sizes.push_back(c.hidden_width);
  sizes.push_back(out);
  return sizes;
}

}  // namespace

Eigen::MatrixXd predict_pairs(const LatentTable& latents, const DownstreamHead& head,
                              std::span<const PairIndex> pairs) {
  return head.predict_features(pair_feature_matrix(latents, pairs));
}

DownstreamResult train_downstream(const LatentTable& latents, const sim::Dataset& dataset,
                                  std::span<const PairIndex> pool, double fraction,
                                  const HeadConfig& config, std::uint64_t seed) {
  config.validate();
  if (!is_valid_subset_fraction(fraction)) {
    throw InvalidInput("train_downstream: subset fraction must be one of 1, 1/2, ..., 1/128");
  }
  if (pool.empty()) throw InvalidInput("train_downstream: empty labeled pool");
  if (latents.seq_len != dataset.seq_len() ||
      static_cast<std::size_t>(latents.means.cols()) != dataset.n_frames()) {
    throw InvalidInput("train_downstream: latent table does not match the dataset");
  }

  const auto L = static_cast<Eigen::Index>(latents.latent_dim());
  DownstreamResult result;

  // Standardization from the unlabeled inputs of the whole pool.
  {
    const Eigen::MatrixXd all = pair_feature_matrix(latents, pool);
    result.head.input_shift = all.rowwise().mean();
    const Eigen::MatrixXd centered = all.colwise() - result.head.input_shift;
    result.head.input_scale =
        (centered.array().square().rowwise().sum() / static_cast<double>(all.cols())).sqrt().matrix();
    for (Eigen::Index d = 0; d < result.head.input_scale.size(); ++d) {
      if (!(result.head.input_scale[d] > 1e-12)) result.head.input_scale[d] = 1.0;
    }
  }

  const std::vector<PairIndex> subset = select_subset(pool, fraction, seed);
  result.n_examples = subset.size();
  result.batch_size = config.batch_size;
  if (subset.size() < config.batch_size) {
    result.batch_size = subset.size();
    result.batch_clamped = true;
    warn("train_downstream: subset of " + std::to_string(subset.size()) +
         " pairs is smaller than the batch size " + std::to_string(config.batch_size) + "; clamping");
  }

  Eigen::MatrixXd x = pair_feature_matrix(latents, subset);
  x.colwise() -= result.head.input_shift;
  x = result.head.input_scale.cwiseInverse().asDiagonal() * x;
  const Eigen::MatrixXd y = pair_labels(dataset, subset);

  Rng init_rng(derive_seed(seed, 0x4EADULL));
  Rng order_rng(derive_seed(seed, 0x0DE5ULL));
  const auto sizes = head_sizes(static_cast<std::size_t>(2 * L), dataset.label_dim(), config);
  result.head.net =
      nn::DenseNet::glorot_uniform(sizes, nn::Activation::relu, nn::Activation::identity, init_rng);
  nn::OptimizerState opt(result.head.net, {config.learning_rate, 0.9, 0.999, 1e-8});

  const std::size_t n = subset.size();
  const std::size_t bs = result.batch_size;
  const std::size_t batches_per_epoch = (n + bs - 1) / bs;
  const std::size_t epochs =
      std::max(config.epochs, (config.min_steps + batches_per_epoch - 1) / batches_per_epoch);

  std::vector<Eigen::Index> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<Eigen::Index>(i);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    shuffle(order, order_rng);
    double sse = 0.0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t m = std::min(bs, n - start);
      Eigen::MatrixXd xb(x.rows(), static_cast<Eigen::Index>(m));
      Eigen::MatrixXd yb(y.rows(), static_cast<Eigen::Index>(m));
      for (std::size_t b = 0; b < m; ++b) {
        xb.col(static_cast<Eigen::Index>(b)) = x.col(order[start + b]);
        yb.col(static_cast<Eigen::Index>(b)) = y.col(order[start + b]);
      }
      nn::ForwardCache cache;
      const Eigen::MatrixXd pred = nn::forward(result.head.net, xb, cache);
      const Eigen::MatrixXd err = pred - yb;
      sse += err.squaredNorm();
      // loss = mean over the batch of ||pred - y||^2
      const Eigen::MatrixXd upstream = (2.0 / static_cast<double>(m)) * err;
      const nn::BackwardResult back = nn::backward(result.head.net, cache, upstream, false);
      try {
        nn::adam_step(opt, result.head.net, back.tape);
      } catch (const TrainingDivergence& e) {
        throw TrainingDivergence(std::string("train_downstream: ") + e.what(), e.layer(), epoch);
      }
    }
    result.loss_log.push_back(sse / static_cast<double>(n));
  }
  return result;
}

DownstreamResult train_downstream(const VaeModel& model, const sim::Dataset& dataset,
                                  std::span<const PairIndex> pool, double fraction,
                                  const HeadConfig& config, std::uint64_t seed) {
  return train_downstream(encode_dataset(model, dataset), dataset, pool, fraction, config, seed);
}

Eigen::VectorXd predict(const VaeModel& model, const DownstreamHead& head,
                        const Eigen::VectorXd& frame_first, const Eigen::VectorXd& frame_second) {
  const DiagonalGaussian a = encode(model, frame_first);
  const DiagonalGaussian b = encode(model, frame_second);
  Eigen::VectorXd f(a.mean.size() + b.mean.size());
  f << a.mean, b.mean;
  return head.predict_features(f);
}

}  // namespace svae

// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "slowvae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "slowvae/errors.hpp"
#include "slowvae/log.hpp"
#include "slowvae/rng.hpp"

namespace svae::eval {

double mean_squared_error(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& labels) {
  if (labels.cols() == 0) throw InvalidInput("mean_squared_error: empty test set");
  if (predictions.rows() != labels.rows() || predictions.cols() != labels.cols()) {
    throw InvalidInput("mean_squared_error: predictions are " + std::to_string(predictions.rows()) + "x" +
                       std::to_string(predictions.cols()) + ", labels are " +
                       std::to_string(labels.rows()) + "x" + std::to_string(labels.cols()));
  }
  return (predictions - labels).colwise().squaredNorm().mean();
}

double evaluate_mse(const LatentTable& latents, const DownstreamHead& head,
                    const sim::Dataset& dataset, std::span<const PairIndex> test_pairs) {
  if (test_pairs.empty()) throw InvalidInput("evaluate_mse: empty test set");
  return mean_squared_error(predict_pairs(latents, head, test_pairs), pair_labels(dataset, test_pairs));
}

BiasVariance bias_variance(std::span<const Eigen::MatrixXd> predictions, const Eigen::MatrixXd& labels) {
  if (predictions.size() < 2) {
    throw InvalidInput("bias_variance: need at least 2 seeds, got " + std::to_string(predictions.size()));
  }
  if (labels.cols() == 0) throw InvalidInput("bias_variance: no points");
  for (const auto& p : predictions) {
    if (p.rows() != labels.rows() || p.cols() != labels.cols()) {
      throw InvalidInput("bias_variance: prediction matrix not congruent with labels");
    }
  }
  const double S = static_cast<double>(predictions.size());
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(labels.rows(), labels.cols());
  for (const auto& p : predictions) mean += p;
  mean /= S;

  BiasVariance out;
  out.bias_sq = (mean - labels).colwise().squaredNorm().mean();
  for (const auto& p : predictions) {
    out.variance += (p - mean).colwise().squaredNorm().mean();
    out.mean_mse += (p - labels).colwise().squaredNorm().mean();
  }
  out.variance /= S;
  out.mean_mse /= S;
  return out;
}

SubsetPoint make_point(std::size_t n_examples, double fraction, std::vector<double> per_seed_losses) {
  if (per_seed_losses.empty()) throw InvalidInput("make_point: no per-seed losses");
  SubsetPoint p;
  p.n_examples = n_examples;
  p.fraction = fraction;
  const double n = static_cast<double>(per_seed_losses.size());
  p.loss_mean = std::accumulate(per_seed_losses.begin(), per_seed_losses.end(), 0.0) / n;
  if (per_seed_losses.size() > 1) {
    double ss = 0.0;
    for (double l : per_seed_losses) ss += (l - p.loss_mean) * (l - p.loss_mean);
    p.loss_std = std::sqrt(ss / (n - 1.0));
  }
  p.per_seed_losses = std::move(per_seed_losses);
  return p;
}

void SubsetCurve::validate() const {
  if (points.empty()) throw InvalidInput("SubsetCurve: no points");
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (points[k].n_examples == 0) throw InvalidInput("SubsetCurve: zero-size subset");
    if (k > 0 && points[k].n_examples <= points[k - 1].n_examples) {
      throw InvalidInput("SubsetCurve: n_examples must be strictly increasing");
    }
    if (points[k].per_seed_losses.size() != points[0].per_seed_losses.size()) {
      throw InvalidInput("SubsetCurve: seed count differs between points");
    }
  }
}

DataEfficiency data_efficiency(const SubsetCurve& candidate, const SubsetCurve& reference) {
  candidate.validate();
  reference.validate();
  if (candidate.points.size() != reference.points.size()) {
    throw InvalidInput("data_efficiency: curves have different subset grids");
  }
  for (std::size_t k = 0; k < candidate.points.size(); ++k) {
    if (candidate.points[k].n_examples != reference.points[k].n_examples) {
      throw InvalidInput("data_efficiency: curves have different subset grids");
    }
  }

  DataEfficiency out;
  std::size_t best = 0;
  for (std::size_t k = 1; k < reference.points.size(); ++k) {
    if (reference.points[k].loss_mean < reference.points[best].loss_mean) best = k;
  }
  out.reference_best_loss = reference.points[best].loss_mean;
  out.n_reference_best = static_cast<double>(reference.points[best].n_examples);

  const double target = out.reference_best_loss;
  const auto& pts = candidate.points;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts[k].loss_mean > target) continue;
    out.achieved = true;
    if (k == 0) {
      out.n_needed = static_cast<double>(pts[0].n_examples);
    } else {
      const double l0 = pts[k - 1].loss_mean;
      const double l1 = pts[k].loss_mean;
      const double t = (l0 - target) / (l0 - l1);
      const double x0 = std::log(static_cast<double>(pts[k - 1].n_examples));
      const double x1 = std::log(static_cast<double>(pts[k].n_examples));
      out.n_needed = std::exp(x0 + t * (x1 - x0));
    }
    out.percent_savings = 100.0 * (1.0 - out.n_needed / out.n_reference_best);
    break;
  }
  return out;
}

SlownessResult latent_slowness_ratio(const LatentTable& latents, std::span<const std::size_t> sequences,
                                     std::uint64_t seed) {
  if (sequences.empty()) throw InvalidInput("latent_slowness_ratio: no sequences");
  const std::size_t T = latents.seq_len;
  if (T < 2) throw InvalidInput("latent_slowness_ratio: sequences need length >= 2");
  const std::size_t n_seq_total = static_cast<std::size_t>(latents.means.cols()) / T;
  for (std::size_t s : sequences) {
    if (s >= n_seq_total) throw InvalidInput("latent_slowness_ratio: sequence index out of range");
  }

  // Gather the selected frames contiguously.
  const std::size_t N = sequences.size() * T;
  Eigen::MatrixXd z(latents.means.rows(), static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    z.middleCols(static_cast<Eigen::Index>(i * T), static_cast<Eigen::Index>(T)) =
        latents.means.middleCols(static_cast<Eigen::Index>(sequences[i] * T), static_cast<Eigen::Index>(T));
  }

  SlownessResult out;
  double consec = 0.0;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    for (std::size_t t = 0; t + 1 < T; ++t) {
      const auto c = static_cast<Eigen::Index>(i * T + t);
      consec += (z.col(c + 1) - z.col(c)).norm();
    }
  }
  out.consecutive_mean = consec / static_cast<double>(sequences.size() * (T - 1));

  double rnd = 0.0;
  if (N <= kExhaustiveFrameLimit) {
    // All ordered pairs including i == j: E over independent uniform (i, j).
    for (std::size_t a = 0; a < N; ++a) {
      for (std::size_t b = a + 1; b < N; ++b) {
        rnd += 2.0 * (z.col(static_cast<Eigen::Index>(a)) - z.col(static_cast<Eigen::Index>(b))).norm();
      }
    }
    out.random_mean = rnd / (static_cast<double>(N) * static_cast<double>(N));
  } else {
    Rng rng(derive_seed(seed, 0x51047ULL));
    for (std::size_t k = 0; k < kRandomPairSamples; ++k) {
      const auto a = static_cast<Eigen::Index>(rng.index(N));
      const auto b = static_cast<Eigen::Index>(rng.index(N));
      rnd += (z.col(a) - z.col(b)).norm();
    }
    out.random_mean = rnd / static_cast<double>(kRandomPairSamples);
  }

  if (!(out.random_mean > 0.0)) {
    out.degenerate = true;
    out.ratio = 0.0;
    warn("latent_slowness_ratio: all latent means coincide; reporting ratio 0");
    return out;
  }
  out.ratio = out.consecutive_mean / out.random_mean;
  return out;
}

SlownessResult latent_slowness_ratio(const VaeModel& model, const sim::Dataset& dataset,
                                     std::span<const std::size_t> sequences, std::uint64_t seed) {
  return latent_slowness_ratio(encode_dataset(model, dataset), sequences, seed);
}

std::vector<ScatterRow> export_latent_scatter(const LatentTable& latents, const sim::Dataset& dataset,
                                              std::size_t n_samples, std::uint64_t seed) {
  const std::size_t N = dataset.n_frames();
  if (static_cast<std::size_t>(latents.means.cols()) != N) {
    throw InvalidInput("export_latent_scatter: latent table does not match the dataset");
  }
  if (n_samples > N) {
    throw InvalidInput("export_latent_scatter: requested " + std::to_string(n_samples) +
                       " samples from " + std::to_string(N) + " frames");
  }
  if (!dataset.has_positions()) {
    throw InvalidInput("export_latent_scatter: dataset carries no ball positions");
  }
  std::vector<std::size_t> idx(N);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5CA7ULL));
  shuffle(idx, rng);
  idx.resize(n_samples);

  const std::size_t L = latents.latent_dim();
  const std::size_t T = dataset.seq_len();
  std::vector<ScatterRow> rows;
  rows.reserve(n_samples * L);
  for (std::size_t f : idx) {
    const Eigen::Vector2d p = dataset.position(f / T, f % T);
    for (std::size_t d = 0; d < L; ++d) {
      rows.push_back({p.x(), p.y(), d,
                      latents.means(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(f))});
    }
  }
  return rows;
}

std::vector<ScatterRow> export_latent_scatter(const VaeModel& model, const sim::Dataset& dataset,
                                              std::size_t n_samples, std::uint64_t seed) {
  return export_latent_scatter(encode_dataset(model, dataset), dataset, n_samples, seed);
}

}  // namespace svae::eval

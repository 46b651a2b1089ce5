// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "slowvae/ball_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>

#include "slowvae/errors.hpp"
#include "slowvae/rng.hpp"

namespace svae::sim {

namespace {

// Folds one coordinate back into [0, bound], flipping the velocity sign on
// every reflection.
void fold(double& x, double& v, double bound) {
  while (x < 0.0 || x > bound) {
    if (x < 0.0) {
      x = -x;
    } else {
      x = 2.0 * bound - x;
    }
    v = -v;
  }
}

}  // namespace

BallState step(const BallState& state, const Arena& arena) {
  const double w = static_cast<double>(arena.width);
  const double h = static_cast<double>(arena.height);
  if (state.velocity.norm() > std::min(w, h)) {
    throw ConfigError("step: speed " + std::to_string(state.velocity.norm()) +
                      " exceeds the smaller arena side");
  }
  BallState next = state;
  next.position += state.velocity;
  fold(next.position.x(), next.velocity.x(), w);
  fold(next.position.y(), next.velocity.y(), h);
  return next;
}

Eigen::MatrixXd render(const BallState& state, const Arena& arena, double radius) {
  if (!(radius >= 1.0)) throw InvalidInput("render: radius must be >= 1");
  const auto rows = static_cast<Eigen::Index>(arena.height);
  const auto cols = static_cast<Eigen::Index>(arena.width);
  Eigen::MatrixXd px = Eigen::MatrixXd::Zero(rows, cols);
  const double cx = state.position.x();
  const double cy = state.position.y();
  const double reach = radius + 0.5;
  const auto c0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(cx - reach - 0.5)));
  const auto c1 = std::min<Eigen::Index>(cols - 1, static_cast<Eigen::Index>(std::ceil(cx + reach)));
  const auto r0 = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(cy - reach - 0.5)));
  const auto r1 = std::min<Eigen::Index>(rows - 1, static_cast<Eigen::Index>(std::ceil(cy + reach)));
  for (Eigen::Index r = r0; r <= r1; ++r) {
    for (Eigen::Index c = c0; c <= c1; ++c) {
      const double dx = static_cast<double>(c) + 0.5 - cx;
      const double dy = static_cast<double>(r) + 0.5 - cy;
      const double d = std::sqrt(dx * dx + dy * dy);
      px(r, c) = std::clamp(reach - d, 0.0, 1.0);
    }
  }
  return px;
}

std::optional<Eigen::Vector2d> frame_centroid(std::span<const float> pixels, const Arena& arena) {
  if (pixels.size() != arena.pixels()) throw InvalidInput("frame_centroid: frame size mismatch");
  double mass = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t r = 0; r < arena.height; ++r) {
    for (std::size_t c = 0; c < arena.width; ++c) {
      const double v = pixels[r * arena.width + c];
      mass += v;
      sx += v * (static_cast<double>(c) + 0.5);
      sy += v * (static_cast<double>(r) + 0.5);
    }
  }
  if (mass <= 0.0) return std::nullopt;
  return Eigen::Vector2d(sx / mass, sy / mass);
}

void GenerationConfig::validate() const {
  if (arena.width == 0 || arena.height == 0) throw ConfigError("arena dimensions must be positive");
  if (n_sequences < 1) throw ConfigError("n_sequences must be >= 1");
  if (seq_len < 2) throw ConfigError("seq_len must be >= 2");
  const double side = static_cast<double>(std::min(arena.width, arena.height));
  if (!(radius >= 1.0) || !(2.0 * radius < side)) {
    throw ConfigError("radius must be >= 1 and fit inside the arena");
  }
  if (!(speed_min > 0.0) || !(speed_max >= speed_min) || !(speed_max < side)) {
    throw ConfigError("speed range must satisfy 0 < min <= max < min(width, height)");
  }
}

Dataset::Dataset(GenerationConfig config, std::size_t label_dim)
    : config_(config), label_dim_(label_dim) {
  if (label_dim == 0) throw ConfigError("label_dim must be positive");
  frames_.assign(n_frames() * frame_size(), 0.0f);
  labels_.assign(n_frames() * label_dim_, 0.0f);
}

std::span<const float> Dataset::frame(std::size_t seq, std::size_t t) const {
  if (seq >= n_sequences() || t >= seq_len()) throw InvalidInput("Dataset::frame: index out of range");
  return {frames_.data() + (seq * seq_len() + t) * frame_size(), frame_size()};
}

std::span<float> Dataset::frame(std::size_t seq, std::size_t t) {
  if (seq >= n_sequences() || t >= seq_len()) throw InvalidInput("Dataset::frame: index out of range");
  return {frames_.data() + (seq * seq_len() + t) * frame_size(), frame_size()};
}

std::span<const float> Dataset::label(std::size_t seq, std::size_t t) const {
  if (seq >= n_sequences() || t >= seq_len()) throw InvalidInput("Dataset::label: index out of range");
  return {labels_.data() + (seq * seq_len() + t) * label_dim_, label_dim_};
}

std::span<float> Dataset::label(std::size_t seq, std::size_t t) {
  if (seq >= n_sequences() || t >= seq_len()) throw InvalidInput("Dataset::label: index out of range");
  return {labels_.data() + (seq * seq_len() + t) * label_dim_, label_dim_};
}

std::span<float> Dataset::sequence_frames(std::size_t seq) {
  if (seq >= n_sequences()) throw InvalidInput("Dataset::sequence_frames: index out of range");
  return {frames_.data() + seq * seq_len() * frame_size(), seq_len() * frame_size()};
}

std::span<float> Dataset::sequence_labels(std::size_t seq) {
  if (seq >= n_sequences()) throw InvalidInput("Dataset::sequence_labels: index out of range");
  return {labels_.data() + seq * seq_len() * label_dim_, seq_len() * label_dim_};
}

Eigen::VectorXd Dataset::frame_vector(std::size_t seq, std::size_t t) const {
  const auto f = frame(seq, t);
  Eigen::VectorXd v(static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) v[static_cast<Eigen::Index>(i)] = f[i];
  return v;
}

Observation Dataset::observation(std::size_t seq, std::size_t t) const {
  const auto f = frame(seq, t);
  Observation o;
  o.pixels.resize(static_cast<Eigen::Index>(arena().height), static_cast<Eigen::Index>(arena().width));
  for (std::size_t r = 0; r < arena().height; ++r) {
    for (std::size_t c = 0; c < arena().width; ++c) {
      o.pixels(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = f[r * arena().width + c];
    }
  }
  o.time_index = static_cast<std::int64_t>(t);
  return o;
}

Sequence Dataset::sequence(std::size_t seq) const {
  Sequence s;
  for (std::size_t t = 0; t < seq_len(); ++t) {
    s.observations.push_back(observation(seq, t));
    const auto l = label(seq, t);
    Eigen::VectorXd v(static_cast<Eigen::Index>(l.size()));
    for (std::size_t d = 0; d < l.size(); ++d) v[static_cast<Eigen::Index>(d)] = l[d];
    s.labels.push_back(std::move(v));
  }
  return s;
}

Eigen::Vector2d Dataset::position(std::size_t seq, std::size_t t) const {
  if (!has_positions()) throw InvalidInput("Dataset::position: simulator positions are not available");
  if (seq >= n_sequences() || t >= seq_len()) throw InvalidInput("Dataset::position: index out of range");
  const std::size_t i = (seq * seq_len() + t) * 2;
  return {positions_[i], positions_[i + 1]};
}

void Dataset::set_positions(std::vector<double> xy) {
  if (xy.size() != n_frames() * 2) throw InvalidInput("Dataset::set_positions: wrong length");
  positions_ = std::move(xy);
}

bool operator==(const Dataset& a, const Dataset& b) {
  const auto& x = a.config_;
  const auto& y = b.config_;
  return x.arena.width == y.arena.width && x.arena.height == y.arena.height &&
         x.n_sequences == y.n_sequences && x.seq_len == y.seq_len && x.radius == y.radius &&
         x.speed_min == y.speed_min && x.speed_max == y.speed_max && x.seed == y.seed &&
         a.label_dim_ == b.label_dim_ && a.frames_ == b.frames_ && a.labels_ == b.labels_;
}

std::vector<BallState> simulate_sequence(const GenerationConfig& config, std::size_t index) {
  Rng rng(derive_seed(config.seed, index));
  const double w = static_cast<double>(config.arena.width);
  const double h = static_cast<double>(config.arena.height);
  const double r = config.radius;
  BallState s;
  s.position = {rng.uniform(r, w - r), rng.uniform(r, h - r)};
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double speed = rng.uniform(config.speed_min, config.speed_max);
  s.velocity = {speed * std::cos(angle), speed * std::sin(angle)};
  std::vector<BallState> states;
  states.reserve(config.seq_len);
  states.push_back(s);
  for (std::size_t k = 1; k < config.seq_len; ++k) states.push_back(step(states.back(), config.arena));
  return states;
}

void render_sequence(const GenerationConfig& config, std::span<const BallState> states,
                     std::span<float> frames, std::span<float> labels) {
  const std::size_t px = config.arena.pixels();
  if (frames.size() != states.size() * px || labels.size() != states.size() * 2) {
    throw InvalidInput("render_sequence: output buffers have the wrong size");
  }
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Eigen::MatrixXd img = render(states[k], config.arena, config.radius);
    float* out = frames.data() + k * px;
    for (std::size_t row = 0; row < config.arena.height; ++row) {
      for (std::size_t col = 0; col < config.arena.width; ++col) {
        out[row * config.arena.width + col] =
            static_cast<float>(img(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)));
      }
    }
    labels[2 * k] = static_cast<float>(states[k].velocity.x());
    labels[2 * k + 1] = static_cast<float>(states[k].velocity.y());
  }
}

Dataset generate_dataset(const GenerationConfig& config, std::size_t workers) {
  config.validate();
  Dataset ds(config, 2);
  std::vector<double> positions(ds.n_frames() * 2);
  const std::size_t len = config.seq_len;
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      const auto states = simulate_sequence(config, s);
      render_sequence(config, states, ds.sequence_frames(s), ds.sequence_labels(s));
      for (std::size_t k = 0; k < len; ++k) {
        positions[(s * len + k) * 2] = states[k].position.x();
        positions[(s * len + k) * 2 + 1] = states[k].position.y();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, config.n_sequences));
  if (workers == 1) {
    work(0, config.n_sequences);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (config.n_sequences + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk;
      const std::size_t e = std::min(config.n_sequences, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  ds.set_positions(std::move(positions));
  return ds;
}

bool restore_positions(Dataset& dataset) {
  if (dataset.label_dim() != 2) return false;
  const auto& config = dataset.config();
  try {
    config.validate();
  } catch (const ConfigError&) {
    return false;
  }
  std::vector<double> positions(dataset.n_frames() * 2);
  for (std::size_t s = 0; s < dataset.n_sequences(); ++s) {
    const auto states = simulate_sequence(config, s);
    for (std::size_t k = 0; k < states.size(); ++k) {
      const auto l = dataset.label(s, k);
      if (l[0] != static_cast<float>(states[k].velocity.x()) ||
          l[1] != static_cast<float>(states[k].velocity.y())) {
        return false;
      }
      positions[(s * config.seq_len + k) * 2] = states[k].position.x();
      positions[(s * config.seq_len + k) * 2 + 1] = states[k].position.y();
    }
  }
  dataset.set_positions(std::move(positions));
  return true;
}

SequenceSplit split_sequences(std::size_t n_sequences, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> order(n_sequences);
  for (std::size_t i = 0; i < n_sequences; ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x5E9117ULL));
  shuffle(order, rng);
  auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n_sequences)));
  if (n_test == 0 && test_fraction > 0.0 && n_sequences > 1) n_test = 1;
  SequenceSplit split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

}  // namespace svae::sim

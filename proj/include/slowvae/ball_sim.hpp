// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bouncing-ball environment: one ball moving with constant speed inside a
// rectangular arena, reflecting specularly off the walls, rendered as an
// antialiased disc on a black background.
//
// Coordinates are in pixels with the origin at the top-left corner of the
// arena; x grows along columns and y along rows. Pixel (row, col) has its
// center at (col + 0.5, row + 0.5).

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace svae::sim {

struct Arena {
  std::size_t width = 32;
  std::size_t height = 32;

  std::size_t pixels() const { return width * height; }
};

struct BallState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
};

/// Advances one step. A coordinate that leaves [0, bound] is folded back
/// (x -> 2 * bound - x, or x -> -x) and its velocity component negated,
/// repeatedly if needed. Throws ConfigError when the speed exceeds the
/// smaller arena side.
BallState step(const BallState& state, const Arena& arena);

/// Pixel intensities [height x width] in [0, 1]:
/// clamp(radius + 0.5 - distance_to_center, 0, 1).
Eigen::MatrixXd render(const BallState& state, const Arena& arena, double radius);

/// Intensity-weighted center of a rendered frame, in arena coordinates.
/// Returns nullopt for an all-black frame.
std::optional<Eigen::Vector2d> frame_centroid(std::span<const float> pixels, const Arena& arena);

struct Observation {
  Eigen::MatrixXd pixels;  // [height x width]
  std::int64_t time_index = 0;
};

struct Sequence {
  std::vector<Observation> observations;
  std::vector<Eigen::VectorXd> labels;
};

struct GenerationConfig {
  Arena arena{32, 32};
  std::size_t n_sequences = 2000;
  std::size_t seq_len = 20;
  double radius = 2.0;
  double speed_min = 1.0;
  double speed_max = 4.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError when the ranges cannot produce a valid dataset.
  void validate() const;
};

/// Labeled frame sequences. Frames are stored as 32-bit floats, row-major,
/// one contiguous block per sequence.
class Dataset {
 public:
  Dataset() = default;
  Dataset(GenerationConfig config, std::size_t label_dim);

  const GenerationConfig& config() const { return config_; }
  const Arena& arena() const { return config_.arena; }
  std::size_t n_sequences() const { return config_.n_sequences; }
  std::size_t seq_len() const { return config_.seq_len; }
  std::size_t frame_size() const { return config_.arena.pixels(); }
  std::size_t label_dim() const { return label_dim_; }
  std::size_t n_frames() const { return n_sequences() * seq_len(); }

  std::span<const float> frame(std::size_t seq, std::size_t t) const;
  std::span<float> frame(std::size_t seq, std::size_t t);
  std::span<const float> label(std::size_t seq, std::size_t t) const;
  std::span<float> label(std::size_t seq, std::size_t t);
  /// All frames / labels of one sequence, contiguous.
  std::span<float> sequence_frames(std::size_t seq);
  std::span<float> sequence_labels(std::size_t seq);

  /// Frame as a float64 column vector.
  Eigen::VectorXd frame_vector(std::size_t seq, std::size_t t) const;
  Observation observation(std::size_t seq, std::size_t t) const;
  Sequence sequence(std::size_t seq) const;

  /// Ball centers from the simulator, when known.
  bool has_positions() const { return !positions_.empty(); }
  Eigen::Vector2d position(std::size_t seq, std::size_t t) const;
  void set_positions(std::vector<double> xy);
  void clear_positions() { positions_.clear(); }

  const std::vector<float>& frames_data() const { return frames_; }
  const std::vector<float>& labels_data() const { return labels_; }
  const std::vector<double>& positions_data() const { return positions_; }

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  GenerationConfig config_;
  std::size_t label_dim_ = 2;
  std::vector<float> frames_;
  std::vector<float> labels_;
  std::vector<double> positions_;  // x, y per frame
};

/// One simulated episode: states[k] is the ball at frame k.
std::vector<BallState> simulate_sequence(const GenerationConfig& config, std::size_t index);

/// Renders and labels one episode into `frames` [seq_len * pixels] and
/// `labels` [seq_len * 2]; labels[k] is the velocity at step k.
void render_sequence(const GenerationConfig& config, std::span<const BallState> states,
                     std::span<float> frames, std::span<float> labels);

/// Every sequence derives its own stream from (seed, index), so the result
/// does not depend on generation order or on `workers`.
Dataset generate_dataset(const GenerationConfig& config, std::size_t workers = 1);

/// Re-simulates ball centers for a dataset produced by generate_dataset.
/// Returns false (leaving the dataset unchanged) if the stored labels do not
/// match the simulation, e.g. for externally produced data.
bool restore_positions(Dataset& dataset);

/// Deterministic held-out split of sequence indices.
struct SequenceSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Holds out floor(test_fraction * n) sequences (at least one when n > 1 and
/// the fraction is positive) chosen by a shuffle seeded from `seed`.
SequenceSplit split_sequences(std::size_t n_sequences, double test_fraction, std::uint64_t seed);

}  // namespace svae::sim

// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "slowvae/ball_sim.hpp"
#include "slowvae/downstream.hpp"
#include "slowvae/vae.hpp"

namespace svae {

struct EvaluationConfig {
  double test_fraction = 0.1;
  std::size_t scatter_samples = 3000;
  std::uint64_t scatter_seed = 0;
};

/// Everything a full experiment needs. Serialized as JSON:
///
///   {
///     "dataset":        {"width", "height", "n_sequences", "seq_len", "radius",
///                        "speed_min", "speed_max", "seed"},
///     "representation": {"svae": {TrainConfig fields}, "bvae": {...}},
///     "downstream":     {"hidden_width", "hidden_layers", "epochs", "min_steps",
///                        "batch_size", "learning_rate",
///                        "subset_grid": ["1", "1/2", ..., "1/128"],
///                        "seeds": [1, 2, ...]},
///     "evaluation":     {"test_fraction", "scatter_samples", "scatter_seed"}
///   }
///
/// Missing keys take the desk defaults. Unknown keys are rejected.
struct ExperimentConfig {
  sim::GenerationConfig dataset;
  std::map<Method, TrainConfig> representation;
  HeadConfig head;
  std::vector<double> subset_grid;  // descending: 1, 1/2, ...
  std::vector<std::uint64_t> seeds;
  EvaluationConfig evaluation;

  /// Throws ConfigError.
  void validate() const;

  /// Training config for one representation run.
  TrainConfig train_config(Method method, std::uint64_t seed) const;

  std::vector<Method> methods() const;
};

/// Desk profile: 32x32 arena, 2000 sequences, 12 seeds, reduced encoder width.
ExperimentConfig desk_config();
/// Paper profile: 100x100 arena, 10000 sequences, 4x300 encoder.
ExperimentConfig paper_config();

/// "1", "1/2", ..., "1/128".
std::string fraction_label(double fraction);
/// Parses "1/8" or a number. Throws ConfigError unless it is 1/2^k, k in 0..7.
double parse_fraction(const nlohmann::json& value);

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::filesystem::path& path);

/// SHA-256 of the canonical JSON of `section` (for example "dataset").
std::string section_hash(const ExperimentConfig& config, const std::string& section);

}  // namespace svae

// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0
//
// The five pipeline commands behind the CLI. Each one takes an already
// loaded ExperimentConfig and works on files; none of them parse arguments.
//
// run-all directory layout:
//
//   <out>/dataset.slds
//   <out>/repr/<method>/seed_<s>.slck        (+ .loss.csv, + .stamp.json)
//   <out>/heads/<method>/seed_<s>/frac_<d>.slck  (d = subset denominator)
//   <out>/eval/{curves,cells,bias_variance,slowness,scatter}.csv, summary.json

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "slowvae/config.hpp"
#include "slowvae/vae.hpp"

namespace svae::pipeline {

namespace fs = std::filesystem;

/// A failure inside one grid cell; what() starts with the cell coordinates.
class CellFailure : public std::runtime_error {
 public:
  CellFailure(const std::string& cell, const std::string& what)
      : std::runtime_error(cell + ": " + what), cell_(cell) {}
  const std::string& cell() const { return cell_; }

 private:
  std::string cell_;
};

struct Layout {
  fs::path root;

  fs::path dataset() const;
  fs::path repr(Method method, std::uint64_t seed) const;
  fs::path head(Method method, std::uint64_t seed, double fraction) const;
  fs::path eval_dir() const;
};

/// `<checkpoint stem>.loss.csv` next to a representation checkpoint.
fs::path loss_log_path(const fs::path& checkpoint);
/// `<artifact>.stamp.json`, the cache record of an artifact.
fs::path stamp_path(const fs::path& artifact);

struct GenerateSummary {
  std::uint64_t bytes = 0;
  std::string digest;
};

GenerateSummary cmd_generate(const ExperimentConfig& config, const fs::path& out, std::ostream* log = nullptr);

struct TrainReprSummary {
  std::string digest;
  std::size_t epochs = 0;
  LossBreakdown final_loss;
};

/// Trains on the training split of the dataset. On divergence the output
/// checkpoint and loss log are removed and the error is rethrown.
TrainReprSummary cmd_train_repr(const ExperimentConfig& config, const fs::path& dataset_path, Method method,
                                std::uint64_t seed, const fs::path& out, std::ostream* log = nullptr);

struct TrainHeadSummary {
  std::string digest;
  std::size_t n_examples = 0;
  std::size_t batch_size = 0;
  double train_mse = 0.0;
};

TrainHeadSummary cmd_train_downstream(const ExperimentConfig& config, const fs::path& checkpoint_path,
                                      const fs::path& dataset_path, double fraction, std::uint64_t seed,
                                      const fs::path& out, std::ostream* log = nullptr);

struct EvaluateReport {
  std::size_t evaluated_cells = 0;
  std::vector<std::string> missing;
  fs::path out_dir;
};

/// Evaluates whatever the run directory holds. Throws InvalidInput if no
/// cell at all can be evaluated.
EvaluateReport cmd_evaluate(const ExperimentConfig& config, const fs::path& run_dir, const fs::path& out_dir,
                            std::ostream* log = nullptr);

struct RunAllReport {
  bool dataset_generated = false;
  std::size_t repr_trained = 0;
  std::size_t repr_skipped = 0;
  std::size_t heads_trained = 0;
  std::size_t heads_skipped = 0;
  EvaluateReport evaluation;
};

/// generate -> representation grid -> downstream grid -> evaluate. Cells
/// whose stamp matches their inputs are skipped. Up to `workers` cells run
/// concurrently; each cell is itself deterministic.
RunAllReport cmd_run_all(const ExperimentConfig& config, const fs::path& out_dir, std::size_t workers = 1,
                         std::ostream* log = nullptr);

}  // namespace svae::pipeline

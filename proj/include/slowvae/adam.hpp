// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "slowvae/nn.hpp"

namespace svae::nn {

struct AdamHyperparams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for one DenseNet.
class OptimizerState {
 public:
  OptimizerState() = default;
  OptimizerState(const DenseNet& net, AdamHyperparams hyper);

  const AdamHyperparams& hyperparams() const { return hyper_; }
  std::uint64_t step_count() const { return steps_; }
  const GradientTape& first_moment() const { return m_; }
  const GradientTape& second_moment() const { return v_; }

  friend void adam_step(OptimizerState& state, DenseNet& net, const GradientTape& grad);

 private:
  AdamHyperparams hyper_;
  GradientTape m_;
  GradientTape v_;
  std::uint64_t steps_ = 0;
};

/// Bias-corrected adaptive-moment update, applied to `net` in place.
/// Throws TrainingDivergence (carrying the layer index) on a non-finite
/// gradient; neither the network nor the state is touched in that case.
void adam_step(OptimizerState& state, DenseNet& net, const GradientTape& grad);

}  // namespace svae::nn

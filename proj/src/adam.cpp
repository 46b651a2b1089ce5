// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "slowvae/adam.hpp"

#include <cmath>
#include <vector>

#include "slowvae/errors.hpp"

namespace svae::nn {

OptimizerState::OptimizerState(const DenseNet& net, AdamHyperparams hyper)
    : hyper_(hyper), m_(GradientTape::zeros_like(net)), v_(GradientTape::zeros_like(net)) {
  if (!(hyper.learning_rate > 0) || !(hyper.epsilon > 0) || !(hyper.beta1 >= 0 && hyper.beta1 < 1) ||
      !(hyper.beta2 >= 0 && hyper.beta2 < 1)) {
    throw ConfigError("adam: learning rate and epsilon must be positive, decays in [0, 1)");
  }
}

namespace {

template <typename Param, typename Moment>
bool update(Param& p, Moment& m, Moment& v, const Moment& g, const AdamHyperparams& h, double c1, double c2) {
  m = h.beta1 * m + (1.0 - h.beta1) * g;
  v = h.beta2 * v + (1.0 - h.beta2) * g.cwiseProduct(g);
  p.array() -= h.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + h.epsilon);
  return m.allFinite() && v.allFinite() && p.allFinite();
}

}  // namespace

void adam_step(OptimizerState& state, DenseNet& net, const GradientTape& grad) {
  if (!grad.congruent_with(net) || !state.m_.congruent_with(net)) {
    throw InvalidInput("adam_step: gradient tape or optimizer state does not match the network");
  }
  const std::size_t bad = grad.first_non_finite_layer();
  if (bad != grad.weight.size()) {
    throw TrainingDivergence("adam_step: non-finite gradient in layer " + std::to_string(bad), bad);
  }
  const auto& h = state.hyper_;
  const double t = static_cast<double>(state.steps_ + 1);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  // Work on copies so an overflowing step (finite gradient, e.g. g * g = inf)
  // leaves both the network and the optimizer state untouched.
  std::vector<DenseLayer> layers = net.layers();
  GradientTape m = state.m_;
  GradientTape v = state.v_;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const bool ok = update(layers[k].weight, m.weight[k], v.weight[k], grad.weight[k], h, c1, c2) &&
                    update(layers[k].bias, m.bias[k], v.bias[k], grad.bias[k], h, c1, c2);
    if (!ok) throw TrainingDivergence("adam_step: update overflowed in layer " + std::to_string(k), k);
  }
  net.layers() = std::move(layers);
  state.m_ = std::move(m);
  state.v_ = std::move(v);
  state.steps_ += 1;
}

}  // namespace svae::nn

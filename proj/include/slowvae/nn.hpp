// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense feed-forward networks with hand-written reverse-mode gradients.
//
// Batched tensors are column-major Eigen matrices with one sample per
// column: an input batch is [input_dim x batch], an output batch is
// [output_dim x batch].

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slowvae/rng.hpp"

namespace svae::nn {

enum class Activation { relu, tanh, identity };

std::string to_string(Activation a);
/// Throws InvalidInput for unknown names.
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Eigen::MatrixXd weight;  // [out x in]
  Eigen::VectorXd bias;    // [out]
  Activation activation = Activation::identity;

  Eigen::Index input_dim() const { return weight.cols(); }
  Eigen::Index output_dim() const { return weight.rows(); }
};

/// Chain of affine maps and element-wise activations.
/// Adjacent layer dimensions always chain; the constructor rejects anything else.
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<DenseLayer> layers);

  /// Zero weights and biases. `sizes` lists input, hidden..., output widths.
  static DenseNet zeros(std::span<const std::size_t> sizes, Activation hidden,
                        Activation output);
  /// Uniform in +-sqrt(6 / (fan_in + fan_out)) per layer, zero biases.
  static DenseNet glorot_uniform(std::span<const std::size_t> sizes, Activation hidden,
                                 Activation output, Rng& rng);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_parameters() const;
  bool empty() const { return layers_.empty(); }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
  DenseLayer& layer(std::size_t i) { return layers_.at(i); }

  bool all_finite() const;

  /// Flattened parameters in declared order: for each layer, the weight
  /// matrix row by row, then the bias.
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> values);

  friend bool operator==(const DenseNet& a, const DenseNet& b);

 private:
  std::vector<DenseLayer> layers_;
};

/// Saved activations of one forward pass, consumed by backward().
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer
  std::vector<Eigen::MatrixXd> pre_activations;

  bool empty() const { return inputs.empty(); }
  void clear() {
    inputs.clear();
    pre_activations.clear();
  }
};

Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& x);
Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& x, ForwardCache& cache);
Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& x);

/// Per-parameter gradient buffers, shape-congruent with a DenseNet.
struct GradientTape {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  static GradientTape zeros_like(const DenseNet& net);
  bool congruent_with(const DenseNet& net) const;
  bool all_finite() const;
  /// Index of the first layer holding a non-finite entry, or num layers.
  std::size_t first_non_finite_layer() const;
  bool is_zero() const;

  GradientTape& operator+=(const GradientTape& other);
  GradientTape& operator*=(double s);
};

struct BackwardResult {
  GradientTape tape;
  Eigen::MatrixXd input_grad;  // [input_dim x batch]
};

/// Reverse-mode pass. `upstream` is dLoss/dOutput for the batch recorded in
/// `cache`. Parameter gradients are summed over the batch. The input
/// gradient is left empty when `want_input_grad` is false.
BackwardResult backward(const DenseNet& net, const ForwardCache& cache,
                        const Eigen::MatrixXd& upstream, bool want_input_grad = true);

}  // namespace svae::nn

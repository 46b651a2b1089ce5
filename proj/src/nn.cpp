// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "slowvae/nn.hpp"

#include <cmath>
#include <sstream>

#include "slowvae/errors.hpp"

namespace svae::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw InvalidInput("unknown activation '" + name + "'");
}

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    if (l.weight.rows() == 0 || l.weight.cols() == 0) {
      throw InvalidInput("DenseNet: layer " + std::to_string(k) + " has an empty weight matrix");
    }
    if (l.bias.size() != l.weight.rows()) {
      throw InvalidInput("DenseNet: layer " + std::to_string(k) + " bias length " +
                         std::to_string(l.bias.size()) + " != output dim " +
                         std::to_string(l.weight.rows()));
    }
    if (k > 0 && layers_[k - 1].output_dim() != l.input_dim()) {
      throw InvalidInput("DenseNet: layer " + std::to_string(k - 1) + " output " +
                         std::to_string(layers_[k - 1].output_dim()) + " does not chain into layer " +
                         std::to_string(k) + " input " + std::to_string(l.input_dim()));
    }
  }
}

namespace {

void check_sizes(std::span<const std::size_t> sizes) {
  if (sizes.size() < 2) throw InvalidInput("DenseNet: need at least input and output sizes");
  for (auto s : sizes) {
    if (s == 0) throw InvalidInput("DenseNet: layer sizes must be positive");
  }
}

Activation activation_for(std::size_t k, std::size_t n_layers, Activation hidden,
                          Activation output) {
  return k + 1 == n_layers ? output : hidden;
}

}  // namespace

DenseNet DenseNet::zeros(std::span<const std::size_t> sizes, Activation hidden,
                         Activation output) {
  check_sizes(sizes);
  std::vector<DenseLayer> layers;
  const std::size_t n = sizes.size() - 1;
  for (std::size_t k = 0; k < n; ++k) {
    const auto in = static_cast<Eigen::Index>(sizes[k]);
    const auto out = static_cast<Eigen::Index>(sizes[k + 1]);
    layers.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out),
                      activation_for(k, n, hidden, output)});
  }
  return DenseNet(std::move(layers));
}

DenseNet DenseNet::glorot_uniform(std::span<const std::size_t> sizes, Activation hidden,
                                  Activation output, Rng& rng) {
  DenseNet net = zeros(sizes, hidden, output);
  for (auto& l : net.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.input_dim() + l.output_dim()));
    // Row-major fill so the draw order matches the flattened parameter order.
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        l.weight(r, c) = rng.uniform(-limit, limit);
      }
    }
  }
  return net;
}

std::size_t DenseNet::input_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().input_dim());
}

std::size_t DenseNet::output_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().output_dim());
}

std::size_t DenseNet::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool DenseNet::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

std::vector<double> DenseNet::flat_parameters() const {
  std::vector<double> out;
  out.reserve(num_parameters());
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias[r]);
  }
  return out;
}

void DenseNet::set_flat_parameters(std::span<const double> values) {
  if (values.size() != num_parameters()) {
    throw InvalidInput("DenseNet: expected " + std::to_string(num_parameters()) +
                       " parameters, got " + std::to_string(values.size()));
  }
  std::size_t i = 0;
  for (auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = values[i++];
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = values[i++];
  }
}

bool operator==(const DenseNet& a, const DenseNet& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t k = 0; k < a.layers_.size(); ++k) {
    const auto& x = a.layers_[k];
    const auto& y = b.layers_[k];
    if (x.activation != y.activation || x.weight.rows() != y.weight.rows() ||
        x.weight.cols() != y.weight.cols() || x.weight != y.weight || x.bias != y.bias) {
      return false;
    }
  }
  return true;
}

namespace {

void apply_activation(Activation a, Eigen::MatrixXd& m) {
  switch (a) {
    case Activation::relu:
      m = m.cwiseMax(0.0);
      break;
    case Activation::tanh:
      m = m.array().tanh().matrix();
      break;
    case Activation::identity:
      break;
  }
}

// Multiplies `grad` in place by the activation derivative at `pre`.
void apply_activation_grad(Activation a, const Eigen::MatrixXd& pre, Eigen::MatrixXd& grad) {
  switch (a) {
    case Activation::relu:
      grad = (pre.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::tanh:
      grad.array() *= 1.0 - pre.array().tanh().square();
      break;
    case Activation::identity:
      break;
  }
}

void check_input(const DenseNet& net, const Eigen::MatrixXd& x) {
  if (net.empty()) throw InvalidInput("forward: network has no layers");
  if (static_cast<std::size_t>(x.rows()) != net.input_dim()) {
    throw InvalidInput("forward: input has " + std::to_string(x.rows()) + " rows, network expects " +
                       std::to_string(net.input_dim()));
  }
  if (!x.allFinite()) throw InvalidInput("forward: input contains non-finite values");
}

Eigen::MatrixXd affine(const DenseLayer& l, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = l.weight * x;
  z.colwise() += l.bias;
  return z;
}

}  // namespace

Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& x) {
  check_input(net, x);
  Eigen::MatrixXd h = x;
  for (const auto& l : net.layers()) {
    h = affine(l, h);
    apply_activation(l.activation, h);
  }
  return h;
}

Eigen::MatrixXd forward(const DenseNet& net, const Eigen::MatrixXd& x, ForwardCache& cache) {
  check_input(net, x);
  cache.clear();
  cache.inputs.reserve(net.num_layers());
  cache.pre_activations.reserve(net.num_layers());
  Eigen::MatrixXd h = x;
  for (const auto& l : net.layers()) {
    cache.inputs.push_back(h);
    h = affine(l, h);
    cache.pre_activations.push_back(h);
    apply_activation(l.activation, h);
  }
  return h;
}

Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& x) {
  Eigen::MatrixXd out = forward(net, Eigen::MatrixXd(x));
  return out.col(0);
}

GradientTape GradientTape::zeros_like(const DenseNet& net) {
  GradientTape t;
  for (const auto& l : net.layers()) {
    t.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
    t.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return t;
}

bool GradientTape::congruent_with(const DenseNet& net) const {
  if (weight.size() != net.num_layers() || bias.size() != net.num_layers()) return false;
  for (std::size_t k = 0; k < weight.size(); ++k) {
    const auto& l = net.layer(k);
    if (weight[k].rows() != l.weight.rows() || weight[k].cols() != l.weight.cols() ||
        bias[k].size() != l.bias.size()) {
      return false;
    }
  }
  return true;
}

std::size_t GradientTape::first_non_finite_layer() const {
  for (std::size_t k = 0; k < weight.size(); ++k) {
    if (!weight[k].allFinite() || !bias[k].allFinite()) return k;
  }
  return weight.size();
}

bool GradientTape::all_finite() const { return first_non_finite_layer() == weight.size(); }

bool GradientTape::is_zero() const {
  for (std::size_t k = 0; k < weight.size(); ++k) {
    if (!weight[k].isZero(0.0) || !bias[k].isZero(0.0)) return false;
  }
  return true;
}

GradientTape& GradientTape::operator+=(const GradientTape& other) {
  if (other.weight.size() != weight.size()) {
    throw InvalidInput("GradientTape: adding tapes of different depth");
  }
  for (std::size_t k = 0; k < weight.size(); ++k) {
    weight[k] += other.weight[k];
    bias[k] += other.bias[k];
  }
  return *this;
}

GradientTape& GradientTape::operator*=(double s) {
  for (std::size_t k = 0; k < weight.size(); ++k) {
    weight[k] *= s;
    bias[k] *= s;
  }
  return *this;
}

BackwardResult backward(const DenseNet& net, const ForwardCache& cache,
                        const Eigen::MatrixXd& upstream, bool want_input_grad) {
  const std::size_t n = net.num_layers();
  if (cache.empty() || cache.inputs.size() != n || cache.pre_activations.size() != n) {
    throw ProtocolError("backward: no saved activations for this network; run forward with a cache first");
  }
  const Eigen::Index batch = cache.inputs.front().cols();
  if (static_cast<std::size_t>(upstream.rows()) != net.output_dim() || upstream.cols() != batch) {
    std::ostringstream msg;
    msg << "backward: upstream gradient is " << upstream.rows() << "x" << upstream.cols()
        << ", expected " << net.output_dim() << "x" << batch;
    throw InvalidInput(msg.str());
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (cache.inputs[k].rows() != net.layer(k).weight.cols() ||
        cache.pre_activations[k].rows() != net.layer(k).weight.rows()) {
      throw ProtocolError("backward: saved activations do not match the network shape");
    }
  }

  BackwardResult result;
  result.tape.weight.resize(n);
  result.tape.bias.resize(n);
  Eigen::MatrixXd grad = upstream;
  for (std::size_t k = n; k-- > 0;) {
    const auto& l = net.layer(k);
    apply_activation_grad(l.activation, cache.pre_activations[k], grad);
    result.tape.weight[k].noalias() = grad * cache.inputs[k].transpose();
    result.tape.bias[k] = grad.rowwise().sum();
    if (k == 0 && !want_input_grad) return result;
    Eigen::MatrixXd next = l.weight.transpose() * grad;
    grad = std::move(next);
  }
  result.input_grad = std::move(grad);
  return result;
}

}  // namespace svae::nn

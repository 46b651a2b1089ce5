// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "doctest.h"
#include "slowvae/adam.hpp"
#include "slowvae/errors.hpp"

using namespace svae;
using namespace svae::nn;

namespace {

DenseNet scalar_net(double w, double b) {
  return DenseNet({DenseLayer{Eigen::MatrixXd::Constant(1, 1, w), Eigen::VectorXd::Constant(1, b),
                              Activation::identity}});
}

GradientTape scalar_grad(const DenseNet& net, double gw, double gb) {
  GradientTape g = GradientTape::zeros_like(net);
  g.weight[0](0, 0) = gw;
  g.bias[0][0] = gb;
  return g;
}

}  // namespace

TEST_SUITE("adam") {
  TEST_CASE("zero gradient leaves parameters unchanged") {
    DenseNet net = scalar_net(0.7, -0.3);
    OptimizerState s(net, {});
    adam_step(s, net, GradientTape::zeros_like(net));
    CHECK(net.layer(0).weight(0, 0) == 0.7);
    CHECK(net.layer(0).bias[0] == -0.3);
    CHECK(s.step_count() == 1);
  }

  TEST_CASE("first step moves by about -lr * sign(g)") {
    for (double g : {0.37, -5.0, 1e-3}) {
      DenseNet net = scalar_net(1.0, 0.0);
      OptimizerState s(net, {});
      adam_step(s, net, scalar_grad(net, g, 0.0));
      const double moved = net.layer(0).weight(0, 0) - 1.0;
      CHECK(std::abs(moved + 1e-3 * std::copysign(1.0, g)) < 1e-3 * 1e-3);
    }
  }

  TEST_CASE("three scripted steps follow the frozen trace") {
    // Golden values from an independent 40-digit evaluation of the update rule.
    DenseNet net = scalar_net(0.5, -0.25);
    OptimizerState s(net, {0.01, 0.9, 0.999, 1e-8});
    const double gw[3] = {0.3, -0.1, 0.2};
    const double gb[3] = {-2.0, 1.0, 0.5};
    const double w_expected[3] = {0.49000000033333332222, 0.48599781479280805196, 0.4799669501576138839};
    const double b_expected[3] = {-0.24000000004999999975, -0.23733662967024313578, -0.23672274104696710669};
    for (int t = 0; t < 3; ++t) {
      adam_step(s, net, scalar_grad(net, gw[t], gb[t]));
      CHECK(net.layer(0).weight(0, 0) == doctest::Approx(w_expected[t]).epsilon(1e-12));
      CHECK(net.layer(0).bias[0] == doctest::Approx(b_expected[t]).epsilon(1e-12));
      CHECK(s.step_count() == static_cast<std::uint64_t>(t + 1));
    }
    CHECK(s.second_moment().weight[0](0, 0) >= 0.0);
  }

  TEST_CASE("non-finite gradient raises divergence with the layer and mutates nothing") {
    const std::vector<std::size_t> sizes{2, 3, 1};
    DenseNet net = DenseNet::zeros(sizes, Activation::relu, Activation::identity);
    net.layer(0).weight.setConstant(0.5);
    const DenseNet before = net;
    OptimizerState s(net, {});
    GradientTape g = GradientTape::zeros_like(net);
    g.weight[0].setConstant(1.0);
    g.bias[1][0] = std::numeric_limits<double>::quiet_NaN();
    try {
      adam_step(s, net, g);
      FAIL("expected TrainingDivergence");
    } catch (const TrainingDivergence& e) {
      CHECK(e.layer() == 1);
    }
    CHECK(net == before);
    CHECK(s.step_count() == 0);
    CHECK(s.first_moment().is_zero());
  }

  TEST_CASE("overflowing update raises divergence and mutates nothing") {
    DenseNet net = scalar_net(1.0, 1.0);
    OptimizerState s(net, {});
    adam_step(s, net, scalar_grad(net, 0.5, 0.5));
    const DenseNet before = net;
    const GradientTape m_before = s.first_moment();
    // Finite gradient whose square overflows.
    try {
      adam_step(s, net, scalar_grad(net, 1e300, 0.0));
      FAIL("expected TrainingDivergence");
    } catch (const TrainingDivergence& e) {
      CHECK(e.layer() == 0);
    }
    CHECK(net == before);
    CHECK(s.step_count() == 1);
    CHECK(s.first_moment().weight[0] == m_before.weight[0]);
  }

  TEST_CASE("shape mismatch and bad hyperparameters are rejected") {
    DenseNet net = scalar_net(1.0, 1.0);
    OptimizerState s(net, {});
    const std::vector<std::size_t> sizes{2, 1};
    const DenseNet other = DenseNet::zeros(sizes, Activation::relu, Activation::identity);
    CHECK_THROWS_AS(adam_step(s, net, GradientTape::zeros_like(other)), InvalidInput);
    CHECK_THROWS_AS(OptimizerState(net, {0.0, 0.9, 0.999, 1e-8}), ConfigError);
    CHECK_THROWS_AS(OptimizerState(net, {1e-3, 1.0, 0.999, 1e-8}), ConfigError);
  }

  TEST_CASE("repeated runs are bit-identical") {
    auto run = [] {
      Rng rng(3);
      const std::vector<std::size_t> sizes{3, 4, 2};
      DenseNet net = DenseNet::glorot_uniform(sizes, Activation::relu, Activation::identity, rng);
      OptimizerState s(net, {});
      for (int k = 0; k < 10; ++k) {
        ForwardCache cache;
        const Eigen::MatrixXd y = forward(net, sample_standard_normal(rng, 3, 4), cache);
        adam_step(s, net, backward(net, cache, y).tape);
      }
      return net.flat_parameters();
    };
    CHECK(run() == run());
  }
}

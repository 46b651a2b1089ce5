// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "slowvae/errors.hpp"
#include "slowvae/gaussian.hpp"
#include "slowvae/rng.hpp"
#include "test_util.hpp"

using namespace svae;
using testutil::rel_err;

namespace {

DiagonalGaussian make(std::initializer_list<double> mean, std::initializer_list<double> log_var) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(mean.size())), lv(static_cast<Eigen::Index>(log_var.size()));
  Eigen::Index i = 0;
  for (double x : mean) m[i++] = x;
  i = 0;
  for (double x : log_var) lv[i++] = x;
  return {m, lv};
}

DiagonalGaussian random_gaussian(Rng& rng, std::size_t dim, double lv_lo = -1.0, double lv_hi = 1.0) {
  Eigen::VectorXd m = sample_standard_normal(rng, dim);
  Eigen::VectorXd lv(static_cast<Eigen::Index>(dim));
  for (Eigen::Index d = 0; d < lv.size(); ++d) lv[d] = rng.uniform(lv_lo, lv_hi);
  return {m, lv};
}

double log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::VectorXd& var) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double r = x[d] - mean[d];
    s += -0.5 * std::log(2.0 * std::numbers::pi * var[d]) - 0.5 * r * r / var[d];
  }
  return s;
}

// E_q[log q(z) - log N(z; 0, I)] by sampling.
double mc_kl_standard(const DiagonalGaussian& q, Rng& rng, int n) {
  const Eigen::VectorXd var = q.variance();
  const Eigen::VectorXd sd = var.cwiseSqrt();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(q.mean.size());
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(q.mean.size());
  double acc = 0.0;
  Eigen::VectorXd z(q.mean.size());
  for (int k = 0; k < n; ++k) {
    for (Eigen::Index d = 0; d < z.size(); ++d) z[d] = q.mean[d] + sd[d] * rng.normal();
    acc += log_density(z, q.mean, var) - log_density(z, zero, one);
  }
  return acc / n;
}

// Samples z_j - z_i from the two posteriors directly, then scores it under
// the implied difference density and the Brownian prior.
double mc_similarity(const DiagonalGaussian& qi, const DiagonalGaussian& qj, double dt, Rng& rng, int n) {
  const Eigen::VectorXd vi = qi.variance(), vj = qj.variance();
  const Eigen::VectorXd m = qj.mean - qi.mean;
  const Eigen::VectorXd v = vi + vj;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m.size());
  const Eigen::VectorXd prior = Eigen::VectorXd::Constant(m.size(), dt);
  double acc = 0.0;
  Eigen::VectorXd delta(m.size());
  for (int k = 0; k < n; ++k) {
    for (Eigen::Index d = 0; d < m.size(); ++d) {
      const double zi = qi.mean[d] + std::sqrt(vi[d]) * rng.normal();
      const double zj = qj.mean[d] + std::sqrt(vj[d]) * rng.normal();
      delta[d] = zj - zi;
    }
    acc += log_density(delta, m, v) - log_density(delta, zero, prior);
  }
  return acc / n;
}

}  // namespace

TEST_SUITE("gaussian") {
  TEST_CASE("standard KL closed-form values") {
    CHECK(kl_to_standard_normal(DiagonalGaussian::standard(5)) == 0.0);
    CHECK(kl_to_standard_normal(make({1.0}, {0.0})) == doctest::Approx(0.5).epsilon(1e-15));
  }

  TEST_CASE("standard KL agrees with a Monte-Carlo estimate") {
    Rng rng(21), sampler(22);
    for (int trial = 0; trial < 3; ++trial) {
      const auto q = random_gaussian(rng, 3);
      const double exact = kl_to_standard_normal(q);
      const double mc = mc_kl_standard(q, sampler, 1000000);
      CHECK(rel_err(exact, mc) < 0.01);
    }
  }

  TEST_CASE("difference distribution arithmetic") {
    const auto qi = make({1.0, 2.0}, {0.0, 0.0});
    const auto qj = make({4.0, 2.0}, {std::log(2.0), std::log(3.0)});
    const auto d = difference_distribution(qi, qj);
    CHECK(d.mean[0] == 3.0);
    CHECK(d.mean[1] == 0.0);
    CHECK(d.variance()[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(d.variance()[1] == doctest::Approx(4.0).epsilon(1e-14));

    const auto swapped = difference_distribution(qj, qi);
    CHECK((swapped.mean + d.mean).isZero());
    CHECK((swapped.log_var - d.log_var).isZero());

    const auto self = difference_distribution(qj, qj);
    CHECK(self.mean.isZero());
    CHECK(self.variance()[0] == doctest::Approx(4.0).epsilon(1e-14));

    CHECK_THROWS_AS(difference_distribution(qi, make({1.0}, {0.0})), InvalidInput);
  }

  TEST_CASE("Brownian prior") {
    const auto p = brownian_prior(2, 1.0);
    CHECK(p.mean.isZero());
    CHECK(p.log_var.isZero());
    const auto p4 = brownian_prior(1, 4.0);
    CHECK(std::sqrt(p4.variance()[0]) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(brownian_prior(2, 0.0), InvalidInput);
    CHECK_THROWS_AS(TemporalPair(3, 3), InvalidInput);
    CHECK(TemporalPair(2, 7).delta_t() == 5);
  }

  TEST_CASE("similarity loss is zero for a unit difference distribution") {
    const double lv = std::log(0.5);
    const auto q = make({0.3, -1.2}, {lv, lv});
    CHECK(std::abs(similarity_loss(q, q, 1.0)) < 1e-12);
  }

  TEST_CASE("similarity loss agrees with a Monte-Carlo estimate") {
    Rng rng(31), sampler(32);
    for (double dt : {1.0, 3.0}) {
      for (int trial = 0; trial < 2; ++trial) {
        const auto qi = random_gaussian(rng, 2);
        const auto qj = random_gaussian(rng, 2);
        const double exact = similarity_loss(qi, qj, dt);
        const double mc = mc_similarity(qi, qj, dt, sampler, 1000000);
        CHECK(rel_err(exact, mc) < 0.01);
      }
    }
  }

  TEST_CASE("similarity loss in delta_t is minimized at the total variance") {
    // Zero mean difference, total variance v = 3.7 per dim.
    const double half = std::log(3.7 / 2.0);
    const auto q = make({0.5, 0.5}, {half, half});
    double best_dt = 0.0, best = 1e300;
    for (double dt = 1.0; dt <= 10.0; dt += 1e-3) {
      const double l = similarity_loss(q, q, dt);
      if (l < best) {
        best = l;
        best_dt = dt;
      }
    }
    CHECK(best_dt == doctest::Approx(3.7).epsilon(1e-3));
    CHECK(best < 1e-9);
  }

  TEST_CASE("similarity loss decreases in delta_t up to mean-square plus variance") {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
      const auto qi = random_gaussian(rng, 1, -0.5, 0.5);
      const auto qj = random_gaussian(rng, 1, -0.5, 0.5);
      const auto d = difference_distribution(qi, qj);
      const double target = d.mean[0] * d.mean[0] + d.variance()[0];
      if (target <= 1.05) continue;
      double prev = similarity_loss(qi, qj, 1.0);
      for (double dt = 1.0 + 1e-2; dt < target; dt += 1e-2) {
        const double cur = similarity_loss(qi, qj, dt);
        CHECK(cur < prev);
        prev = cur;
      }
    }
  }

  TEST_CASE("both KLs are non-negative and positive under any small perturbation") {
    Rng rng(51);
    for (int trial = 0; trial < 200; ++trial) {
      const auto qi = random_gaussian(rng, 3, -5.0, 5.0);
      const auto qj = random_gaussian(rng, 3, -5.0, 5.0);
      CHECK(kl_to_standard_normal(qi) >= -1e-12);
      CHECK(similarity_loss(qi, qj, 1.0 + rng.index(5)) >= -1e-12);
    }
    const double lv = std::log(0.5);
    for (Eigen::Index d = 0; d < 2; ++d) {
      for (double eps : {1e-3, -1e-3}) {
        auto q = DiagonalGaussian::standard(2);
        q.mean[d] += eps;
        CHECK(kl_to_standard_normal(q) > 1e-8);
        q = DiagonalGaussian::standard(2);
        q.log_var[d] += eps;
        CHECK(kl_to_standard_normal(q) > 1e-8);

        auto a = make({0.0, 0.0}, {lv, lv});
        auto b = a;
        b.mean[d] += eps;
        CHECK(similarity_loss(a, b, 1.0) > 1e-8);
        b = a;
        b.log_var[d] += eps;
        CHECK(similarity_loss(a, b, 1.0) > 1e-8);
      }
    }
  }

  TEST_CASE("standard KL gradient") {
    const auto g0 = kl_standard_gradient(DiagonalGaussian::standard(3));
    CHECK(g0.mean.isZero());
    CHECK(g0.log_var.isZero());
    const auto g = kl_standard_gradient(make({2.0, -1.0}, {0.0, 0.0}));
    CHECK(g.mean[0] == 2.0);
    CHECK(g.mean[1] == -1.0);

    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
      auto q = random_gaussian(rng, 3, -2.0, 2.0);
      const auto an = kl_standard_gradient(q);
      auto f = [&] { return kl_to_standard_normal(q); };
      for (Eigen::Index d = 0; d < 3; ++d) {
        CHECK(rel_err(an.mean[d], testutil::central_difference(f, q.mean[d]), 1e-9) < 1e-6);
        CHECK(rel_err(an.log_var[d], testutil::central_difference(f, q.log_var[d]), 1e-9) < 1e-6);
      }
    }
  }

  TEST_CASE("similarity gradient matches central differences") {
    Rng rng(71);
    for (int trial = 0; trial < 20; ++trial) {
      auto qi = random_gaussian(rng, 2, -2.0, 2.0);
      auto qj = random_gaussian(rng, 2, -2.0, 2.0);
      const double dt = 1.0 + static_cast<double>(trial % 3);
      const auto an = similarity_gradient(qi, qj, dt);
      auto f = [&] { return similarity_loss(qi, qj, dt); };
      for (Eigen::Index d = 0; d < 2; ++d) {
        CHECK(rel_err(an.first.mean[d], testutil::central_difference(f, qi.mean[d]), 1e-9) < 1e-6);
        CHECK(rel_err(an.second.mean[d], testutil::central_difference(f, qj.mean[d]), 1e-9) < 1e-6);
        CHECK(rel_err(an.first.log_var[d], testutil::central_difference(f, qi.log_var[d]), 1e-9) < 1e-6);
        CHECK(rel_err(an.second.log_var[d], testutil::central_difference(f, qj.log_var[d]), 1e-9) < 1e-6);
      }
    }
  }

  TEST_CASE("log-variance clamping is counted and freezes the gradient") {
    reset_log_var_clamp_events();
    const auto q = make({0.0, 0.0}, {-25.0, 30.0});
    CHECK(std::isfinite(kl_to_standard_normal(q)));
    CHECK(log_var_clamp_events() == 2);
    const auto g = kl_standard_gradient(q);
    CHECK(g.log_var.isZero());
    CHECK(clamp_log_var(-3.0) == -3.0);
    CHECK(clamp_log_var(-21.0) == kLogVarMin);
    CHECK(clamp_log_var(21.0) == kLogVarMax);
    reset_log_var_clamp_events();
    CHECK(log_var_clamp_events() == 0);
  }

  TEST_CASE("invalid Gaussians are rejected") {
    CHECK_THROWS_AS(DiagonalGaussian(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)), InvalidInput);
    CHECK_THROWS_AS(DiagonalGaussian(Eigen::VectorXd::Constant(1, NAN), Eigen::VectorXd::Zero(1)), InvalidInput);
  }
}

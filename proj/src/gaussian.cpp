// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#include "slowvae/gaussian.hpp"

#include <cmath>
#include <string>

#include "slowvae/errors.hpp"

namespace svae {

namespace {

thread_local std::uint64_t g_clamp_events = 0;

void validate(const DiagonalGaussian& q, const char* who) {
  if (q.mean.size() == 0 || q.mean.size() != q.log_var.size()) {
    throw InvalidInput(std::string(who) + ": mean and log-variance must have the same positive length");
  }
  if (!q.mean.allFinite() || !q.log_var.allFinite()) {
    throw InvalidInput(std::string(who) + ": non-finite parameters");
  }
}

void validate_pair(const DiagonalGaussian& a, const DiagonalGaussian& b, const char* who) {
  validate(a, who);
  validate(b, who);
  if (a.dim() != b.dim()) {
    throw InvalidInput(std::string(who) + ": dimension mismatch " + std::to_string(a.dim()) +
                       " vs " + std::to_string(b.dim()));
  }
}

void validate_delta_t(double delta_t, const char* who) {
  if (!std::isfinite(delta_t) || delta_t < 1.0) {
    throw InvalidInput(std::string(who) + ": delta_t must be >= 1");
  }
}

bool is_clamped(double lv) { return lv < kLogVarMin || lv > kLogVarMax; }

}  // namespace

DiagonalGaussian::DiagonalGaussian(Eigen::VectorXd m, Eigen::VectorXd lv)
    : mean(std::move(m)), log_var(std::move(lv)) {
  validate(*this, "DiagonalGaussian");
}

DiagonalGaussian DiagonalGaussian::standard(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
}

Eigen::VectorXd DiagonalGaussian::variance() const {
  Eigen::VectorXd v(log_var.size());
  for (Eigen::Index d = 0; d < v.size(); ++d) v[d] = std::exp(clamp_log_var(log_var[d]));
  return v;
}

double clamp_log_var(double lv) {
  if (is_clamped(lv)) {
    ++g_clamp_events;
    return lv < kLogVarMin ? kLogVarMin : kLogVarMax;
  }
  return lv;
}

std::uint64_t log_var_clamp_events() { return g_clamp_events; }

void reset_log_var_clamp_events() { g_clamp_events = 0; }

TemporalPair::TemporalPair(std::size_t i, std::size_t j) : first(i), second(j) {
  if (j <= i) throw InvalidInput("TemporalPair: second index must come after the first");
}

double kl_to_standard_normal(const DiagonalGaussian& q) {
  validate(q, "kl_to_standard_normal");
  double sum = 0.0;
  for (Eigen::Index d = 0; d < q.mean.size(); ++d) {
    const double lv = clamp_log_var(q.log_var[d]);
    // expm1 keeps exp(lv) - 1 - lv accurate near lv = 0.
    sum += std::expm1(lv) - lv + q.mean[d] * q.mean[d];
  }
  return 0.5 * sum;
}

DiagonalGaussian difference_distribution(const DiagonalGaussian& q_i, const DiagonalGaussian& q_j) {
  validate_pair(q_i, q_j, "difference_distribution");
  const Eigen::VectorXd var = q_i.variance() + q_j.variance();
  return {q_j.mean - q_i.mean, var.array().log().matrix()};
}

DiagonalGaussian brownian_prior(std::size_t dim, double delta_t) {
  validate_delta_t(delta_t, "brownian_prior");
  if (dim == 0) throw InvalidInput("brownian_prior: dim must be positive");
  const auto n = static_cast<Eigen::Index>(dim);
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Constant(n, std::log(delta_t))};
}

double similarity_loss(const DiagonalGaussian& q_i, const DiagonalGaussian& q_j, double delta_t) {
  validate_pair(q_i, q_j, "similarity_loss");
  validate_delta_t(delta_t, "similarity_loss");
  double sum = 0.0;
  for (Eigen::Index d = 0; d < q_i.mean.size(); ++d) {
    const double m = q_j.mean[d] - q_i.mean[d];
    const double v = std::exp(clamp_log_var(q_i.log_var[d])) + std::exp(clamp_log_var(q_j.log_var[d]));
    const double ratio = v / delta_t;
    // ratio - 1 - ln(ratio), written to stay accurate when ratio ~ 1.
    const double r = ratio - 1.0;
    sum += r - std::log1p(r) + m * m / delta_t;
  }
  return 0.5 * sum;
}

GaussianGrad kl_standard_gradient(const DiagonalGaussian& q) {
  validate(q, "kl_standard_gradient");
  GaussianGrad g{q.mean, Eigen::VectorXd(q.log_var.size())};
  for (Eigen::Index d = 0; d < q.log_var.size(); ++d) {
    const double lv = q.log_var[d];
    g.log_var[d] = is_clamped(lv) ? 0.0 : 0.5 * std::expm1(lv);
  }
  return g;
}

PairGrad similarity_gradient(const DiagonalGaussian& q_i, const DiagonalGaussian& q_j,
                             double delta_t) {
  validate_pair(q_i, q_j, "similarity_gradient");
  validate_delta_t(delta_t, "similarity_gradient");
  const auto n = q_i.mean.size();
  PairGrad g{{Eigen::VectorXd(n), Eigen::VectorXd(n)}, {Eigen::VectorXd(n), Eigen::VectorXd(n)}};
  for (Eigen::Index d = 0; d < n; ++d) {
    const double m = q_j.mean[d] - q_i.mean[d];
    const double lvi = q_i.log_var[d];
    const double lvj = q_j.log_var[d];
    const double vi = std::exp(clamp_log_var(lvi));
    const double vj = std::exp(clamp_log_var(lvj));
    const double v = vi + vj;
    // dL/dv = 1/2 (1/delta_t - 1/v); dv/dlv_k = v_k.
    const double dv = 0.5 * (1.0 / delta_t - 1.0 / v);
    g.second.mean[d] = m / delta_t;
    g.first.mean[d] = -m / delta_t;
    g.first.log_var[d] = is_clamped(lvi) ? 0.0 : dv * vi;
    g.second.log_var[d] = is_clamped(lvj) ? 0.0 : dv * vj;
  }
  return g;
}

}  // namespace svae

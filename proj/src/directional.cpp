#include "dea/directional.hpp"

#include <algorithm>
#include <cmath>

#include "dea/errors.hpp"

namespace dea::directional {

DirectionalParams::DirectionalParams(double kappa_bar, double kappa, double lr_bar, double lr)
    : raw_bar_(std::atanh(kappa_bar)),
      raw_(std::atanh(kappa)),
      kappa_bar_(kappa_bar),
      kappa_(kappa),
      lr_bar_(lr_bar),
      lr_(lr) {
  if (!(std::abs(kappa_bar) < 1.0) || !(std::abs(kappa) < 1.0)) {
    throw ConfigError("directional parameters must lie in (-1, 1)");
  }
  if (!(lr_bar > 0.0) || !(lr > 0.0)) throw ConfigError("directional learning rates must be positive");
}

void DirectionalParams::step_bar(double grad_kappa_bar) {
  raw_bar_ -= lr_bar_ * grad_kappa_bar * (1.0 - kappa_bar_ * kappa_bar_);
  kappa_bar_ = std::tanh(raw_bar_);
}

void DirectionalParams::step(double grad_kappa) {
  raw_ -= lr_ * grad_kappa * (1.0 - kappa_ * kappa_);
  kappa_ = std::tanh(raw_);
}

double residual(const ResidualInputs& in, double kappa_bar, double kappa, double gamma, double alpha) {
  const double q_tilde = in.active_mean + kappa * in.active_delta;
  const double y = in.reward + gamma * (in.target_mean + kappa_bar * in.target_delta - alpha * in.next_log_prob);
  return q_tilde - y;
}

namespace {

ResidualInputs entry(const ensemble::BatchComponents& c, Eigen::Index j) {
  return {c.active_mean(j), c.active_delta(j), c.reward(j), c.target_mean(j), c.target_delta(j),
          c.next_log_prob(j)};
}

void check_cache(const ensemble::BatchComponents& c) {
  const auto n = c.reward.size();
  if (n == 0 || c.active_mean.size() != n || c.active_delta.size() != n || c.target_mean.size() != n ||
      c.target_delta.size() != n || c.next_log_prob.size() != n) {
    throw ConfigError("directional: batch components are incomplete");
  }
}

}  // namespace

std::vector<double> residuals(const ensemble::BatchComponents& cache, double kappa_bar, double kappa) {
  check_cache(cache);
  std::vector<double> e(cache.reward.size());
  for (Eigen::Index j = 0; j < cache.reward.size(); ++j) {
    e[j] = residual(entry(cache, j), kappa_bar, kappa, cache.gamma, cache.alpha);
  }
  return e;
}

double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

namespace {

double mean_sign(std::span<const double> e) {
  if (e.empty()) throw ConfigError("directional: empty residual batch");
  double s = 0.0;
  for (double v : e) s += sign(v);
  return s / static_cast<double>(e.size());
}

}  // namespace

double kappa_bar_gradient(std::span<const double> residuals, double gamma) {
  return -gamma * mean_sign(residuals);
}

double kappa_gradient(std::span<const double> residuals) { return mean_sign(residuals); }

void kappa_bar_update(DirectionalParams& params, std::span<const double> residuals, double gamma) {
  params.step_bar(kappa_bar_gradient(residuals, gamma));
}

void kappa_update(DirectionalParams& params, std::span<const double> residuals) {
  params.step(kappa_gradient(residuals));
}

double target_side_loss(const ensemble::BatchComponents& cache, double kappa_bar, double kappa) {
  const auto e = residuals(cache, kappa_bar, kappa);
  double sum = 0.0;
  for (std::size_t j = 0; j < e.size(); ++j) {
    sum += std::abs(e[j]) / std::max(cache.target_delta(j), kDisagreementFloor);
  }
  return sum / static_cast<double>(e.size());
}

double actor_side_loss(const ensemble::BatchComponents& cache, double kappa_bar, double kappa) {
  const auto e = residuals(cache, kappa_bar, kappa);
  double sum = 0.0;
  for (std::size_t j = 0; j < e.size(); ++j) {
    sum += std::abs(e[j]) / std::max(cache.active_delta(j), kDisagreementFloor);
  }
  return sum / static_cast<double>(e.size());
}

UpdateReport two_stage_update(DirectionalParams& params, const ensemble::BatchComponents& cache, bool update_bar,
                              bool update_kappa) {
  UpdateReport report;
  auto e = residuals(cache, params.kappa_bar(), params.kappa());
  double total = 0.0;
  for (double v : e) total += v;
  report.mean_residual = total / static_cast<double>(e.size());
  if (update_bar) {
    report.grad_kappa_bar = kappa_bar_gradient(e, cache.gamma);
    params.step_bar(report.grad_kappa_bar);
    e = residuals(cache, params.kappa_bar(), params.kappa());
  }
  if (update_kappa) {
    report.grad_kappa = kappa_gradient(e);
    params.step(report.grad_kappa);
  }
  return report;
}

}  // namespace dea::directional

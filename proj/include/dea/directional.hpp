#pragma once

// Learnable directional aggregation parameters.
//
// kappa_bar scales target-critic disagreement in the bootstrap target and
// kappa scales active-critic disagreement in the actor-update critic. Both
// live in (-1, 1) as tanh images of unconstrained raw scalars and are moved
// by the sign of the Bellman residual
//
//   e = [mean Q_i(s,a) + kappa * delta(s,a)]
//       - [r + gamma * (mean Qbar_i(s',a') + kappa_bar * delta_bar(s',a') - alpha * log pi(a'|s'))]
//
// The disagreement-weighted absolute residual losses reduce to sign-only
// gradients: d/d kappa_bar = -gamma * mean(sign e) and d/d kappa = mean(sign e).

#include <span>
#include <vector>

#include "dea/ensemble.hpp"

namespace dea::directional {

// Floor on disagreement denominators in the logged losses.
inline constexpr double kDisagreementFloor = 1e-8;

class DirectionalParams {
 public:
  // Raw values are atanh of the requested kappas; the kappas themselves are
  // kept exactly as given until the first update.
  DirectionalParams(double kappa_bar, double kappa, double lr_bar, double lr);

  double kappa_bar() const { return kappa_bar_; }
  double kappa() const { return kappa_; }
  double raw_bar() const { return raw_bar_; }
  double raw() const { return raw_; }
  double lr_bar() const { return lr_bar_; }
  double lr() const { return lr_; }

  // Descent on the raw parameter given d loss / d kappa_bar (or kappa);
  // the tanh chain factor (1 - kappa^2) is applied here.
  void step_bar(double grad_kappa_bar);
  void step(double grad_kappa);

 private:
  double raw_bar_;
  double raw_;
  double kappa_bar_;
  double kappa_;
  double lr_bar_;
  double lr_;
};

// Cached per-sample pieces of one mini-batch.
struct ResidualInputs {
  double active_mean = 0.0;
  double active_delta = 0.0;
  double reward = 0.0;
  double target_mean = 0.0;
  double target_delta = 0.0;
  double next_log_prob = 0.0;
};

double residual(const ResidualInputs& in, double kappa_bar, double kappa, double gamma, double alpha);

// Residuals of every sample of a cached batch.
std::vector<double> residuals(const ensemble::BatchComponents& cache, double kappa_bar, double kappa);

// sign(0) = 0.
double sign(double x);

double kappa_bar_gradient(std::span<const double> residuals, double gamma);
double kappa_gradient(std::span<const double> residuals);

void kappa_bar_update(DirectionalParams& params, std::span<const double> residuals, double gamma);
void kappa_update(DirectionalParams& params, std::span<const double> residuals);

// mean |e| / max(delta_bar(s',a'), floor): the critic-side objective.
double target_side_loss(const ensemble::BatchComponents& cache, double kappa_bar, double kappa);
// mean |e| / max(delta(s,a), floor): the actor-side objective.
double actor_side_loss(const ensemble::BatchComponents& cache, double kappa_bar, double kappa);

// Both updates on one cached batch in order: kappa_bar first, then kappa on
// residuals recomputed with the updated kappa_bar.
struct UpdateReport {
  double grad_kappa_bar = 0.0;
  double grad_kappa = 0.0;
  double mean_residual = 0.0;
};
UpdateReport two_stage_update(DirectionalParams& params, const ensemble::BatchComponents& cache,
                              bool update_bar = true, bool update_kappa = true);

}  // namespace dea::directional

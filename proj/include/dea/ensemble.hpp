#pragma once

// Critic ensemble: N active critics with Polyak-delayed targets, the
// disagreement metric, aggregation rules, targets and critic regression.

#include <span>
#include <variant>
#include <vector>

#include "dea/approx.hpp"
#include "dea/policy.hpp"
#include "dea/replay.hpp"
#include "dea/rng.hpp"

namespace dea::ensemble {

using approx::Matrix;
using approx::Vector;

struct MinAll {};
struct SubsetMin {
  int m = 2;
};
struct Mean {};
struct Directional {
  double kappa = 0.0;
};

using AggregationRule = std::variant<MinAll, SubsetMin, Mean, Directional>;

// Throws ConfigError when the rule cannot be applied to n critics.
void validate(const AggregationRule& rule, int n);

// Average pairwise absolute difference over all C(N, 2) pairs.
// Throws ConfigError for fewer than two values.
double disagreement(std::span<const double> qs);

// Uniform m-subset of {0, ..., n-1}, returned in increasing order.
std::vector<int> draw_subset(int n, int m, Rng& rng);

// Scalar aggregation. rng is consulted only by SubsetMin.
double aggregate(std::span<const double> qs, const AggregationRule& rule, Rng* rng = nullptr);

// Column-wise aggregation of an (N x B) value matrix. weight(i, j) is
// d value(j) / d qs(i, j), so the aggregate is linear in the weights at a
// fixed ordering. Mean and Directional are evaluated as an ordered weighted
// sum (an L-statistic): sorted value k carries 1/N + kappa*(2k-N+1)/C(N,2),
// which for N = 2 makes kappa = -1/2 exactly the minimum and kappa = 1/2
// exactly the maximum. SubsetMin reads `subset`.
struct ColumnAggregate {
  Vector value;
  Matrix weight;
};
ColumnAggregate aggregate_columns(const Matrix& qs, const AggregationRule& rule,
                                  std::span<const int> subset = {});

// Plain column mean and column disagreement of an (N x B) value matrix.
Vector column_mean(const Matrix& qs);
Vector column_disagreement(const Matrix& qs);

struct CriticEnsemble {
  std::vector<approx::Mlp> active;
  std::vector<approx::Mlp> target;
  std::vector<approx::AdamState> opt;

  int size() const { return static_cast<int>(active.size()); }
};

// Targets start as exact copies of the active critics.
CriticEnsemble make_ensemble(int n, int obs_dim, int act_dim, const std::vector<int>& hidden, Rng& rng);
CriticEnsemble make_ensemble(std::vector<approx::Mlp> critics);

Matrix critic_input(const Matrix& obs, const Matrix& act);

// (N x B) per-critic values.
Matrix q_values(const std::vector<approx::Mlp>& critics, const Matrix& obs, const Matrix& act);

// Per-sample components of the latest target computation, enough to
// recombine y for any critic-side kappa without touching a network.
struct BatchComponents {
  Vector reward;
  Vector target_mean;    // mean_i Qbar_i(s', a')
  Vector target_delta;   // disagreement of Qbar_i(s', a')
  Vector next_log_prob;  // log pi(a'|s')
  Vector target_aggregate;
  Vector active_mean;   // mean_i Q_i(s, a)
  Vector active_delta;  // disagreement of Q_i(s, a)
  double alpha = 0.0;
  double gamma = 0.0;
};

// y = r + gamma * (aggregate(Qbar(s', a')) - alpha * log pi(a'|s')) with a'
// freshly drawn from the actor. A SubsetMin subset is drawn once from
// subset_rng and shared by the whole batch. Throws NumericError on a
// non-finite target.
Vector critic_target(const replay::Batch& batch, const CriticEnsemble& ensemble,
                     const policy::Actor& actor, double alpha, double gamma,
                     const AggregationRule& rule, Rng& noise_rng, Rng* subset_rng = nullptr,
                     BatchComponents* cache = nullptr);

// Fills active_mean / active_delta of the cache from the active critics.
void fill_active_components(const replay::Batch& batch, const CriticEnsemble& ensemble,
                            BatchComponents& cache);

// One Adam step per critic on mean((Q_i(s,a) - y)^2). Returns the
// pre-step losses. Throws NumericError on a non-finite loss.
std::vector<double> critic_update(CriticEnsemble& ensemble, const replay::Batch& batch, const Vector& y,
                                  double lr);

// target <- tau * active + (1 - tau) * target, per parameter.
void polyak_update(std::vector<approx::Mlp>& target, const std::vector<approx::Mlp>& active, double tau);

// Actor-update critic: the aggregate of the active critics and its action
// gradient.
policy::CriticEval actor_critic_eval(const std::vector<approx::Mlp>& active, const AggregationRule& rule,
                                     const Matrix& obs, const Matrix& act);

}  // namespace dea::ensemble

#pragma once

// Evaluation protocol and summary statistics: final return, IQM, AULC and
// cross-environment average ranks.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dea/env.hpp"
#include "dea/policy.hpp"
#include "dea/rng.hpp"

namespace dea::metrics {

struct EvalRecord {
  long step = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
};

struct EvalStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over episodes
};

struct EpisodeStep {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
};

// Runs `episodes` episodes against arbitrary reset/step callables; the
// rng is seeded from eval_seed on every call.
EvalStats evaluate_returns(int episodes, std::uint64_t eval_seed,
                           const std::function<std::vector<double>(Rng&)>& reset,
                           const std::function<EpisodeStep(const std::vector<double>& action)>& step,
                           const std::function<std::vector<double>(const std::vector<double>& obs)>& act);

// Undiscounted returns of the deterministic policy tanh(mean).
EvalStats evaluate(const policy::Actor& actor, const env::EnvSpec& spec, int episodes, std::uint64_t eval_seed);

// Sorted values with floor(n/4) dropped from each tail, then averaged.
// Throws std::invalid_argument on empty input.
double iqm(std::span<const double> values);

// Mean of mean_return over uniformly spaced checkpoints.
double aulc(std::span<const EvalRecord> records);

double mean(std::span<const double> values);
double stddev(std::span<const double> values);

// values[method][env]. Ranks within each env (1 = best, ties averaged).
using MetricTable = std::map<std::string, std::map<std::string, double>>;
MetricTable per_env_ranks(const MetricTable& values, bool higher_is_better = true);

// Average over envs of per_env_ranks. Throws std::invalid_argument when a
// (method, env) cell is missing.
std::map<std::string, double> rank_table(const MetricTable& values, bool higher_is_better = true);

}  // namespace dea::metrics

#pragma once

// The training loop: environment interaction, UTD-scaled critic updates,
// directional parameter updates, actor and temperature updates.
//
// Per environment step after warmup:
//   1. act with the stochastic policy, store (s, a, r, s')
//   2. utd times: sample B, compute y, regress all critics on y, Polyak-average targets
//   3. (directional methods) kappa_bar then kappa on the last B
//   4. one actor step and one temperature step on the last B
// During warmup actions are uniform in [-1, 1]^act_dim and nothing is updated.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dea/artifacts.hpp"
#include "dea/config.hpp"
#include "dea/directional.hpp"
#include "dea/ensemble.hpp"
#include "dea/env.hpp"
#include "dea/metrics.hpp"
#include "dea/policy.hpp"
#include "dea/replay.hpp"

namespace dea {

enum class RuleKind { kMinAll, kSubsetMin, kMean, kDirectional };

// Target and actor aggregation of a method; directional kinds read the
// current kappa_bar / kappa.
struct MethodRules {
  RuleKind target = RuleKind::kMinAll;
  RuleKind actor = RuleKind::kMinAll;
  bool directional = false;  // maintains kappa_bar / kappa
};

// sac: (min, min); redq: (subset-min of 2, mean); dea: (directional, directional).
MethodRules rules_for(Method m);

struct UpdateCounters {
  long env_steps = 0;
  long post_warmup_steps = 0;
  long critic_updates = 0;  // UTD iterations; each updates all N critics
  long actor_updates = 0;
  long alpha_updates = 0;
  long kappa_bar_updates = 0;
  long kappa_updates = 0;
  long clamped_actions = 0;
};

class Trainer {
 public:
  explicit Trainer(const RunConfig& cfg);
  Trainer(const RunConfig& cfg, const MethodRules& rules);

  // Called after each target computation with the step index and batch cache.
  using TargetObserver = std::function<void(long step, const approx::Vector& y, const ensemble::BatchComponents&)>;
  // Called after each actor update with the actor-update critic values.
  using ActorObserver = std::function<void(long step, const approx::Vector& q_tilde)>;
  void set_target_observer(TargetObserver f) { on_target_ = std::move(f); }
  void set_actor_observer(ActorObserver f) { on_actor_ = std::move(f); }

  // One environment step plus its updates. Throws NumericError tagged with
  // the step index on divergence.
  void step();
  // Runs until total_steps environment steps have been taken.
  void run();
  bool done() const { return counters_.env_steps >= cfg_.regime.total_steps; }

  const RunConfig& config() const { return cfg_; }
  const MethodRules& rules() const { return rules_; }
  const UpdateCounters& counters() const { return counters_; }
  const std::vector<metrics::EvalRecord>& evaluations() const { return evals_; }
  const std::vector<artifacts::KappaRecord>& kappa_log() const { return kappa_log_; }
  const ensemble::CriticEnsemble& critics() const { return critics_; }
  const policy::Actor& actor() const { return actor_; }
  const policy::AlphaState& alpha() const { return alpha_; }
  const std::optional<directional::DirectionalParams>& directional_params() const { return kappas_; }
  const replay::ReplayBuffer& buffer() const { return buffer_; }
  const env::EnvSpec& env_spec() const { return spec_; }
  std::uint64_t eval_seed() const { return eval_seed_; }

 private:
  ensemble::AggregationRule resolve(RuleKind kind, bool target_side) const;
  void update(long step_index);

  RunConfig cfg_;
  MethodRules rules_;
  env::EnvSpec spec_;
  Rng init_rng_, env_rng_, explore_rng_, batch_rng_, subset_rng_, noise_rng_;
  std::uint64_t eval_seed_ = 0;
  env::Env env_;
  std::vector<double> obs_;
  replay::ReplayBuffer buffer_;
  ensemble::CriticEnsemble critics_;
  policy::Actor actor_;
  policy::AlphaState alpha_;
  std::optional<directional::DirectionalParams> kappas_;
  UpdateCounters counters_;
  std::vector<metrics::EvalRecord> evals_;
  std::vector<artifacts::KappaRecord> kappa_log_;
  TargetObserver on_target_;
  ActorObserver on_actor_;
};

struct RunArtifacts {
  std::filesystem::path dir;
  std::vector<metrics::EvalRecord> evaluations;
  double final_return = 0.0;
  double aulc = 0.0;
  UpdateCounters counters;
};

// Trains one run and writes metrics.csv, kappa.csv (directional methods)
// and run.json into out_dir.
RunArtifacts train(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Every (env, method, seed) combination in `spec`, each in
// out_root/<env>-<method>-seed<N>, plus out_root/summary.csv. Duplicate
// seeds are dropped with a warning on `log`. A failed run is recorded in
// the summary and does not stop its siblings. Runs execute on up to `jobs`
// threads; rows are ordered by (env, method, seed).
std::vector<artifacts::SummaryRow> sweep(const RunConfig& base, const SweepSpec& spec,
                                         const std::filesystem::path& out_root, int jobs = 1,
                                         std::ostream* log = nullptr);

}  // namespace dea

#include "dea/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "dea/errors.hpp"

namespace dea {

namespace fs = std::filesystem;

namespace {

// Batch matrices are a few hundred KiB; glibc would otherwise map and unmap
// them on every update.
void keep_batch_buffers_resident() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 64 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
    mallopt(M_TOP_PAD, 64 << 20);
  });
#endif
}

}  // namespace

MethodRules rules_for(Method m) {
  switch (m) {
    case Method::kSac: return {RuleKind::kMinAll, RuleKind::kMinAll, false};
    case Method::kRedq: return {RuleKind::kSubsetMin, RuleKind::kMean, false};
    case Method::kDea: return {RuleKind::kDirectional, RuleKind::kDirectional, true};
  }
  throw ConfigError("unknown method");
}

Trainer::Trainer(const RunConfig& cfg) : Trainer(cfg, rules_for(cfg.method)) {}

Trainer::Trainer(const RunConfig& cfg, const MethodRules& rules)
    : cfg_((cfg.validate(), cfg)),
      rules_(rules),
      spec_(env::make_spec(cfg.env)),
      init_rng_(make_stream(cfg.seed, Stream::kInit)),
      env_rng_(make_stream(cfg.seed, Stream::kEnv)),
      explore_rng_(make_stream(cfg.seed, Stream::kExploration)),
      batch_rng_(make_stream(cfg.seed, Stream::kBatch)),
      subset_rng_(make_stream(cfg.seed, Stream::kSubset)),
      noise_rng_(make_stream(cfg.seed, Stream::kLearnerNoise)),
      eval_seed_(make_stream(cfg.seed, Stream::kEval)()),
      env_(spec_),
      buffer_(static_cast<std::size_t>(cfg.replay_capacity), spec_.obs_dim, spec_.act_dim),
      critics_(ensemble::make_ensemble(cfg.regime.ensemble_size, spec_.obs_dim, spec_.act_dim, cfg.hidden_sizes(),
                                       init_rng_)),
      actor_(policy::make_actor(spec_.obs_dim, spec_.act_dim, cfg.hidden_sizes(), init_rng_)),
      alpha_(policy::make_alpha_state(cfg.alpha_init, cfg.target_entropy(spec_.act_dim), cfg.lr)) {
  keep_batch_buffers_resident();
  const bool uses_directional = rules_.directional || rules_.target == RuleKind::kDirectional ||
                                rules_.actor == RuleKind::kDirectional;
  if (uses_directional) {
    kappas_.emplace(cfg.kappa_bar_init, cfg.kappa_init, cfg.lr_kappa_bar, cfg.lr_kappa);
  }
  ensemble::validate(resolve(rules_.target, true), critics_.size());
  ensemble::validate(resolve(rules_.actor, false), critics_.size());
  if (rules_.actor == RuleKind::kSubsetMin) throw ConfigError("subset-min is a target-only rule");
  obs_ = env_.reset(env_rng_);
}

ensemble::AggregationRule Trainer::resolve(RuleKind kind, bool target_side) const {
  switch (kind) {
    case RuleKind::kMinAll: return ensemble::MinAll{};
    case RuleKind::kSubsetMin: return ensemble::SubsetMin{2};
    case RuleKind::kMean: return ensemble::Mean{};
    case RuleKind::kDirectional:
      return ensemble::Directional{target_side ? kappas_->kappa_bar() : kappas_->kappa()};
  }
  throw ConfigError("unknown aggregation rule");
}

void Trainer::step() {
  if (done()) throw ConfigError("trainer: run already complete");
  const long t = counters_.env_steps;
  std::vector<double> action(spec_.act_dim);
  if (t < cfg_.warmup_steps) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& a : action) a = u(explore_rng_);
  } else {
    const policy::PolicySample s = policy::sample_action(
        actor_, Eigen::Map<const approx::Vector>(obs_.data(), static_cast<Eigen::Index>(obs_.size())),
        explore_rng_);
    action.assign(s.a.data(), s.a.data() + s.a.size());
  }

  env::StepResult r = env_.step(action);
  buffer_.push({obs_, action, r.reward, r.observation});
  // Truncation resets the episode; the stored transition still bootstraps from s'.
  obs_ = r.truncated ? env_.reset(env_rng_) : std::move(r.observation);
  counters_.env_steps = t + 1;
  counters_.clamped_actions = env_.clamped_actions();

  if (t >= cfg_.warmup_steps) {
    try {
      update(t + 1);
    } catch (const NumericError& e) {
      throw NumericError("step " + std::to_string(t + 1) + ": " + e.what());
    }
    ++counters_.post_warmup_steps;
  }

  const bool last = done();
  if ((t + 1) % cfg_.eval_interval == 0 || (last && (evals_.empty() || evals_.back().step != t + 1))) {
    const auto stats = metrics::evaluate(actor_, spec_, cfg_.eval_episodes, eval_seed_);
    evals_.push_back({t + 1, stats.mean, stats.std});
  }
}

void Trainer::update(long step_index) {
  const double gamma = cfg_.gamma;
  replay::Batch batch;
  ensemble::BatchComponents cache;
  for (int k = 0; k < cfg_.regime.utd; ++k) {
    batch = buffer_.sample_batch(static_cast<std::size_t>(cfg_.batch_size), batch_rng_);
    const approx::Vector y = ensemble::critic_target(batch, critics_, actor_, alpha_.alpha(), gamma,
                                                     resolve(rules_.target, true), noise_rng_, &subset_rng_, &cache);
    if (on_target_) on_target_(step_index, y, cache);
    ensemble::critic_update(critics_, batch, y, cfg_.lr);
    ensemble::polyak_update(critics_.target, critics_.active, cfg_.tau);
    ++counters_.critic_updates;
  }

  if (rules_.directional) {
    ensemble::fill_active_components(batch, critics_, cache);
    const bool upd_bar = !cfg_.freeze_kappa_bar;
    const bool upd_kappa = !cfg_.freeze_kappa;
    directional::two_stage_update(*kappas_, cache, upd_bar, upd_kappa);
    if (upd_bar) ++counters_.kappa_bar_updates;
    if (upd_kappa) ++counters_.kappa_updates;
    if (!std::isfinite(kappas_->kappa_bar()) || !std::isfinite(kappas_->kappa())) {
      throw NumericError("non-finite directional parameter");
    }
    kappa_log_.push_back({step_index, kappas_->kappa_bar(), kappas_->kappa(), cache.active_delta.mean(),
                          cache.target_delta.mean()});
  }

  const auto actor_rule = resolve(rules_.actor, false);
  const policy::ActionCritic critic = [&](const approx::Matrix& obs, const approx::Matrix& act) {
    return ensemble::actor_critic_eval(critics_.active, actor_rule, obs, act);
  };
  const policy::ActorObjective obj = policy::actor_update(actor_, batch.s, critic, alpha_.alpha(), cfg_.lr, noise_rng_);
  if (on_actor_) on_actor_(step_index, obj.q);
  ++counters_.actor_updates;

  policy::alpha_update(alpha_, std::span<const double>(obj.log_prob.data(), obj.log_prob.size()));
  if (!std::isfinite(alpha_.log_alpha)) throw NumericError("non-finite entropy temperature");
  ++counters_.alpha_updates;
}

void Trainer::run() {
  while (!done()) step();
}

RunArtifacts train(const RunConfig& cfg, const fs::path& out_dir) {
  RunConfig resolved = cfg;
  resolved.out_dir = out_dir.string();
  Trainer trainer(resolved);
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "run.json", std::ios::binary);
    out << to_json(resolved);
  }
  // Partial curves are kept when a run diverges.
  try {
    trainer.run();
  } catch (...) {
    artifacts::write_metrics_csv(out_dir / "metrics.csv", trainer.evaluations());
    if (trainer.rules().directional) artifacts::write_kappa_csv(out_dir / "kappa.csv", trainer.kappa_log());
    throw;
  }
  artifacts::write_metrics_csv(out_dir / "metrics.csv", trainer.evaluations());
  if (trainer.rules().directional) artifacts::write_kappa_csv(out_dir / "kappa.csv", trainer.kappa_log());

  RunArtifacts res;
  res.dir = out_dir;
  res.evaluations = trainer.evaluations();
  res.counters = trainer.counters();
  if (!res.evaluations.empty()) {
    res.final_return = res.evaluations.back().mean_return;
    res.aulc = metrics::aulc(res.evaluations);
  }
  return res;
}

std::vector<artifacts::SummaryRow> sweep(const RunConfig& base, const SweepSpec& spec, const fs::path& out_root,
                                         int jobs, std::ostream* log) {
  std::mutex log_mu;
  auto say = [&](const std::string& msg) {
    if (log == nullptr) return;
    std::lock_guard<std::mutex> lock(log_mu);
    *log << msg << std::endl;
  };

  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s : spec.seeds) {
    if (std::find(seeds.begin(), seeds.end(), s) != seeds.end()) {
      say("warning: duplicate seed " + std::to_string(s) + " ignored");
      continue;
    }
    seeds.push_back(s);
  }
  std::sort(seeds.begin(), seeds.end());

  std::vector<std::string> envs(spec.envs.begin(), spec.envs.end());
  std::sort(envs.begin(), envs.end());
  envs.erase(std::unique(envs.begin(), envs.end()), envs.end());
  std::vector<Method> methods(spec.methods.begin(), spec.methods.end());
  std::sort(methods.begin(), methods.end(), [](Method a, Method b) { return method_name(a) < method_name(b); });
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  std::vector<RunConfig> runs;
  for (const auto& e : envs) {
    for (Method m : methods) {
      for (std::uint64_t s : seeds) {
        RunConfig c = base;
        c.env = e;
        c.method = m;
        c.seed = s;
        runs.push_back(c);
      }
    }
  }

  std::vector<artifacts::SummaryRow> rows(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      const RunConfig& c = runs[i];
      artifacts::SummaryRow& row = rows[i];
      row.env = c.env;
      row.method = method_name(c.method);
      row.seed = c.seed;
      const fs::path dir = out_root / artifacts::run_dir_name(row.env, row.method, row.seed);
      try {
        const RunArtifacts a = train(c, dir);
        row.status = "ok";
        row.final_return = a.final_return;
        row.aulc = a.aulc;
        say("done " + dir.filename().string() + " final_return=" + artifacts::format_real(a.final_return));
      } catch (const std::exception& e) {
        row.status = std::string("failed: ") + e.what();
        row.final_return = std::nan("");
        row.aulc = std::nan("");
        say("failed " + dir.filename().string() + ": " + e.what());
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(runs.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < n_threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  fs::create_directories(out_root);
  artifacts::write_summary_csv(out_root / "summary.csv", rows);
  return rows;
}

}  // namespace dea

#include "dea/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace dea::metrics {

EvalStats evaluate_returns(int episodes, std::uint64_t eval_seed,
                           const std::function<std::vector<double>(Rng&)>& reset,
                           const std::function<EpisodeStep(const std::vector<double>& action)>& step,
                           const std::function<std::vector<double>(const std::vector<double>& obs)>& act) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  std::seed_seq seq{static_cast<std::uint32_t>(eval_seed & 0xffffffffu),
                    static_cast<std::uint32_t>(eval_seed >> 32)};
  Rng rng(seq);
  std::vector<double> returns;
  for (int ep = 0; ep < episodes; ++ep) {
    std::vector<double> obs = reset(rng);
    double total = 0.0;
    for (;;) {
      EpisodeStep s = step(act(obs));
      total += s.reward;
      obs = std::move(s.observation);
      if (s.done) break;
    }
    returns.push_back(total);
  }
  return {mean(returns), stddev(returns)};
}

EvalStats evaluate(const policy::Actor& actor, const env::EnvSpec& spec, int episodes, std::uint64_t eval_seed) {
  env::EnvState state;
  return evaluate_returns(
      episodes, eval_seed,
      [&](Rng& rng) {
        auto [s, obs] = env::reset(spec, rng);
        state = std::move(s);
        return obs;
      },
      [&](const std::vector<double>& action) {
        env::StepResult r = env::step(spec, state, action);
        state = std::move(r.state);
        return EpisodeStep{std::move(r.observation), r.reward, r.truncated};
      },
      [&](const std::vector<double>& obs) {
        const policy::Vector a =
            policy::deterministic_action(actor, Eigen::Map<const policy::Vector>(obs.data(), obs.size()));
        return std::vector<double>(a.data(), a.data() + a.size());
      });
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of empty input");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size()));
}

double iqm(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("iqm of empty input");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t trim = sorted.size() / 4;
  return mean(std::span<const double>(sorted).subspan(trim, sorted.size() - 2 * trim));
}

double aulc(std::span<const EvalRecord> records) {
  if (records.empty()) throw std::invalid_argument("aulc of empty learning curve");
  double s = 0.0;
  for (const auto& r : records) s += r.mean_return;
  return s / static_cast<double>(records.size());
}

MetricTable per_env_ranks(const MetricTable& values, bool higher_is_better) {
  std::set<std::string> envs;
  for (const auto& [method, row] : values) {
    for (const auto& [env, v] : row) envs.insert(env);
  }
  MetricTable ranks;
  for (const auto& env : envs) {
    std::vector<std::pair<double, std::string>> cells;
    for (const auto& [method, row] : values) {
      auto it = row.find(env);
      if (it == row.end()) {
        throw std::invalid_argument("rank table: missing value for method '" + method + "' on env '" + env + "'");
      }
      cells.emplace_back(it->second, method);
    }
    std::sort(cells.begin(), cells.end(), [&](const auto& a, const auto& b) {
      return higher_is_better ? a.first > b.first : a.first < b.first;
    });
    for (std::size_t i = 0; i < cells.size();) {
      std::size_t j = i;
      while (j < cells.size() && cells[j].first == cells[i].first) ++j;
      // Positions i+1 .. j share the average rank.
      const double shared = 0.5 * static_cast<double>(i + 1 + j);
      for (std::size_t k = i; k < j; ++k) ranks[cells[k].second][env] = shared;
      i = j;
    }
  }
  return ranks;
}

std::map<std::string, double> rank_table(const MetricTable& values, bool higher_is_better) {
  std::map<std::string, double> avg;
  for (const auto& [method, row] : per_env_ranks(values, higher_is_better)) {
    double s = 0.0;
    for (const auto& [env, r] : row) s += r;
    avg[method] = row.empty() ? 0.0 : s / static_cast<double>(row.size());
  }
  return avg;
}

}  // namespace dea::metrics

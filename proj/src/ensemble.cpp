#include "dea/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dea/errors.hpp"

namespace dea::ensemble {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

void validate(const AggregationRule& rule, int n) {
  if (n < 1) throw ConfigError("aggregation: empty ensemble");
  if (const auto* s = std::get_if<SubsetMin>(&rule)) {
    if (s->m < 2 || s->m > n) {
      std::ostringstream msg;
      msg << "aggregation: subset size " << s->m << " invalid for ensemble of " << n
          << " (need 2 <= m <= N)";
      throw ConfigError(msg.str());
    }
  }
  if (std::holds_alternative<Directional>(rule) && n < 2) {
    throw ConfigError("aggregation: directional rule needs at least two critics");
  }
}

double disagreement(std::span<const double> qs) {
  const std::size_t n = qs.size();
  if (n < 2) throw ConfigError("disagreement: at least two estimates required");
  double sum = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) sum += std::abs(qs[i] - qs[j]);
  }
  return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

std::vector<int> draw_subset(int n, int m, Rng& rng) {
  if (m < 1 || m > n) throw ConfigError("subset: size out of range");
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < m; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

ColumnAggregate aggregate_columns(const Matrix& qs, const AggregationRule& rule, std::span<const int> subset) {
  const int n = static_cast<int>(qs.rows());
  const Eigen::Index cols = qs.cols();
  validate(rule, n);
  ColumnAggregate out{Vector(cols), Matrix::Zero(n, cols)};

  auto argmin_over = [&](Eigen::Index j, std::span<const int> idx) {
    int best = idx[0];
    for (int i : idx) {
      if (qs(i, j) < qs(best, j)) best = i;
    }
    return best;
  };

  auto ordered_sum = [&](double kappa) {
    const double pairs = 0.5 * n * (n - 1);
    std::vector<double> w(n);
    for (int k = 0; k < n; ++k) {
      w[k] = 1.0 / n + (n > 1 ? kappa * (2.0 * k - n + 1) / pairs : 0.0);
    }
    std::vector<int> order(n);
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return qs(a, j) < qs(b, j); });
      double v = 0.0;
      for (int k = 0; k < n; ++k) {
        v += w[k] * qs(order[k], j);
        out.weight(order[k], j) = w[k];
      }
      out.value(j) = v;
    }
  };

  std::visit(overloaded{
                 [&](const MinAll&) {
                   std::vector<int> all(n);
                   std::iota(all.begin(), all.end(), 0);
                   for (Eigen::Index j = 0; j < cols; ++j) {
                     const int b = argmin_over(j, all);
                     out.value(j) = qs(b, j);
                     out.weight(b, j) = 1.0;
                   }
                 },
                 [&](const SubsetMin& s) {
                   if (static_cast<int>(subset.size()) != s.m) {
                     throw ConfigError("aggregation: subset does not match rule size");
                   }
                   for (int i : subset) {
                     if (i < 0 || i >= n) throw ConfigError("aggregation: subset index out of range");
                   }
                   for (Eigen::Index j = 0; j < cols; ++j) {
                     const int b = argmin_over(j, subset);
                     out.value(j) = qs(b, j);
                     out.weight(b, j) = 1.0;
                   }
                 },
                 [&](const Mean&) { ordered_sum(0.0); },
                 [&](const Directional& d) { ordered_sum(d.kappa); },
             },
             rule);
  return out;
}

double aggregate(std::span<const double> qs, const AggregationRule& rule, Rng* rng) {
  const int n = static_cast<int>(qs.size());
  validate(rule, n);
  Matrix col(n, 1);
  for (int i = 0; i < n; ++i) col(i, 0) = qs[i];
  std::vector<int> subset;
  if (const auto* s = std::get_if<SubsetMin>(&rule)) {
    if (rng == nullptr) throw ConfigError("aggregation: subset rule requires an rng");
    subset = draw_subset(n, s->m, *rng);
  }
  return aggregate_columns(col, rule, subset).value(0);
}

Vector column_mean(const Matrix& qs) { return qs.colwise().mean().transpose(); }

Vector column_disagreement(const Matrix& qs) {
  Vector d(qs.cols());
  std::vector<double> buf(qs.rows());
  for (Eigen::Index j = 0; j < qs.cols(); ++j) {
    for (Eigen::Index i = 0; i < qs.rows(); ++i) buf[i] = qs(i, j);
    d(j) = disagreement(buf);
  }
  return d;
}

CriticEnsemble make_ensemble(int n, int obs_dim, int act_dim, const std::vector<int>& hidden, Rng& rng) {
  if (n < 1) throw ConfigError("ensemble: size must be positive");
  std::vector<approx::Mlp> critics;
  for (int i = 0; i < n; ++i) critics.emplace_back(obs_dim + act_dim, hidden, 1, rng);
  return make_ensemble(std::move(critics));
}

CriticEnsemble make_ensemble(std::vector<approx::Mlp> critics) {
  CriticEnsemble e;
  for (const auto& c : critics) {
    if (c.output_dim() != 1) throw ConfigError("ensemble: critics must have scalar output");
    e.opt.push_back(approx::make_adam_state(c));
  }
  e.target = critics;
  e.active = std::move(critics);
  return e;
}

Matrix critic_input(const Matrix& obs, const Matrix& act) {
  if (obs.cols() != act.cols()) throw ConfigError("critic: obs/action batch mismatch");
  Matrix in(obs.rows() + act.rows(), obs.cols());
  in.topRows(obs.rows()) = obs;
  in.bottomRows(act.rows()) = act;
  return in;
}

Matrix q_values(const std::vector<approx::Mlp>& critics, const Matrix& obs, const Matrix& act) {
  const Matrix in = critic_input(obs, act);
  Matrix qs(static_cast<Eigen::Index>(critics.size()), obs.cols());
  for (std::size_t i = 0; i < critics.size(); ++i) qs.row(i) = critics[i].forward(in);
  return qs;
}

Vector critic_target(const replay::Batch& batch, const CriticEnsemble& ensemble, const policy::Actor& actor,
                     double alpha, double gamma, const AggregationRule& rule, Rng& noise_rng, Rng* subset_rng,
                     BatchComponents* cache) {
  validate(rule, ensemble.size());
  const policy::BatchSample next = policy::sample_actions(actor, batch.s_next, noise_rng);
  const Matrix qs = q_values(ensemble.target, batch.s_next, next.a);

  std::vector<int> subset;
  if (const auto* s = std::get_if<SubsetMin>(&rule)) {
    if (subset_rng == nullptr) throw ConfigError("critic_target: subset rule requires an rng");
    subset = draw_subset(ensemble.size(), s->m, *subset_rng);
  }
  const ColumnAggregate agg = aggregate_columns(qs, rule, subset);
  Vector y = batch.r.array() + gamma * (agg.value.array() - alpha * next.log_prob.array());
  if (!y.allFinite()) throw NumericError("critic_target: non-finite target value");

  if (cache != nullptr) {
    cache->reward = batch.r;
    cache->target_mean = column_mean(qs);
    cache->target_delta = ensemble.size() >= 2 ? column_disagreement(qs) : Vector::Zero(qs.cols());
    cache->next_log_prob = next.log_prob;
    cache->target_aggregate = agg.value;
    cache->alpha = alpha;
    cache->gamma = gamma;
  }
  return y;
}

void fill_active_components(const replay::Batch& batch, const CriticEnsemble& ensemble, BatchComponents& cache) {
  const Matrix qs = q_values(ensemble.active, batch.s, batch.a);
  cache.active_mean = column_mean(qs);
  cache.active_delta = ensemble.size() >= 2 ? column_disagreement(qs) : Vector::Zero(qs.cols());
}

std::vector<double> critic_update(CriticEnsemble& ensemble, const replay::Batch& batch, const Vector& y, double lr) {
  if (y.size() != batch.size()) throw ConfigError("critic_update: target/batch size mismatch");
  const Matrix in = critic_input(batch.s, batch.a);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<double> losses;
  for (int i = 0; i < ensemble.size(); ++i) {
    approx::Mlp::Tape tape;
    const Matrix q = ensemble.active[i].forward(in, tape);
    const Eigen::RowVectorXd err = q.row(0) - y.transpose();
    const double loss = err.squaredNorm() * inv_n;
    if (!std::isfinite(loss)) throw NumericError("critic_update: non-finite loss in critic " + std::to_string(i));
    const approx::Gradients g = ensemble.active[i].backward(tape, 2.0 * inv_n * err);
    approx::adam_step(ensemble.active[i], g, ensemble.opt[i], lr);
    losses.push_back(loss);
  }
  return losses;
}

void polyak_update(std::vector<approx::Mlp>& target, const std::vector<approx::Mlp>& active, double tau) {
  if (target.size() != active.size()) throw ConfigError("polyak: ensemble size mismatch");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("polyak: tau must lie in (0, 1]");
  const double keep = 1.0 - tau;
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto& tl = target[i].layers();
    const auto& al = active[i].layers();
    if (tl.size() != al.size()) throw ConfigError("polyak: network shape mismatch");
    for (std::size_t k = 0; k < tl.size(); ++k) {
      tl[k].weight.array() = tau * al[k].weight.array() + keep * tl[k].weight.array();
      tl[k].bias.array() = tau * al[k].bias.array() + keep * tl[k].bias.array();
    }
  }
}

policy::CriticEval actor_critic_eval(const std::vector<approx::Mlp>& active, const AggregationRule& rule,
                                     const Matrix& obs, const Matrix& act) {
  const int n = static_cast<int>(active.size());
  const Matrix in = critic_input(obs, act);
  std::vector<approx::Mlp::Tape> tapes(n);
  Matrix qs(n, obs.cols());
  for (int i = 0; i < n; ++i) qs.row(i) = active[i].forward(in, tapes[i]);

  const ColumnAggregate agg = aggregate_columns(qs, rule);
  policy::CriticEval out{agg.value, Matrix::Zero(act.rows(), act.cols())};
  for (int i = 0; i < n; ++i) {
    const Matrix g = active[i].backward_input(tapes[i], agg.weight.row(i));
    out.grad_action += g.bottomRows(act.rows());
  }
  return out;
}

}  // namespace dea::ensemble

#include "dea/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dea/errors.hpp"

namespace dea::policy {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double clamp_log_std(double v) { return std::clamp(v, kLogStdMin, kLogStdMax); }

}  // namespace

Actor make_actor(int obs_dim, int act_dim, const std::vector<int>& hidden, Rng& rng) {
  approx::Mlp net(obs_dim, hidden, 2 * act_dim, rng);
  return make_actor(std::move(net));
}

Actor make_actor(approx::Mlp net) {
  if (net.output_dim() % 2 != 0) throw ConfigError("actor: output width must be 2 * act_dim");
  Actor actor;
  actor.act_dim = net.output_dim() / 2;
  actor.opt = approx::make_adam_state(net);
  actor.net = std::move(net);
  return actor;
}

PolicySample sample_with_noise(const Actor& actor, const Vector& obs, const Vector& noise) {
  const Vector out = actor.net.forward(obs);
  const int d = actor.act_dim;
  PolicySample s{Vector(d), Vector(d), 0.0};
  for (int i = 0; i < d; ++i) {
    const double log_std = clamp_log_std(out(d + i));
    s.z(i) = out(i) + std::exp(log_std) * noise(i);
    s.a(i) = std::tanh(s.z(i));
    s.log_prob += -0.5 * noise(i) * noise(i) - log_std - kHalfLog2Pi -
                  std::log(1.0 - s.a(i) * s.a(i) + kTanhEps);
  }
  return s;
}

PolicySample sample_action(const Actor& actor, const Vector& obs, Rng& rng) {
  const Matrix noise = draw_noise(actor.act_dim, 1, rng);
  return sample_with_noise(actor, obs, noise.col(0));
}

Vector deterministic_action(const Actor& actor, const Vector& obs) {
  const Vector out = actor.net.forward(obs);
  return out.head(actor.act_dim).array().tanh().matrix();
}

double squashed_log_density(double a, double mean, double log_std) {
  const double ls = clamp_log_std(log_std);
  const double z = std::atanh(a);
  const double xi = (z - mean) / std::exp(ls);
  return -0.5 * xi * xi - ls - kHalfLog2Pi - std::log(1.0 - a * a + kTanhEps);
}

Matrix draw_noise(int act_dim, Eigen::Index batch, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix noise(act_dim, batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    for (int i = 0; i < act_dim; ++i) noise(i, j) = normal(rng);
  }
  return noise;
}

BatchSample sample_actions(const Actor& actor, const Matrix& obs, const Matrix& noise) {
  const Matrix out = actor.net.forward(obs);
  const int d = actor.act_dim;
  const Eigen::Index n = obs.cols();
  BatchSample s{Matrix(d, n), Vector::Zero(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    double lp = 0.0;
    for (int i = 0; i < d; ++i) {
      const double log_std = clamp_log_std(out(d + i, j));
      const double xi = noise(i, j);
      const double a = std::tanh(out(i, j) + std::exp(log_std) * xi);
      s.a(i, j) = a;
      lp += -0.5 * xi * xi - log_std - kHalfLog2Pi - std::log(1.0 - a * a + kTanhEps);
    }
    s.log_prob(j) = lp;
  }
  return s;
}

BatchSample sample_actions(const Actor& actor, const Matrix& obs, Rng& rng) {
  return sample_actions(actor, obs, draw_noise(actor.act_dim, obs.cols(), rng));
}

ActorObjective actor_objective(const approx::Mlp& net, int act_dim, const Matrix& obs,
                               const Matrix& noise, const ActionCritic& critic, double alpha) {
  const int d = act_dim;
  const Eigen::Index n = obs.cols();
  approx::Mlp::Tape tape;
  const Matrix out = net.forward(obs, tape);

  Matrix log_std(d, n), stdev(d, n), a(d, n);
  Vector log_prob = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int i = 0; i < d; ++i) {
      log_std(i, j) = clamp_log_std(out(d + i, j));
      stdev(i, j) = std::exp(log_std(i, j));
      const double xi = noise(i, j);
      a(i, j) = std::tanh(out(i, j) + stdev(i, j) * xi);
      log_prob(j) += -0.5 * xi * xi - log_std(i, j) - kHalfLog2Pi -
                     std::log(1.0 - a(i, j) * a(i, j) + kTanhEps);
    }
  }

  const CriticEval q = critic(obs, a);
  const double inv_n = 1.0 / static_cast<double>(n);

  ActorObjective res;
  res.log_prob = log_prob;
  res.q = q.value;
  res.mean_q = q.value.mean();
  res.loss = (alpha * log_prob - q.value).mean();
  if (!std::isfinite(res.loss)) throw NumericError("actor: non-finite loss");

  // Reparameterized chain: z = mean + std * noise, a = tanh(z).
  Matrix grad_out(2 * d, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (int i = 0; i < d; ++i) {
      const double t = a(i, j);
      const double sech2 = 1.0 - t * t;
      const double dz = inv_n * (alpha * 2.0 * t * sech2 / (sech2 + kTanhEps) -
                                 q.grad_action(i, j) * sech2);
      grad_out(i, j) = dz;
      const double raw = out(d + i, j);
      const bool inside = raw >= kLogStdMin && raw <= kLogStdMax;
      grad_out(d + i, j) = inside ? dz * stdev(i, j) * noise(i, j) - inv_n * alpha : 0.0;
    }
  }
  res.grads = net.backward(tape, grad_out);
  return res;
}

ActorObjective actor_update(Actor& actor, const Matrix& obs, const ActionCritic& critic, double alpha,
                            double lr, Rng& rng) {
  const Matrix noise = draw_noise(actor.act_dim, obs.cols(), rng);
  ActorObjective res = actor_objective(actor.net, actor.act_dim, obs, noise, critic, alpha);
  approx::adam_step(actor.net, res.grads, actor.opt, lr);
  return res;
}

double AlphaState::alpha() const { return std::exp(log_alpha); }

AlphaState make_alpha_state(double alpha_init, double target_entropy, double lr) {
  if (!(alpha_init > 0.0)) throw ConfigError("alpha_init must be positive");
  return AlphaState{std::log(alpha_init), target_entropy, lr};
}

void alpha_update(AlphaState& state, std::span<const double> log_probs) {
  if (log_probs.empty()) throw ConfigError("alpha_update: empty batch");
  double entropy = 0.0;
  for (double lp : log_probs) entropy -= lp;
  entropy /= static_cast<double>(log_probs.size());
  state.log_alpha -= state.lr * (entropy - state.target_entropy);
}

}  // namespace dea::policy

#pragma once

// Tanh-squashed Gaussian actor, its entropy-regularized update, and the
// entropy temperature.

#include <functional>
#include <span>
#include <vector>

#include "dea/approx.hpp"
#include "dea/rng.hpp"

namespace dea::policy {

using approx::Matrix;
using approx::Vector;

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kTanhEps = 1e-6;

// The network's output is [mean (act_dim rows); log_std (act_dim rows)].
struct Actor {
  approx::Mlp net;
  approx::AdamState opt;
  int act_dim = 0;
};

Actor make_actor(int obs_dim, int act_dim, const std::vector<int>& hidden, Rng& rng);
Actor make_actor(approx::Mlp net);

struct PolicySample {
  Vector z;  // pre-squash draw
  Vector a;  // tanh(z)
  double log_prob = 0.0;
};

// z = mean + std * noise, a = tanh(z).
PolicySample sample_with_noise(const Actor& actor, const Vector& obs, const Vector& noise);
PolicySample sample_action(const Actor& actor, const Vector& obs, Rng& rng);

// tanh(mean(obs)); evaluation only.
Vector deterministic_action(const Actor& actor, const Vector& obs);

// Log density of one squashed component at a in (-1, 1), including the
// tanh correction with its 1e-6 stabilizer.
double squashed_log_density(double a, double mean, double log_std);

Matrix draw_noise(int act_dim, Eigen::Index batch, Rng& rng);

struct BatchSample {
  Matrix a;         // act_dim x B
  Vector log_prob;  // B
};

BatchSample sample_actions(const Actor& actor, const Matrix& obs, Rng& rng);
BatchSample sample_actions(const Actor& actor, const Matrix& obs, const Matrix& noise);

// Actor-update critic seen by the policy: values at (obs, actions) and their
// gradient with respect to the actions. Critic parameters stay fixed.
struct CriticEval {
  Vector value;        // B
  Matrix grad_action;  // act_dim x B
};
using ActionCritic = std::function<CriticEval(const Matrix& obs, const Matrix& actions)>;

struct ActorObjective {
  double loss = 0.0;  // mean(alpha * log pi - Q~), minimized
  approx::Gradients grads;
  Vector log_prob;
  Vector q;  // actor-update critic at the sampled actions
  double mean_q = 0.0;
};

// Loss and parameter gradient for fixed reparameterization noise.
ActorObjective actor_objective(const approx::Mlp& net, int act_dim, const Matrix& obs,
                               const Matrix& noise, const ActionCritic& critic, double alpha);

// One Adam step of the actor. Throws NumericError on a non-finite loss.
ActorObjective actor_update(Actor& actor, const Matrix& obs, const ActionCritic& critic, double alpha,
                            double lr, Rng& rng);

// Temperature stored as log(alpha), descended on
// J = log(alpha) * mean(-log pi - target_entropy).
struct AlphaState {
  double log_alpha = 0.0;
  double target_entropy = 0.0;
  double lr = 3e-4;

  double alpha() const;
};

AlphaState make_alpha_state(double alpha_init, double target_entropy, double lr);

void alpha_update(AlphaState& state, std::span<const double> log_probs);

}  // namespace dea::policy

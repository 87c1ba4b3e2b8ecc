#pragma once

// Deterministic continuous-control tasks with rewards in [0, 1].
//
//   pendulum    swing-up of a torque-limited pendulum (obs: cos, sin, angular velocity)
//   pointreach  2-D point mass driven to the origin (obs: position, velocity)
//
// Actions are accepted in [-1, 1]^act_dim and scaled by action_bound.
// Episodes end only by time-limit truncation.

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dea/rng.hpp"

namespace dea::env {

enum class Kind { kPendulum, kPointReach };

struct EnvSpec {
  Kind kind = Kind::kPendulum;
  std::string name;
  int obs_dim = 0;
  int act_dim = 0;
  double action_bound = 1.0;
  int episode_len = 0;
  double reward_bound = 1.0;
};

// Throws ConfigError for unknown names.
EnvSpec make_spec(std::string_view name);

struct EnvState {
  // pendulum: (theta, theta_dot); pointreach: (px, py, vx, vy)
  std::vector<double> x;
  int step = 0;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct StepResult {
  EnvState state;
  std::vector<double> observation;
  double reward = 0.0;
  bool truncated = false;
  bool action_clamped = false;
};

std::pair<EnvState, std::vector<double>> reset(const EnvSpec& spec, Rng& rng);

std::vector<double> observe(const EnvSpec& spec, const EnvState& state);

// Pure in (state, action). Out-of-range action components are clamped to
// [-1, 1] and flagged in the result.
StepResult step(const EnvSpec& spec, const EnvState& state, std::span<const double> action);

namespace pendulum {
inline constexpr double kGravity = 10.0;
inline constexpr double kMass = 1.0;
inline constexpr double kLength = 1.0;
inline constexpr double kDt = 0.05;
inline constexpr double kMaxSpeed = 8.0;
inline constexpr double kMaxTorque = 2.0;
// pi^2 + 0.1 * 8^2 + 0.001 * 2^2
double max_cost();
double wrap_angle(double theta);
}  // namespace pendulum

// Stateful wrapper around the pure functions; counts clamped actions.
class Env {
 public:
  explicit Env(EnvSpec spec) : spec_(std::move(spec)) {}

  const EnvSpec& spec() const { return spec_; }
  const EnvState& state() const { return state_; }
  long clamped_actions() const { return clamped_; }

  std::vector<double> reset(Rng& rng);
  StepResult step(std::span<const double> action);

 private:
  EnvSpec spec_;
  EnvState state_;
  long clamped_ = 0;
};

}  // namespace dea::env

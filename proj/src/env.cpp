#include "dea/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dea/errors.hpp"

namespace dea::env {

namespace pendulum {

double max_cost() {
  return std::numbers::pi * std::numbers::pi + 0.1 * kMaxSpeed * kMaxSpeed +
         0.001 * kMaxTorque * kMaxTorque;
}

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(theta + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  w -= std::numbers::pi;
  // fmod maps pi to -pi; the interval is (-pi, pi].
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

}  // namespace pendulum

EnvSpec make_spec(std::string_view name) {
  if (name == "pendulum") {
    return EnvSpec{Kind::kPendulum, "pendulum", 3, 1, pendulum::kMaxTorque, 200, 1.0};
  }
  if (name == "pointreach") {
    return EnvSpec{Kind::kPointReach, "pointreach", 4, 2, 1.0, 100, 1.0};
  }
  throw ConfigError("unknown environment '" + std::string(name) + "' (expected pendulum or pointreach)");
}

std::vector<double> observe(const EnvSpec& spec, const EnvState& state) {
  if (spec.kind == Kind::kPendulum) {
    return {std::cos(state.x[0]), std::sin(state.x[0]), state.x[1]};
  }
  return state.x;
}

std::pair<EnvState, std::vector<double>> reset(const EnvSpec& spec, Rng& rng) {
  EnvState s;
  if (spec.kind == Kind::kPendulum) {
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> speed(-1.0, 1.0);
    const double theta = angle(rng);
    const double theta_dot = speed(rng);
    s.x = {theta, theta_dot};
  } else {
    std::uniform_real_distribution<double> pos(-4.0, 4.0);
    const double px = pos(rng);
    const double py = pos(rng);
    s.x = {px, py, 0.0, 0.0};
  }
  auto obs = observe(spec, s);
  return {std::move(s), std::move(obs)};
}

StepResult step(const EnvSpec& spec, const EnvState& state, std::span<const double> action) {
  if (static_cast<int>(action.size()) != spec.act_dim) {
    throw ConfigError("env: action has " + std::to_string(action.size()) + " components, expected " +
                      std::to_string(spec.act_dim));
  }
  StepResult out;
  std::vector<double> a(action.begin(), action.end());
  for (double& v : a) {
    if (!(v >= -1.0 && v <= 1.0)) {
      out.action_clamped = true;
      v = std::isnan(v) ? 0.0 : std::clamp(v, -1.0, 1.0);
    }
  }

  out.state = state;
  auto& x = out.state.x;
  if (spec.kind == Kind::kPendulum) {
    using namespace pendulum;
    const double u = spec.action_bound * a[0];
    const double theta = x[0];
    const double theta_dot = x[1];
    const double th = wrap_angle(theta);
    const double cost = th * th + 0.1 * theta_dot * theta_dot + 0.001 * u * u;
    out.reward = 1.0 - cost / max_cost();

    const double accel = 3.0 * kGravity / (2.0 * kLength) * std::sin(theta) +
                         3.0 / (kMass * kLength * kLength) * u;
    const double new_dot = std::clamp(theta_dot + accel * kDt, -kMaxSpeed, kMaxSpeed);
    x[0] = wrap_angle(theta + new_dot * kDt);
    x[1] = new_dot;
  } else {
    for (int i = 0; i < 2; ++i) {
      x[2 + i] = std::clamp(x[2 + i] + 0.1 * spec.action_bound * a[i], -1.0, 1.0);
      x[i] = std::clamp(x[i] + 0.1 * x[2 + i], -5.0, 5.0);
    }
    out.reward = std::exp(-std::hypot(x[0], x[1]));
  }
  out.state.step = state.step + 1;
  out.truncated = out.state.step >= spec.episode_len;
  out.observation = observe(spec, out.state);
  return out;
}

std::vector<double> Env::reset(Rng& rng) {
  auto [s, obs] = env::reset(spec_, rng);
  state_ = std::move(s);
  return obs;
}

StepResult Env::step(std::span<const double> action) {
  auto r = env::step(spec_, state_, action);
  if (r.action_clamped) ++clamped_;
  state_ = r.state;
  return r;
}

}  // namespace dea::env

#include "m2dqn/envs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "m2dqn/env_constants.hpp"
#include "m2dqn/errors.hpp"
#include "m2dqn/random.hpp"

namespace m2dqn {

std::vector<double> Environment::reset(std::uint64_t seed) {
  sample_initial_state(seed);
  elapsed_steps_ = 0;
  running_ = true;
  return observation();
}

std::vector<double> Environment::reset_to(std::span<const double> physics) {
  const std::size_t expected = physics_state().size();
  if (physics.size() != expected) {
    throw ContractViolation(spec().name + ": expected " + std::to_string(expected) + " physics coordinates");
  }
  for (double v : physics) {
    if (!std::isfinite(v)) throw ContractViolation(spec().name + ": non-finite physics coordinate");
  }
  load_physics_state(physics);
  elapsed_steps_ = 0;
  running_ = true;
  return observation();
}

StepResult Environment::step(int action) {
  if (action < 0 || action >= spec().n_actions) {
    throw ContractViolation(spec().name + ": action " + std::to_string(action) +
                            " outside [0, " + std::to_string(spec().n_actions) + ")");
  }
  if (!running_) {
    throw UsageError(spec().name + ": step called without a running episode; call reset first");
  }
  const Transition t = advance(action);
  ++elapsed_steps_;
  StepResult result;
  result.next_state = observation();
  result.reward = t.reward;
  result.terminated = t.terminated;
  result.truncated = !t.terminated && elapsed_steps_ >= spec().max_episode_steps;
  if (result.done()) running_ = false;
  return result;
}

// ---------------------------------------------------------------- CartPole

CartPole::CartPole()
    : spec_{"CartPole-v1", 4, 2, constants::cartpole::kMaxEpisodeSteps,
            constants::cartpole::kSolveThreshold} {}

void CartPole::sample_initial_state(std::uint64_t seed) {
  using constants::cartpole::kInitBound;
  Rng rng(seed);
  x_ = uniform(rng, -kInitBound, kInitBound);
  x_dot_ = uniform(rng, -kInitBound, kInitBound);
  theta_ = uniform(rng, -kInitBound, kInitBound);
  theta_dot_ = uniform(rng, -kInitBound, kInitBound);
}

void CartPole::load_physics_state(std::span<const double> p) {
  x_ = p[0];
  x_dot_ = p[1];
  theta_ = p[2];
  theta_dot_ = p[3];
}

Environment::Transition CartPole::advance(int action) {
  using namespace constants::cartpole;
  const double force = action == 1 ? kForceMag : -kForceMag;
  const double costheta = std::cos(theta_);
  const double sintheta = std::sin(theta_);
  const double temp = (force + kPoleMassLength * theta_dot_ * theta_dot_ * sintheta) / kTotalMass;
  const double thetaacc = (kGravity * sintheta - costheta * temp) /
                          (kLength * (4.0 / 3.0 - kMassPole * costheta * costheta / kTotalMass));
  const double xacc = temp - kPoleMassLength * thetaacc * costheta / kTotalMass;

  x_ = x_ + kTau * x_dot_;
  x_dot_ = x_dot_ + kTau * xacc;
  theta_ = theta_ + kTau * theta_dot_;
  theta_dot_ = theta_dot_ + kTau * thetaacc;

  const bool terminated = x_ < -kXThreshold || x_ > kXThreshold ||
                          theta_ < -kThetaThreshold || theta_ > kThetaThreshold;
  return {1.0, terminated};
}

std::vector<double> CartPole::physics_state() const { return {x_, x_dot_, theta_, theta_dot_}; }
std::vector<double> CartPole::observation() const { return physics_state(); }

// ------------------------------------------------------------- MountainCar

MountainCar::MountainCar()
    : spec_{"MountainCar-v0", 2, 3, constants::mountaincar::kMaxEpisodeSteps,
            constants::mountaincar::kSolveThreshold} {}

void MountainCar::sample_initial_state(std::uint64_t seed) {
  using namespace constants::mountaincar;
  Rng rng(seed);
  position_ = uniform(rng, kInitLow, kInitHigh);
  velocity_ = 0.0;
}

void MountainCar::load_physics_state(std::span<const double> p) {
  position_ = p[0];
  velocity_ = p[1];
}

Environment::Transition MountainCar::advance(int action) {
  using namespace constants::mountaincar;
  velocity_ += (action - 1) * kForce + std::cos(3 * position_) * (-kGravity);
  velocity_ = std::clamp(velocity_, -kMaxSpeed, kMaxSpeed);
  position_ += velocity_;
  position_ = std::clamp(position_, kMinPosition, kMaxPosition);
  if (position_ == kMinPosition && velocity_ < 0) velocity_ = 0.0;

  const bool terminated = position_ >= kGoalPosition && velocity_ >= kGoalVelocity;
  return {-1.0, terminated};
}

std::vector<double> MountainCar::physics_state() const { return {position_, velocity_}; }
std::vector<double> MountainCar::observation() const { return physics_state(); }

// ----------------------------------------------------------------- Acrobot

namespace {

using State4 = std::array<double, 4>;

// Equations of motion (the "book" variant), torque held constant over dt.
State4 acrobot_derivatives(const State4& s, double torque) {
  using namespace constants::acrobot;
  const double m1 = kLinkMass1, m2 = kLinkMass2, l1 = kLinkLength1;
  const double lc1 = kLinkComPos1, lc2 = kLinkComPos2;
  const double i1 = kLinkMoi, i2 = kLinkMoi, g = kGravity;
  const double theta1 = s[0], theta2 = s[1], dtheta1 = s[2], dtheta2 = s[3];

  const double d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2 * l1 * lc2 * std::cos(theta2)) + i1 + i2;
  const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
  const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - std::numbers::pi / 2.0);
  const double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                      2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                      (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - std::numbers::pi / 2.0) + phi2;
  const double ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) - phi2) /
                          (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
  const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
  return {dtheta1, dtheta2, ddtheta1, ddtheta2};
}

State4 axpy(const State4& y, double h, const State4& k) {
  return {y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]};
}

double wrap(double x, double lo, double hi) {
  const double diff = hi - lo;
  while (x > hi) x -= diff;
  while (x < lo) x += diff;
  return x;
}

}  // namespace

Acrobot::Acrobot()
    : spec_{"Acrobot-v1", 6, 3, constants::acrobot::kMaxEpisodeSteps, std::nullopt} {}

void Acrobot::sample_initial_state(std::uint64_t seed) {
  using constants::acrobot::kInitBound;
  Rng rng(seed);
  for (double& v : s_) v = uniform(rng, -kInitBound, kInitBound);
}

void Acrobot::load_physics_state(std::span<const double> p) {
  for (int i = 0; i < 4; ++i) s_[i] = p[i];
}

Environment::Transition Acrobot::advance(int action) {
  using namespace constants::acrobot;
  const double torque = kTorques[action];
  const State4 y0{s_[0], s_[1], s_[2], s_[3]};

  // Classic fourth-order Runge-Kutta over the single interval [0, dt].
  const double half = kDt / 2.0;
  const State4 k1 = acrobot_derivatives(y0, torque);
  const State4 k2 = acrobot_derivatives(axpy(y0, half, k1), torque);
  const State4 k3 = acrobot_derivatives(axpy(y0, half, k2), torque);
  const State4 k4 = acrobot_derivatives(axpy(y0, kDt, k3), torque);
  State4 y;
  for (int i = 0; i < 4; ++i) {
    y[i] = y0[i] + kDt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }

  s_[0] = wrap(y[0], -std::numbers::pi, std::numbers::pi);
  s_[1] = wrap(y[1], -std::numbers::pi, std::numbers::pi);
  s_[2] = std::clamp(y[2], -kMaxVel1, kMaxVel1);
  s_[3] = std::clamp(y[3], -kMaxVel2, kMaxVel2);

  const bool terminated = -std::cos(s_[0]) - std::cos(s_[1] + s_[0]) > 1.0;
  return {terminated ? 0.0 : -1.0, terminated};
}

std::vector<double> Acrobot::physics_state() const { return {s_[0], s_[1], s_[2], s_[3]}; }

std::vector<double> Acrobot::observation() const {
  return {std::cos(s_[0]), std::sin(s_[0]), std::cos(s_[1]), std::sin(s_[1]), s_[2], s_[3]};
}

// ----------------------------------------------------------------- factory

std::vector<std::string> known_environments() {
  return {"CartPole-v1", "MountainCar-v0", "Acrobot-v1", "LunarLander-v2"};
}

EnvSpec env_spec(std::string_view name) {
  if (name == "LunarLander-v2") {
    return {"LunarLander-v2", 8, 4, 1000, constants::lunarlander::kSolveThreshold};
  }
  return make_env(name)->spec();
}

std::unique_ptr<Environment> make_env(std::string_view name) {
  if (name == "CartPole-v1") return std::make_unique<CartPole>();
  if (name == "MountainCar-v0") return std::make_unique<MountainCar>();
  if (name == "Acrobot-v1") return std::make_unique<Acrobot>();
  if (name == "LunarLander-v2") {
    throw UnsupportedEnvironment(
        "LunarLander-v2 is not supported: it needs an external rigid-body physics engine "
        "(Box2D), which this project does not ship");
  }
  throw UnsupportedEnvironment("unknown environment '" + std::string(name) +
                               "'; expected CartPole-v1, MountainCar-v0 or Acrobot-v1");
}

}  // namespace m2dqn

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace m2dqn {

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int n_actions = 0;
  int max_episode_steps = 0;
  /// Mean evaluation score that counts as solving the task; absent for tasks
  /// without one (Acrobot).
  std::optional<double> solve_threshold;
};

struct StepResult {
  std::vector<double> next_state;
  double reward = 0.0;
  /// Task-defined end of episode (pole fell, goal reached).
  bool terminated = false;
  /// Time-limit end of episode.
  bool truncated = false;

  bool done() const { return terminated || truncated; }
};

/// Common driver for the classic-control tasks. Owns the step counter and the
/// episode-state checks; subclasses supply physics and observation.
///
/// One instance is single-owner: it is not safe to call into the same
/// instance from several threads, but distinct instances share nothing.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;

  /// Starts a new episode from the task's initial distribution, drawn from a
  /// generator seeded with `seed`.
  std::vector<double> reset(std::uint64_t seed);

  /// Starts a new episode from explicit physics coordinates (see
  /// physics_state) instead of the initial distribution.
  std::vector<double> reset_to(std::span<const double> physics);

  /// Throws ContractViolation for an out-of-range action and UsageError when
  /// no episode is running (never reset, or already done).
  StepResult step(int action);

  /// Internal physics coordinates (CartPole: x, x_dot, theta, theta_dot;
  /// MountainCar: position, velocity; Acrobot: theta1, theta2, dtheta1,
  /// dtheta2).
  virtual std::vector<double> physics_state() const = 0;

  virtual std::vector<double> observation() const = 0;

  int elapsed_steps() const { return elapsed_steps_; }
  bool episode_running() const { return running_; }

 protected:
  struct Transition {
    double reward;
    bool terminated;
  };
  virtual void sample_initial_state(std::uint64_t seed) = 0;
  virtual void load_physics_state(std::span<const double> physics) = 0;
  virtual Transition advance(int action) = 0;

 private:
  int elapsed_steps_ = 0;
  bool running_ = false;
};

class CartPole final : public Environment {
 public:
  CartPole();
  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> physics_state() const override;
  std::vector<double> observation() const override;

 protected:
  void sample_initial_state(std::uint64_t seed) override;
  void load_physics_state(std::span<const double> physics) override;
  Transition advance(int action) override;

 private:
  EnvSpec spec_;
  double x_ = 0, x_dot_ = 0, theta_ = 0, theta_dot_ = 0;
};

class MountainCar final : public Environment {
 public:
  MountainCar();
  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> physics_state() const override;
  std::vector<double> observation() const override;

 protected:
  void sample_initial_state(std::uint64_t seed) override;
  void load_physics_state(std::span<const double> physics) override;
  Transition advance(int action) override;

 private:
  EnvSpec spec_;
  double position_ = 0, velocity_ = 0;
};

class Acrobot final : public Environment {
 public:
  Acrobot();
  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> physics_state() const override;
  /// (cos theta1, sin theta1, cos theta2, sin theta2, dtheta1, dtheta2).
  std::vector<double> observation() const override;

 protected:
  void sample_initial_state(std::uint64_t seed) override;
  void load_physics_state(std::span<const double> physics) override;
  Transition advance(int action) override;

 private:
  EnvSpec spec_;
  double s_[4] = {0, 0, 0, 0};
};

/// Names accepted by make_env, including the ones that are recognised but
/// cannot be built.
std::vector<std::string> known_environments();

/// Static description of a named task. Works for LunarLander-v2 as well, so
/// configurations for it can be validated without the simulator.
EnvSpec env_spec(std::string_view name);

/// "CartPole-v1", "MountainCar-v0" or "Acrobot-v1". LunarLander-v2 and
/// unknown names throw UnsupportedEnvironment.
std::unique_ptr<Environment> make_env(std::string_view name);

}  // namespace m2dqn

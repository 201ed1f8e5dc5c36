#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "m2dqn/minimax_qp.hpp"
#include "m2dqn/qnet.hpp"
#include "m2dqn/random.hpp"
#include "m2dqn/replay.hpp"

namespace m2dqn {

/// Linear epsilon decay from `start` to `end` over `decay_steps`, then flat.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  std::int64_t decay_steps = 20000;

  double at(std::int64_t step) const;
};

struct AgentConfig {
  int group_size = 1;                     // N
  int batch_size = 128;                   // K
  double learning_rate = 5e-4;            // alpha
  double gamma = 0.99;
  std::int64_t target_sync_interval = 500;
  EpsilonSchedule epsilon;
  std::int64_t warmup_steps = 128;        // minimum buffer size before updates
  /// Absolute accuracy requested from the dual solver, scaled by the size of
  /// the instance (1 + max|GG^T| + max|f|).
  double qp_tolerance = 1e-12;

  void validate() const;
};

struct UpdateReport {
  Eigen::VectorXd losses;  // f_j per group
  Eigen::VectorXd lambda;
  double phi = 0.0;        // max_j f_j
  double step_norm = 0.0;  // ||G^T lambda||
};

/// Epsilon-greedy: with probability epsilon a uniform action, otherwise the
/// argmax of Q (lowest index on ties). Always consumes one uniform draw, plus
/// one more on exploration.
int select_action(const QNetwork& net, std::span<const double> state, double epsilon, Rng& rng);

/// Greedy action, lowest index on ties.
int greedy_action(const QNetwork& net, std::span<const double> state);

/// Double-Q targets: y = r + gamma * Q'(s', argmax_a Q(s', a)) with the online
/// network choosing the action and the target network scoring it; y = r for
/// terminal transitions.
std::vector<double> compute_targets(const QNetwork& online, const QNetwork& target, const Batch& batch,
                                    double gamma);

/// States, actions and double-Q targets of a sampled group, ready for
/// QNetwork::group_loss_and_grad.
TrainingBatch make_training_batch(const QNetwork& online, const QNetwork& target, const Batch& batch,
                                  double gamma);

/// Losses and Jacobian of N groups, computed with targets held fixed.
GroupObjective build_group_objective(const QNetwork& online, const QNetwork& target,
                                     const std::vector<Batch>& groups, double gamma);

/// One max-mean update: sample N groups of K, solve the dual QP for lambda
/// and step theta <- theta - alpha * G^T lambda. The target network is not
/// touched.
UpdateReport m2_update(QNetwork& online, const QNetwork& target, const ReplayBuffer& buffer,
                       const AgentConfig& config, Rng& rng);

/// Same update for already-sampled groups.
UpdateReport m2_update_groups(QNetwork& online, const QNetwork& target, const std::vector<Batch>& groups,
                              const AgentConfig& config);

/// Double DQN baseline: one batch of K, theta <- theta - alpha * grad f.
UpdateReport ddqn_update(QNetwork& online, const QNetwork& target, const ReplayBuffer& buffer,
                         const AgentConfig& config, Rng& rng);

/// Copies online into target when step is a multiple of the sync interval.
/// Returns whether a copy happened.
bool sync_target(const QNetwork& online, QNetwork& target, std::int64_t step, const AgentConfig& config);

}  // namespace m2dqn

#include "m2dqn/agent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "m2dqn/errors.hpp"

namespace m2dqn {

double EpsilonSchedule::at(std::int64_t step) const {
  if (decay_steps <= 0 || step >= decay_steps) return end;
  const double frac = static_cast<double>(std::max<std::int64_t>(step, 0)) / static_cast<double>(decay_steps);
  return start + (end - start) * frac;
}

void AgentConfig::validate() const {
  if (group_size < 1) throw ConfigError("group size N must be at least 1");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be finite and >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (target_sync_interval < 1) throw ConfigError("target sync interval must be positive");
  if (!(epsilon.start >= 0.0 && epsilon.start <= 1.0 && epsilon.end >= 0.0 && epsilon.end <= 1.0)) {
    throw ConfigError("epsilon schedule endpoints must lie in [0, 1]");
  }
  if (warmup_steps < 1) throw ConfigError("warmup steps must be positive");
  if (!(qp_tolerance > 0.0)) throw ConfigError("qp tolerance must be positive");
}

namespace {

int argmax_lowest(const double* values, Eigen::Index n) {
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < n; ++a) {
    if (values[a] > values[best]) best = a;
  }
  return static_cast<int>(best);
}

Eigen::MatrixXd stack_columns(const Batch& batch, bool next, int dim) {
  Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const std::vector<double>& s = next ? batch[k].next_state : batch[k].state;
    if (static_cast<int>(s.size()) != dim) throw ContractViolation("transition state has the wrong dimension");
    for (int i = 0; i < dim; ++i) m(i, static_cast<Eigen::Index>(k)) = s[i];
  }
  return m;
}

}  // namespace

int greedy_action(const QNetwork& net, std::span<const double> state) {
  const std::vector<double> q = net.forward(state);
  return argmax_lowest(q.data(), static_cast<Eigen::Index>(q.size()));
}

int select_action(const QNetwork& net, std::span<const double> state, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractViolation("epsilon must lie in [0, 1]");
  if (uniform01(rng) < epsilon) {
    return static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(net.output_size())));
  }
  return greedy_action(net, state);
}

std::vector<double> compute_targets(const QNetwork& online, const QNetwork& target, const Batch& batch,
                                    double gamma) {
  if (!online.same_architecture(target)) {
    throw ContractViolation("compute_targets: online and target networks differ in architecture");
  }
  std::vector<double> y(batch.size());
  if (batch.empty()) return y;
  const Eigen::MatrixXd next = stack_columns(batch, true, online.input_size());
  const Eigen::MatrixXd q_online = online.forward(next);
  const Eigen::MatrixXd q_target = target.forward(next);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    if (batch[k].terminal) {
      y[k] = batch[k].reward;
      continue;
    }
    const int a = argmax_lowest(q_online.col(col).data(), q_online.rows());
    y[k] = batch[k].reward + gamma * q_target(a, col);
  }
  return y;
}

TrainingBatch make_training_batch(const QNetwork& online, const QNetwork& target, const Batch& batch,
                                  double gamma) {
  TrainingBatch out;
  out.states = stack_columns(batch, false, online.input_size());
  out.actions.reserve(batch.size());
  for (const Transition& t : batch) out.actions.push_back(t.action);
  out.targets = compute_targets(online, target, batch, gamma);
  return out;
}

GroupObjective build_group_objective(const QNetwork& online, const QNetwork& target,
                                     const std::vector<Batch>& groups, double gamma) {
  const auto n = static_cast<Eigen::Index>(groups.size());
  GroupObjective objective;
  objective.losses.resize(n);
  objective.jacobian.resize(n, static_cast<Eigen::Index>(online.num_parameters()));
  // Each group only reads the networks; results land in their own row so the
  // outcome does not depend on evaluation order.
  for (Eigen::Index j = 0; j < n; ++j) {
    const LossAndGrad lg = online.group_loss_and_grad(make_training_batch(online, target, groups[j], gamma));
    objective.losses[j] = lg.loss;
    objective.jacobian.row(j) = lg.grad.transpose();
  }
  return objective;
}

UpdateReport m2_update_groups(QNetwork& online, const QNetwork& target, const std::vector<Batch>& groups,
                              const AgentConfig& config) {
  GroupObjective objective = build_group_objective(online, target, groups, config.gamma);
  const Eigen::MatrixXd gram = gram_matrix(objective.jacobian);
  DualSolverOptions options;
  options.tolerance =
      config.qp_tolerance * (1.0 + gram.cwiseAbs().maxCoeff() + objective.losses.cwiseAbs().maxCoeff());
  const DualSolution solution = solve_dual(gram, objective.losses, options);
  const FlatVector direction = combined_gradient(objective, solution.lambda);
  online.apply_step(direction, config.learning_rate);

  UpdateReport report;
  report.phi = objective.losses.maxCoeff();
  report.losses = std::move(objective.losses);
  report.lambda = solution.lambda;
  report.step_norm = direction.norm();
  return report;
}

UpdateReport m2_update(QNetwork& online, const QNetwork& target, const ReplayBuffer& buffer,
                       const AgentConfig& config, Rng& rng) {
  const auto groups = buffer.sample_groups(static_cast<std::size_t>(config.group_size),
                                           static_cast<std::size_t>(config.batch_size), rng);
  return m2_update_groups(online, target, groups, config);
}

UpdateReport ddqn_update(QNetwork& online, const QNetwork& target, const ReplayBuffer& buffer,
                         const AgentConfig& config, Rng& rng) {
  const Batch batch = buffer.sample_batch(static_cast<std::size_t>(config.batch_size), rng);
  const LossAndGrad lg = online.group_loss_and_grad(make_training_batch(online, target, batch, config.gamma));
  online.apply_step(lg.grad, config.learning_rate);

  UpdateReport report;
  report.losses = Eigen::VectorXd::Constant(1, lg.loss);
  report.lambda = Eigen::VectorXd::Ones(1);
  report.phi = lg.loss;
  report.step_norm = lg.grad.norm();
  return report;
}

bool sync_target(const QNetwork& online, QNetwork& target, std::int64_t step, const AgentConfig& config) {
  if (config.target_sync_interval <= 0 || step % config.target_sync_interval != 0) return false;
  copy_into(online, target);
  return true;
}

}  // namespace m2dqn

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace m2dqn {

/// Flat parameter-space vector (parameters, gradients, update directions).
///
/// Canonical layout: layers in order; within a layer the weight matrix
/// (out x in, column-major) followed by the bias vector (out).
using FlatVector = Eigen::VectorXd;

/// A batch of (state, action, target) samples. States are stored as columns.
struct TrainingBatch {
  Eigen::MatrixXd states;  // state_dim x K
  std::vector<int> actions;
  std::vector<double> targets;

  std::size_t size() const { return actions.size(); }
};

struct LossAndGrad {
  double loss = 0.0;
  FlatVector grad;
};

/// Dense feed-forward Q-network: ReLU on hidden layers, identity on the
/// output layer, one output per action.
///
/// All parameters live in one contiguous vector in the canonical layout, so
/// flatten/unflatten are copies and a gradient step is a single axpy.
/// Const member functions only read parameters and may run concurrently;
/// mutation requires exclusive access.
class QNetwork {
 public:
  QNetwork() = default;

  /// All-zero network with the given architecture.
  explicit QNetwork(std::vector<int> layer_sizes);

  /// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
  static QNetwork init(std::vector<int> layer_sizes, std::uint64_t seed);

  /// Number of parameters for an architecture: sum over layers of (in+1)*out.
  static std::size_t parameter_count(const std::vector<int>& layer_sizes);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int num_layers() const { return static_cast<int>(layer_sizes_.size()) - 1; }
  int input_size() const { return layer_sizes_.front(); }
  int output_size() const { return layer_sizes_.back(); }
  std::size_t num_parameters() const { return static_cast<std::size_t>(params_.size()); }

  Eigen::Map<const Eigen::MatrixXd> weights(int layer) const;
  Eigen::Map<Eigen::MatrixXd> weights(int layer);
  Eigen::Map<const Eigen::VectorXd> biases(int layer) const;
  Eigen::Map<Eigen::VectorXd> biases(int layer);

  const FlatVector& flatten() const { return params_; }
  void unflatten(const FlatVector& values);

  /// Q-values for a batch of states (columns); returns n_actions x batch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& states) const;
  std::vector<double> forward(std::span<const double> state) const;

  /// Mean squared TD-error of the batch against fixed targets,
  /// (1/K) sum_k (target_k - Q(s_k, a_k))^2, and its exact gradient.
  LossAndGrad group_loss_and_grad(const TrainingBatch& batch) const;

  /// theta <- theta - alpha * direction.
  void apply_step(const FlatVector& direction, double alpha);

  bool same_architecture(const QNetwork& other) const { return layer_sizes_ == other.layer_sizes_; }

 private:
  void check_input(Eigen::Index rows) const;

  std::vector<int> layer_sizes_;
  std::vector<std::size_t> offsets_;  // start of each layer's weights
  FlatVector params_;
};

/// dest <- source. Throws ContractViolation on architecture mismatch.
void copy_into(const QNetwork& source, QNetwork& dest);

/// Binary parameter checkpoint; layout documented in docs/checkpoint_format.md.
void save_checkpoint(const QNetwork& net, const std::filesystem::path& path);
QNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace m2dqn

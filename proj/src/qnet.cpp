#include "m2dqn/qnet.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "m2dqn/errors.hpp"
#include "m2dqn/random.hpp"

namespace m2dqn {

namespace {

void validate_layer_sizes(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2) {
    throw ContractViolation("QNetwork needs at least an input and an output layer");
  }
  for (int n : layer_sizes) {
    if (n <= 0) throw ContractViolation("QNetwork layer sizes must be positive");
  }
}

}  // namespace

std::size_t QNetwork::parameter_count(const std::vector<int>& layer_sizes) {
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    p += static_cast<std::size_t>(layer_sizes[l] + 1) * static_cast<std::size_t>(layer_sizes[l + 1]);
  }
  return p;
}

QNetwork::QNetwork(std::vector<int> layer_sizes) : layer_sizes_(std::move(layer_sizes)) {
  validate_layer_sizes(layer_sizes_);
  std::size_t offset = 0;
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(offset);
    offset += static_cast<std::size_t>(layer_sizes_[l] + 1) * static_cast<std::size_t>(layer_sizes_[l + 1]);
  }
  params_ = FlatVector::Zero(static_cast<Eigen::Index>(offset));
}

QNetwork QNetwork::init(std::vector<int> layer_sizes, std::uint64_t seed) {
  QNetwork net(std::move(layer_sizes));
  Rng rng(seed);
  for (int l = 0; l < net.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.layer_sizes_[l]));
    auto w = net.weights(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uniform(rng, -bound, bound);
    }
  }
  return net;
}

Eigen::Map<const Eigen::MatrixXd> QNetwork::weights(int layer) const {
  return {params_.data() + offsets_[layer], layer_sizes_[layer + 1], layer_sizes_[layer]};
}

Eigen::Map<Eigen::MatrixXd> QNetwork::weights(int layer) {
  return {params_.data() + offsets_[layer], layer_sizes_[layer + 1], layer_sizes_[layer]};
}

Eigen::Map<const Eigen::VectorXd> QNetwork::biases(int layer) const {
  const auto rows = static_cast<std::size_t>(layer_sizes_[layer + 1]);
  return {params_.data() + offsets_[layer] + rows * layer_sizes_[layer], layer_sizes_[layer + 1]};
}

Eigen::Map<Eigen::VectorXd> QNetwork::biases(int layer) {
  const auto rows = static_cast<std::size_t>(layer_sizes_[layer + 1]);
  return {params_.data() + offsets_[layer] + rows * layer_sizes_[layer], layer_sizes_[layer + 1]};
}

void QNetwork::unflatten(const FlatVector& values) {
  if (values.size() != params_.size()) {
    throw ContractViolation("unflatten: expected " + std::to_string(params_.size()) +
                            " parameters, got " + std::to_string(values.size()));
  }
  params_ = values;
}

void QNetwork::check_input(Eigen::Index rows) const {
  if (layer_sizes_.empty()) throw ContractViolation("QNetwork has no layers");
  if (rows != input_size()) {
    throw ContractViolation("state dimension " + std::to_string(rows) +
                            " does not match network input size " + std::to_string(input_size()));
  }
}

Eigen::MatrixXd QNetwork::forward(const Eigen::MatrixXd& states) const {
  check_input(states.rows());
  Eigen::MatrixXd a = states;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z(layer_sizes_[l + 1], a.cols());
    z.noalias() = weights(l) * a;
    z.colwise() += biases(l);
    if (l + 1 < num_layers()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

std::vector<double> QNetwork::forward(std::span<const double> state) const {
  const Eigen::MatrixXd x =
      Eigen::Map<const Eigen::VectorXd>(state.data(), static_cast<Eigen::Index>(state.size()));
  const Eigen::MatrixXd q = forward(x);
  return {q.data(), q.data() + q.size()};
}

LossAndGrad QNetwork::group_loss_and_grad(const TrainingBatch& batch) const {
  const auto k = static_cast<Eigen::Index>(batch.size());
  if (k == 0) throw ContractViolation("group_loss_and_grad: empty batch");
  if (batch.states.cols() != k || static_cast<Eigen::Index>(batch.targets.size()) != k) {
    throw ContractViolation("group_loss_and_grad: states, actions and targets differ in length");
  }
  check_input(batch.states.rows());
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!std::isfinite(batch.targets[i])) throw ContractViolation("group_loss_and_grad: non-finite target");
    if (batch.actions[i] < 0 || batch.actions[i] >= output_size()) {
      throw ContractViolation("group_loss_and_grad: action index out of range");
    }
  }

  // Forward pass keeping every layer's input activation.
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layer_sizes_.size());
  acts.push_back(batch.states);
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z(layer_sizes_[l + 1], k);
    z.noalias() = weights(l) * acts.back();
    z.colwise() += biases(l);
    if (l + 1 < num_layers()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  const Eigen::MatrixXd& q = acts.back();

  // d f / d q(a_k, k) = 2 (q - y) / K; zero for the actions not taken.
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(output_size(), k);
  double sum_sq = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double err = q(batch.actions[i], i) - batch.targets[i];
    sum_sq += err * err;
    delta(batch.actions[i], i) = 2.0 * err / static_cast<double>(k);
  }

  LossAndGrad out;
  out.loss = sum_sq / static_cast<double>(k);
  out.grad = FlatVector::Zero(params_.size());
  for (int l = num_layers() - 1; l >= 0; --l) {
    const int rows = layer_sizes_[l + 1];
    const int cols = layer_sizes_[l];
    Eigen::Map<Eigen::MatrixXd> dw(out.grad.data() + offsets_[l], rows, cols);
    Eigen::Map<Eigen::VectorXd> db(out.grad.data() + offsets_[l] + static_cast<std::size_t>(rows) * cols, rows);
    dw.noalias() = delta * acts[l].transpose();
    db = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd prev(cols, k);
      prev.noalias() = weights(l).transpose() * delta;
      delta = prev.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

void QNetwork::apply_step(const FlatVector& direction, double alpha) {
  if (direction.size() != params_.size()) {
    throw ContractViolation("apply_step: direction has " + std::to_string(direction.size()) +
                            " entries, network has " + std::to_string(params_.size()));
  }
  params_.noalias() -= alpha * direction;
}

void copy_into(const QNetwork& source, QNetwork& dest) {
  if (!source.same_architecture(dest)) {
    throw ContractViolation("copy_into: source and destination architectures differ");
  }
  dest.unflatten(source.flatten());
}

}  // namespace m2dqn

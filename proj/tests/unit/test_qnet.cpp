#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "finite_diff.hpp"
#include "relu_kinks.hpp"
#include "m2dqn/errors.hpp"
#include "m2dqn/qnet.hpp"
#include "m2dqn/random.hpp"

using namespace m2dqn;

namespace {

TrainingBatch random_batch(const QNetwork& net, int k, Rng& rng) {
  TrainingBatch b;
  b.states.resize(net.input_size(), k);
  for (Eigen::Index i = 0; i < b.states.size(); ++i) b.states.data()[i] = uniform(rng, -2.0, 2.0);
  for (int i = 0; i < k; ++i) {
    b.actions.push_back(static_cast<int>(uniform_index(rng, net.output_size())));
    b.targets.push_back(uniform(rng, -3.0, 3.0));
  }
  return b;
}

double loss_at(const QNetwork& like, const TrainingBatch& batch, const Eigen::VectorXd& theta) {
  QNetwork net = like;
  net.unflatten(theta);
  return net.group_loss_and_grad(batch).loss;
}

}  // namespace

TEST(QNet, ParameterCount) {
  const std::vector<int> sizes{4, 128, 64, 64, 2};
  // Enumerate: every weight and bias of every layer.
  std::size_t enumerated = 0;
  const QNetwork net(sizes);
  for (int l = 0; l < net.num_layers(); ++l) {
    enumerated += static_cast<std::size_t>(net.weights(l).size() + net.biases(l).size());
  }
  EXPECT_EQ(enumerated, 13186u);
  EXPECT_EQ(net.num_parameters(), 13186u);
  EXPECT_EQ(QNetwork::parameter_count(sizes), 13186u);
}

TEST(QNet, InitIsSeededWithZeroBiases) {
  const auto a = QNetwork::init({4, 16, 2}, 3);
  const auto b = QNetwork::init({4, 16, 2}, 3);
  EXPECT_EQ(a.flatten(), b.flatten());
  EXPECT_NE(a.flatten(), QNetwork::init({4, 16, 2}, 4).flatten());
  for (int l = 0; l < a.num_layers(); ++l) {
    EXPECT_TRUE(a.biases(l).isZero(0.0));
    const double bound = 1.0 / std::sqrt(static_cast<double>(a.layer_sizes()[l]));
    EXPECT_LE(a.weights(l).cwiseAbs().maxCoeff(), bound);
  }
}

TEST(QNet, InvalidArchitectures) {
  EXPECT_THROW(QNetwork::init({}, 0), ContractViolation);
  EXPECT_THROW(QNetwork::init({4}, 0), ContractViolation);
  EXPECT_THROW(QNetwork::init({4, 0, 2}, 0), ContractViolation);
}

TEST(QNet, ZeroNetworkOutputsZero) {
  const QNetwork net({3, 8, 8, 2});
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 5);
  EXPECT_TRUE(net.forward(x).isZero(0.0));
}

TEST(QNet, LinearNetworkIsAffine) {
  QNetwork net({3, 2});
  net.weights(0) << 1, 2, 3, -1, 0.5, 4;
  net.biases(0) << 0.25, -2;
  const std::vector<double> s{1.0, -1.0, 2.0};
  const auto q = net.forward(s);
  EXPECT_EQ(q[0], 1 * 1.0 + 2 * -1.0 + 3 * 2.0 + 0.25);
  EXPECT_EQ(q[1], -1 * 1.0 + 0.5 * -1.0 + 4 * 2.0 - 2);
}

TEST(QNet, BatchForwardMatchesRows) {
  const auto net = QNetwork::init({4, 32, 16, 3}, 9);
  Rng rng(1);
  Eigen::MatrixXd x(4, 7);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1, 1);
  const Eigen::MatrixXd q = net.forward(x);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const std::vector<double> s(x.col(c).data(), x.col(c).data() + 4);
    const auto row = net.forward(s);
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(q(a, c), row[a], 1e-14);
  }
  EXPECT_THROW(net.forward(Eigen::MatrixXd::Zero(5, 2)), ContractViolation);
}

TEST(QNet, OutputScalesWithLastLayerWeights) {
  auto net = QNetwork::init({4, 16, 16, 3}, 2);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 6);
  const Eigen::MatrixXd q = net.forward(x);
  net.weights(net.num_layers() - 1) *= 2.5;
  EXPECT_TRUE(net.forward(x).isApprox(2.5 * q, 1e-14));
}

TEST(QNet, ZeroLossAtTargets) {
  const auto net = QNetwork::init({4, 16, 2}, 5);
  Rng rng(2);
  TrainingBatch b = random_batch(net, 8, rng);
  const Eigen::MatrixXd q = net.forward(b.states);
  for (int i = 0; i < 8; ++i) b.targets[i] = q(b.actions[i], i);
  const LossAndGrad lg = net.group_loss_and_grad(b);
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_TRUE(lg.grad.isZero(0.0));
}

TEST(QNet, GradientMatchesFiniteDifferences) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto net = QNetwork::init({3, 6, 5, 2}, 100 + trial);
    ASSERT_LT(net.num_parameters(), 100u);
    const TrainingBatch b = random_batch(net, 6, rng);
    const LossAndGrad lg = net.group_loss_and_grad(b);
    const Eigen::VectorXd fd = oracle::central_differences(
        [&](const Eigen::VectorXd& th) { return loss_at(net, b, th); }, net.flatten(), 1e-5);
    for (Eigen::Index i = 0; i < fd.size(); ++i) {
      if (oracle::straddles_kink(net, b.states, i, 1e-5)) continue;
      const double scale = std::max({std::abs(fd[i]), std::abs(lg.grad[i]), 1e-6});
      EXPECT_LE(std::abs(fd[i] - lg.grad[i]) / scale, 1e-4) << "trial " << trial << " coord " << i;
    }
  }
}

TEST(QNet, LossIsMeanOfSquares) {
  const auto net = QNetwork::init({2, 4, 2}, 8);
  Rng rng(3);
  const TrainingBatch b = random_batch(net, 5, rng);
  const Eigen::MatrixXd q = net.forward(b.states);
  double expected = 0.0;
  for (int i = 0; i < 5; ++i) expected += std::pow(b.targets[i] - q(b.actions[i], i), 2);
  EXPECT_NEAR(net.group_loss_and_grad(b).loss, expected / 5, 1e-14);
}

TEST(QNet, DuplicatedAndPermutedBatches) {
  const auto net = QNetwork::init({4, 16, 8, 2}, 21);
  Rng rng(4);
  const TrainingBatch b = random_batch(net, 10, rng);
  const LossAndGrad base = net.group_loss_and_grad(b);

  TrainingBatch twice;
  twice.states.resize(4, 20);
  twice.states << b.states, b.states;
  twice.actions = b.actions;
  twice.actions.insert(twice.actions.end(), b.actions.begin(), b.actions.end());
  twice.targets = b.targets;
  twice.targets.insert(twice.targets.end(), b.targets.begin(), b.targets.end());
  const LossAndGrad dup = net.group_loss_and_grad(twice);
  EXPECT_NEAR(dup.loss, base.loss, 1e-14 * (1 + base.loss));
  EXPECT_TRUE(dup.grad.isApprox(base.grad, 1e-13));

  std::vector<int> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  TrainingBatch shuffled;
  shuffled.states.resize(4, 10);
  for (int i = 0; i < 10; ++i) {
    shuffled.states.col(i) = b.states.col(perm[i]);
    shuffled.actions.push_back(b.actions[perm[i]]);
    shuffled.targets.push_back(b.targets[perm[i]]);
  }
  const LossAndGrad sh = net.group_loss_and_grad(shuffled);
  EXPECT_NEAR(sh.loss, base.loss, 1e-14 * (1 + base.loss));
  EXPECT_TRUE(sh.grad.isApprox(base.grad, 1e-13));
}

TEST(QNet, LossErrors) {
  const auto net = QNetwork::init({2, 4, 2}, 1);
  TrainingBatch empty;
  empty.states.resize(2, 0);
  EXPECT_THROW(net.group_loss_and_grad(empty), ContractViolation);
  Rng rng(0);
  TrainingBatch b = random_batch(net, 3, rng);
  b.targets[1] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(net.group_loss_and_grad(b), ContractViolation);
  b = random_batch(net, 3, rng);
  b.states.conservativeResize(3, 3);
  EXPECT_THROW(net.group_loss_and_grad(b), ContractViolation);
}

TEST(QNet, ApplyStep) {
  auto net = QNetwork::init({4, 8, 2}, 6);
  const Eigen::VectorXd theta = net.flatten();
  const Eigen::Index p = theta.size();
  Rng rng(5);
  Eigen::VectorXd d1(p), d2(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    d1[i] = uniform(rng, -1, 1);
    d2[i] = uniform(rng, -1, 1);
  }

  net.apply_step(d1, 0.0);
  EXPECT_EQ(net.flatten(), theta);
  net.apply_step(Eigen::VectorXd::Zero(p), 0.3);
  EXPECT_EQ(net.flatten(), theta);

  auto two = net;
  two.apply_step(d1, 0.1);
  two.apply_step(d2, 0.1);
  auto one = net;
  one.apply_step(d1 + d2, 0.1);
  EXPECT_TRUE(two.flatten().isApprox(one.flatten(), 1e-14));
  EXPECT_TRUE(one.flatten().isApprox(theta - 0.1 * (d1 + d2), 1e-15));

  EXPECT_THROW(net.apply_step(Eigen::VectorXd::Zero(p + 1), 0.1), ContractViolation);
}

TEST(QNet, FlattenUnflattenRoundTrip) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<int> sizes{1 + static_cast<int>(uniform_index(rng, 5)), 1 + static_cast<int>(uniform_index(rng, 9)),
                                 1 + static_cast<int>(uniform_index(rng, 4))};
    QNetwork net = QNetwork::init(sizes, trial);
    Eigen::VectorXd v(static_cast<Eigen::Index>(net.num_parameters()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = uniform(rng, -5, 5);
    QNetwork other(sizes);
    other.unflatten(v);
    EXPECT_EQ(other.flatten(), v);
    other.unflatten(net.flatten());
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(sizes[0], 3);
    EXPECT_EQ(other.forward(x), net.forward(x));
  }
  QNetwork net({2, 3});
  EXPECT_THROW(net.unflatten(Eigen::VectorXd::Zero(4)), ContractViolation);
}

TEST(QNet, CanonicalLayout) {
  // Weights column-major (out x in), then biases, layer by layer.
  QNetwork net({2, 3, 1});
  Eigen::VectorXd v(net.num_parameters());
  std::iota(v.data(), v.data() + v.size(), 0.0);
  net.unflatten(v);
  EXPECT_EQ(net.weights(0)(0, 0), 0.0);
  EXPECT_EQ(net.weights(0)(1, 0), 1.0);
  EXPECT_EQ(net.weights(0)(0, 1), 3.0);
  EXPECT_EQ(net.biases(0)(0), 6.0);
  EXPECT_EQ(net.weights(1)(0, 0), 9.0);
  EXPECT_EQ(net.biases(1)(0), 12.0);
}

TEST(QNet, CopyInto) {
  const auto src = QNetwork::init({4, 8, 2}, 1);
  auto dst = QNetwork::init({4, 8, 2}, 2);
  copy_into(src, dst);
  EXPECT_EQ(dst.flatten(), src.flatten());
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 10);
  EXPECT_EQ(dst.forward(x), src.forward(x));
  copy_into(src, dst);
  EXPECT_EQ(dst.flatten(), src.flatten());

  auto mutated = src;
  copy_into(mutated, dst);
  mutated.apply_step(Eigen::VectorXd::Ones(mutated.num_parameters()), 1.0);
  EXPECT_EQ(dst.flatten(), src.flatten());

  auto wrong = QNetwork::init({4, 9, 2}, 1);
  EXPECT_THROW(copy_into(src, wrong), ContractViolation);
}

TEST(QNet, CheckpointRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "m2dqn_test_ckpt";
  std::filesystem::create_directories(dir);
  const auto path = dir / "net.ckpt";
  const auto net = QNetwork::init({6, 12, 7, 3}, 77);
  save_checkpoint(net, path);
  const auto loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.layer_sizes(), net.layer_sizes());
  EXPECT_EQ(loaded.flatten(), net.flatten());

  // Header: 8 magic + 4 version + 4 endian tag + 4 count + 4*8 sizes + 8 P.
  const std::size_t header = 8 + 4 + 4 + 4 + 4 * 8 + 8;
  EXPECT_EQ(std::filesystem::file_size(path), header + 8 * net.num_parameters());

  {
    std::ofstream truncate(path, std::ios::binary | std::ios::in);
    truncate.seekp(0);
    truncate.write("XXXX", 4);
  }
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
  std::filesystem::resize_file(path, 20);
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
  std::filesystem::remove_all(dir);
}

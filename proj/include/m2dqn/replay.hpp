#pragma once

#include <cstddef>
#include <vector>

#include "m2dqn/random.hpp"

namespace m2dqn {

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  /// True only for task-defined termination; a time-limit cut-off is not
  /// terminal, so its target still bootstraps from next_state.
  bool terminal = false;
};

using Batch = std::vector<Transition>;

/// Fixed-capacity ring of transitions with uniform sampling with replacement.
/// Single-threaded: one writer, no concurrent readers.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  /// Once full, overwrites the oldest transition.
  void push(Transition t);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }

  /// i-th stored transition, oldest first.
  const Transition& at(std::size_t i) const;

  /// K independent uniform draws with replacement. Throws UsageError when
  /// the buffer is empty and ContractViolation for K == 0.
  Batch sample_batch(std::size_t k, Rng& rng) const;

  /// N successive sample_batch calls on the same generator; groups may share
  /// transitions.
  std::vector<Batch> sample_groups(std::size_t n, std::size_t k, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;  // next slot to overwrite once full
  std::vector<Transition> items_;
};

}  // namespace m2dqn

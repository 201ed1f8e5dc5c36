#include "m2dqn/replay.hpp"

#include <utility>

#include "m2dqn/errors.hpp"

namespace m2dqn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractViolation("ReplayBuffer capacity must be positive");
  items_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[cursor_] = std::move(t);
  cursor_ = (cursor_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw ContractViolation("ReplayBuffer::at: index out of range");
  return items_[(cursor_ + i) % items_.size()];
}

Batch ReplayBuffer::sample_batch(std::size_t k, Rng& rng) const {
  if (items_.empty()) throw UsageError("cannot sample from an empty replay buffer");
  if (k == 0) throw ContractViolation("batch size must be positive");
  Batch batch;
  batch.reserve(k);
  for (std::size_t i = 0; i < k; ++i) batch.push_back(items_[uniform_index(rng, items_.size())]);
  return batch;
}

std::vector<Batch> ReplayBuffer::sample_groups(std::size_t n, std::size_t k, Rng& rng) const {
  if (n == 0) throw ContractViolation("group count must be positive");
  std::vector<Batch> groups;
  groups.reserve(n);
  for (std::size_t j = 0; j < n; ++j) groups.push_back(sample_batch(k, rng));
  return groups;
}

}  // namespace m2dqn

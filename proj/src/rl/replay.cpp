#include "sgdqn/rl/replay.hpp"

#include <numeric>
#include <string>

#include "sgdqn/errors.hpp"

namespace sgdqn::rl {

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("train.replay_capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayMemory::push(Transition t) {
  if (t.action >= sim::kNumActions) {
    throw InvalidArgument("transition action index " + std::to_string(t.action) + " out of range");
  }
  ++insertions_;
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayMemory::at(std::size_t i) const {
  if (i >= items_.size()) throw InvalidArgument("replay index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<const Transition*> ReplayMemory::sample(std::size_t count, std::mt19937_64& rng) const {
  const std::size_t n = items_.size();
  count = std::min(count, n);
  // Partial Fisher-Yates over an index table.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<const Transition*> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(&items_[idx[i]]);
  }
  return out;
}

}  // namespace sgdqn::rl

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sgdqn/sim/state.hpp"

namespace sgdqn::rl {

// States are stored robot-centric, ready for the network.
struct Transition {
  sim::JointState state;
  std::size_t action = 0;
  double reward = 0.0;
  sim::JointState next_state;
  bool terminal = false;  // goal or collision; the target is then r alone
};

// Fixed-capacity FIFO ring buffer.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t insertions() const { return insertions_; }

  // i-th oldest transition currently held.
  const Transition& at(std::size_t i) const;

  // `count` distinct transitions drawn uniformly (all of them if fewer).
  std::vector<const Transition*> sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // slot of the oldest item once full
  std::uint64_t insertions_ = 0;
};

}  // namespace sgdqn::rl

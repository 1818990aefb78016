#pragma once

#include <functional>
#include <span>

#include "sgdqn/sim/simulator.hpp"

namespace sgdqn::rl {

struct EpisodeStats {
  sim::EpisodeStatus status = sim::EpisodeStatus::running;
  double time = 0.0;
  std::size_t steps = 0;
  double total_reward = 0.0;
  double discounted_return = 0.0;  // sum_t discount^t r_t from t = 0
  std::size_t discomfort_steps = 0;
};

// Chooses an action index from the world-frame observation.
using Decide = std::function<std::size_t(const sim::JointState& observation)>;
// Sees the world before the step, the chosen action and the outcome.
using StepObserver =
    std::function<void(const sim::World& before, const sim::Action& action, const sim::StepOutcome& outcome)>;

// Runs `world` to termination under `decide`.
EpisodeStats play_episode(sim::World& world, std::span<const sim::Action> actions, const Decide& decide,
                          const sim::SimConfig& config, double discount,
                          const StepObserver& observe = {});

}  // namespace sgdqn::rl

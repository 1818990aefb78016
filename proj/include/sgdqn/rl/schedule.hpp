#pragma once

#include <cstddef>

namespace sgdqn::rl {

struct EpsilonSchedule {
  double start = 0.5;
  double end = 0.1;
  std::size_t decay_episodes = 5000;
};

// Linear from `start` at episode 0 to `end` at `decay_episodes`, then flat.
double epsilon_at(std::size_t episode, const EpsilonSchedule& schedule = {});

// gamma^(dt * v_pref): per-step discount normalised by the preferred speed.
double discount_factor_per_step(double gamma, double time_step, double preferred_speed);

}  // namespace sgdqn::rl

#include "sgdqn/rl/episode.hpp"

#include <optional>
#include <string>

#include "sgdqn/errors.hpp"

namespace sgdqn::rl {

EpisodeStats play_episode(sim::World& world, std::span<const sim::Action> actions, const Decide& decide,
                          const sim::SimConfig& config, double discount, const StepObserver& observe) {
  EpisodeStats stats;
  double weight = 1.0;
  while (world.status == sim::EpisodeStatus::running) {
    const std::size_t a = decide(world.joint_state());
    if (a >= actions.size()) throw InvalidArgument("policy returned action index " + std::to_string(a));
    std::optional<sim::World> before;
    if (observe) before = world;  // copied only when someone is watching
    const sim::StepOutcome out = sim::step_episode(world, actions[a], config);
    if (observe) observe(*before, actions[a], out);
    stats.total_reward += out.reward.total();
    stats.discounted_return += weight * out.reward.total();
    stats.discomfort_steps += out.discomfort ? 1 : 0;
    weight *= discount;
  }
  stats.status = world.status;
  stats.time = world.time;
  stats.steps = world.steps;
  return stats;
}

}  // namespace sgdqn::rl

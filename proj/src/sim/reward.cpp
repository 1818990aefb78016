#include "sgdqn/sim/reward.hpp"

#include <algorithm>
#include <string>

#include "sgdqn/errors.hpp"

namespace sgdqn::sim {

double min_separation(Vec2 pa, Vec2 va, Vec2 pb, Vec2 vb, double dt) {
  const Vec2 p = pa - pb;
  const Vec2 v = va - vb;
  const double vv = norm_sq(v);
  double t = 0.0;
  if (vv > 0.0) t = std::clamp(-dot(p, v) / vv, 0.0, dt);
  return norm(p + t * v);
}

std::vector<double> robot_min_separations(const JointState& state, Vec2 robot_velocity,
                                          std::span<const Vec2> pedestrian_velocities,
                                          double dt) {
  if (pedestrian_velocities.size() != state.pedestrians.size()) {
    throw InvalidArgument("robot_min_separations: " + std::to_string(state.pedestrians.size()) +
                          " pedestrians but " + std::to_string(pedestrian_velocities.size()) +
                          " velocities");
  }
  std::vector<double> out;
  out.reserve(state.pedestrians.size());
  for (std::size_t i = 0; i < state.pedestrians.size(); ++i) {
    out.push_back(min_separation(state.robot.position, robot_velocity,
                                 state.pedestrians[i].position, pedestrian_velocities[i], dt));
  }
  return out;
}

RewardResult compute_reward(const JointState& prev, const JointState& next,
                            std::span<const double> min_separations, double dt,
                            const SimConfig& config) {
  if (prev.pedestrians.size() != next.pedestrians.size() ||
      min_separations.size() != next.pedestrians.size()) {
    throw InvalidArgument("compute_reward: inconsistent pedestrian counts (prev " +
                          std::to_string(prev.pedestrians.size()) + ", next " +
                          std::to_string(next.pedestrians.size()) + ", separations " +
                          std::to_string(min_separations.size()) + ")");
  }

  RewardResult out;
  bool collided = false;
  for (std::size_t i = 0; i < min_separations.size(); ++i) {
    const double contact = next.robot.radius + next.pedestrians[i].radius;
    const double surface = min_separations[i] - contact;
    if (min_separations[i] < contact) collided = true;
    if (surface < config.discomfort_distance) {
      out.discomfort = true;
      out.reward.discomfort += dt * (surface - config.discomfort_distance) / 2.0;
    }
  }
  if (collided) out.reward.collision = config.collision_penalty;

  const double prev_dist = norm(prev.robot.position - prev.robot.goal);
  const double next_dist = norm(next.robot.position - next.robot.goal);
  const bool at_goal = next_dist < config.goal_tolerance;
  if (at_goal && !collided) {
    out.reward.goal = config.goal_reward;
  } else {
    out.reward.goal = config.progress_factor * (prev_dist - next_dist);
  }

  if (collided) {
    out.status = EpisodeStatus::collision;
  } else if (at_goal) {
    out.status = EpisodeStatus::reached_goal;
  }
  return out;
}

}  // namespace sgdqn::sim

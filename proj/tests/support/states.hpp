#pragma once

#include <random>

#include "sgdqn/sim/state.hpp"

namespace sgdqn::test {

// Random world-frame state with n pedestrians scattered around the robot.
inline sim::JointState random_world_state(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> pos(-4.0, 4.0);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  sim::JointState s;
  s.robot.position = {pos(rng), pos(rng)};
  s.robot.goal = {pos(rng), pos(rng)};
  s.robot.velocity = {vel(rng), vel(rng)};
  s.robot.heading = wrap_angle(std::atan2(s.robot.velocity.y, s.robot.velocity.x));
  for (std::size_t i = 0; i < n; ++i) {
    s.pedestrians.push_back({{pos(rng), pos(rng)}, {vel(rng), vel(rng)}, 0.3});
  }
  return s;
}

inline sim::JointState random_centric_state(std::mt19937_64& rng, std::size_t n) {
  return sim::to_robot_centric(random_world_state(rng, n));
}

}  // namespace sgdqn::test

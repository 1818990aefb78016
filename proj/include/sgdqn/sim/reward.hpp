#pragma once

#include <span>
#include <vector>

#include "sgdqn/geometry.hpp"
#include "sgdqn/sim/state.hpp"

namespace sgdqn::sim {

// Exact minimum centre distance between two agents moving at constant
// velocity over t in [0, dt].
double min_separation(Vec2 pa, Vec2 va, Vec2 pb, Vec2 vb, double dt);

// Centre-to-centre minimum separations between the robot and each pedestrian
// over one step, given their velocities during that step.
std::vector<double> robot_min_separations(const JointState& state, Vec2 robot_velocity,
                                          std::span<const Vec2> pedestrian_velocities,
                                          double dt);

struct Reward {
  double goal = 0.0;        // progress shaping or the goal bonus
  double collision = 0.0;
  double discomfort = 0.0;  // summed over pedestrians inside the comfort zone

  double total() const { return goal + collision + discomfort; }
};

struct RewardResult {
  Reward reward;
  EpisodeStatus status = EpisodeStatus::running;
  bool discomfort = false;  // some surface distance below the comfort threshold
};

// Three-part reward for the transition prev -> next. Both states must share a
// frame; `min_separations` are centre distances from robot_min_separations.
// A collision withholds the goal bonus and takes precedence in the status.
// Never reports timeout; the simulator owns the clock.
RewardResult compute_reward(const JointState& prev, const JointState& next,
                            std::span<const double> min_separations, double dt,
                            const SimConfig& config);

}  // namespace sgdqn::sim

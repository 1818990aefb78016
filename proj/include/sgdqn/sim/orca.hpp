#pragma once

#include <span>
#include <vector>

#include "sgdqn/geometry.hpp"
#include "sgdqn/sim/state.hpp"

namespace sgdqn::sim {

// Directed line bounding a velocity half-plane; admissible velocities lie on
// the left of `direction`.
struct HalfPlane {
  Vec2 point;
  Vec2 direction;
};

struct OrcaParams {
  double time_step = 0.25;
  double time_horizon = 5.0;
  double max_speed = 1.0;
};

// Preferred velocity toward the goal at `preferred_speed`, shortened so that
// an agent closer than one step lands exactly on its goal.
Vec2 preferred_velocity(const FullState& agent, double time_step);

// ORCA half-planes induced on `self` by each neighbour.
std::vector<HalfPlane> orca_constraints(const FullState& self,
                                        std::span<const ObservableState> neighbors,
                                        const OrcaParams& params);

// Velocity within `max_speed` satisfying every half-plane and closest to
// `preferred`. When the program is infeasible the velocity minimising the
// maximum constraint violation is returned instead.
Vec2 solve_orca_program(std::span<const HalfPlane> constraints, double max_speed,
                        Vec2 preferred);

// Full ORCA velocity selection for one agent. The neighbour list must not
// contain the agent itself.
Vec2 orca_velocity(const FullState& self, std::span<const ObservableState> neighbors,
                   const OrcaParams& params);

}  // namespace sgdqn::sim

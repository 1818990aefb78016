#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "sgdqn/sim/reward.hpp"
#include "sgdqn/sim/state.hpp"

namespace sgdqn::sim {

enum class ScenarioKind { simple, complex };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view text);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::simple;
  std::size_t n_circle = 5;
  std::size_t n_square = 0;
  double circle_radius = 4.0;
  double square_side = 10.0;
  std::uint64_t seed = 0;

  // 5 circle-crossing pedestrians, plus 5 square-crossing ones for complex.
  static ScenarioSpec make(ScenarioKind kind, std::uint64_t seed, const SimConfig& config);
};

// Complete simulator state in the world frame, including hidden intents.
struct World {
  FullState robot;
  std::vector<FullState> pedestrians;
  // Goals a pedestrian has already reached, oldest first.
  std::vector<std::vector<Vec2>> turning_points;
  double time = 0.0;
  std::size_t steps = 0;
  EpisodeStatus status = EpisodeStatus::running;
  std::mt19937_64 rng;

  // What the robot may observe, still in the world frame.
  JointState joint_state() const;
};

// Deterministic function of (spec, config): robot from (0, -r) to (0, r),
// circle-crossing pedestrians on the perturbed circle heading to the antipode,
// square-crossing pedestrians sampled inside the square.
World generate_scenario(const ScenarioSpec& spec, const SimConfig& config);

struct StepOutcome {
  JointState next_state;  // world frame
  Reward reward;
  EpisodeStatus status = EpisodeStatus::running;
  std::vector<double> min_separations;  // centre distances, robot vs each pedestrian
  bool discomfort = false;
};

// ORCA velocities for every pedestrian. The robot is invisible to them.
std::vector<Vec2> pedestrian_velocities(const World& world, const SimConfig& config);

// Moves pedestrians for one step and resamples goals of those that arrived.
// Does not touch the robot, clock or status.
void advance_pedestrians(World& world, std::span<const Vec2> velocities,
                         const SimConfig& config);

// Advances the episode by one step with the robot executing `action`.
// Throws InvalidState when the episode has already terminated.
StepOutcome step_episode(World& world, const Action& action, const SimConfig& config);

// World velocity of a robot-centric action for the given robot state.
Vec2 action_world_velocity(const FullState& robot, const Action& action);

}  // namespace sgdqn::sim

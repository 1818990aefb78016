#include "sgdqn/sim/simulator.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sgdqn/errors.hpp"
#include "sgdqn/sim/orca.hpp"

namespace sgdqn::sim {
namespace {

constexpr int kMaxPlacementAttempts = 100000;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec2 sample_in_square(std::mt19937_64& rng, double side) {
  return {uniform(rng, -0.5 * side, 0.5 * side), uniform(rng, -0.5 * side, 0.5 * side)};
}

bool clear_of(Vec2 p, double radius, const std::vector<FullState>& agents, bool goals,
              double margin) {
  for (const auto& a : agents) {
    const double min_dist = radius + a.radius + margin;
    if (norm(p - (goals ? a.goal : a.position)) < min_dist) return false;
  }
  return true;
}

FullState make_pedestrian(Vec2 position, Vec2 goal, const SimConfig& config) {
  FullState ped;
  ped.position = position;
  ped.goal = goal;
  ped.radius = config.pedestrian_radius;
  ped.preferred_speed = config.pedestrian_preferred_speed;
  ped.heading = wrap_angle(std::atan2(goal.y - position.y, goal.x - position.x));
  return ped;
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  return kind == ScenarioKind::simple ? "simple" : "complex";
}

ScenarioKind parse_scenario_kind(std::string_view text) {
  if (text == "simple") return ScenarioKind::simple;
  if (text == "complex") return ScenarioKind::complex;
  throw InvalidArgument("unknown scenario '" + std::string(text) +
                        "' (expected simple or complex)");
}

ScenarioSpec ScenarioSpec::make(ScenarioKind kind, std::uint64_t seed, const SimConfig& config) {
  ScenarioSpec spec;
  spec.kind = kind;
  spec.n_circle = 5;
  spec.n_square = kind == ScenarioKind::complex ? 5 : 0;
  spec.circle_radius = config.circle_radius;
  spec.square_side = config.square_side;
  spec.seed = seed;
  return spec;
}

JointState World::joint_state() const {
  JointState s;
  s.frame = Frame::world;
  s.robot = robot;
  s.pedestrians.reserve(pedestrians.size());
  for (const auto& p : pedestrians) s.pedestrians.push_back({p.position, p.velocity, p.radius});
  return s;
}

World generate_scenario(const ScenarioSpec& spec, const SimConfig& config) {
  World world;
  world.rng.seed(spec.seed);

  world.robot.position = {0.0, -spec.circle_radius};
  world.robot.goal = {0.0, spec.circle_radius};
  world.robot.radius = config.robot_radius;
  world.robot.preferred_speed = config.robot_preferred_speed;
  world.robot.heading = std::numbers::pi / 2.0;

  // Placement checks include the robot even though pedestrians ignore it.
  std::vector<FullState> placed{world.robot};
  const double margin = config.discomfort_distance;
  const double radius = config.pedestrian_radius;

  for (std::size_t i = 0; i < spec.n_circle; ++i) {
    int attempts = 0;
    while (true) {
      if (++attempts > kMaxPlacementAttempts) {
        throw InvalidArgument("generate_scenario: cannot place circle-crossing pedestrian " +
                              std::to_string(i));
      }
      const double angle = uniform(world.rng, 0.0, 2.0 * std::numbers::pi);
      const double nx = uniform(world.rng, -config.circle_noise, config.circle_noise);
      const double ny = uniform(world.rng, -config.circle_noise, config.circle_noise);
      const Vec2 p = from_polar(spec.circle_radius, angle) + Vec2{nx, ny};
      if (clear_of(p, radius, placed, false, margin) && clear_of(p, radius, placed, true, margin)) {
        placed.push_back(make_pedestrian(p, -p, config));
        break;
      }
    }
  }
  for (std::size_t i = 0; i < spec.n_square; ++i) {
    int attempts = 0;
    Vec2 start;
    do {
      if (++attempts > kMaxPlacementAttempts) {
        throw InvalidArgument("generate_scenario: cannot place square-crossing pedestrian " +
                              std::to_string(i));
      }
      start = sample_in_square(world.rng, spec.square_side);
    } while (!clear_of(start, radius, placed, false, margin));
    Vec2 goal;
    do {
      if (++attempts > kMaxPlacementAttempts) {
        throw InvalidArgument("generate_scenario: cannot place goal of square-crossing pedestrian " +
                              std::to_string(i));
      }
      goal = sample_in_square(world.rng, spec.square_side);
    } while (!clear_of(goal, radius, placed, true, margin));
    placed.push_back(make_pedestrian(start, goal, config));
  }

  world.pedestrians.assign(placed.begin() + 1, placed.end());
  world.turning_points.resize(world.pedestrians.size());
  return world;
}

std::vector<Vec2> pedestrian_velocities(const World& world, const SimConfig& config) {
  const OrcaParams params{config.time_step, config.orca_time_horizon,
                          config.pedestrian_preferred_speed};
  std::vector<ObservableState> others;
  others.reserve(world.pedestrians.size());
  std::vector<Vec2> out;
  out.reserve(world.pedestrians.size());
  for (std::size_t i = 0; i < world.pedestrians.size(); ++i) {
    others.clear();
    for (std::size_t j = 0; j < world.pedestrians.size(); ++j) {
      if (j == i) continue;
      const auto& p = world.pedestrians[j];
      others.push_back({p.position, p.velocity, p.radius + config.orca_radius_margin});
    }
    FullState self = world.pedestrians[i];
    self.radius += config.orca_radius_margin;
    self.preferred_speed = config.pedestrian_preferred_speed;
    out.push_back(orca_velocity(self, others, params));
  }
  return out;
}

void advance_pedestrians(World& world, std::span<const Vec2> velocities, const SimConfig& config) {
  if (velocities.size() != world.pedestrians.size()) {
    throw InvalidArgument("advance_pedestrians: velocity count mismatch");
  }
  const double dt = config.time_step;
  for (std::size_t i = 0; i < world.pedestrians.size(); ++i) {
    auto& p = world.pedestrians[i];
    p.position += dt * velocities[i];
    p.velocity = velocities[i];
    if (norm_sq(velocities[i]) > 0.0) {
      p.heading = wrap_angle(std::atan2(velocities[i].y, velocities[i].x));
    }
    if (norm(p.position - p.goal) < p.radius) {
      world.turning_points[i].push_back(p.goal);
      p.goal = sample_in_square(world.rng, config.square_side);
    }
  }
}

Vec2 action_world_velocity(const FullState& robot, const Action& action) {
  return rotate(action.velocity(), robot_centric_angle(robot));
}

StepOutcome step_episode(World& world, const Action& action, const SimConfig& config) {
  if (world.status != EpisodeStatus::running) {
    throw InvalidState("step_episode: episode already finished with status " +
                       std::string(to_string(world.status)));
  }
  const double dt = config.time_step;
  const JointState prev = world.joint_state();
  const std::vector<Vec2> ped_velocities = pedestrian_velocities(world, config);
  const Vec2 robot_velocity = action_world_velocity(world.robot, action);

  StepOutcome out;
  out.min_separations = robot_min_separations(prev, robot_velocity, ped_velocities, dt);

  world.robot.position += dt * robot_velocity;
  world.robot.velocity = robot_velocity;
  if (action.speed > 0.0) {
    world.robot.heading = wrap_angle(std::atan2(robot_velocity.y, robot_velocity.x));
  }
  advance_pedestrians(world, ped_velocities, config);
  out.next_state = world.joint_state();

  const RewardResult result = compute_reward(prev, out.next_state, out.min_separations, dt, config);
  out.reward = result.reward;
  out.discomfort = result.discomfort;

  world.time += dt;
  world.steps += 1;
  world.status = result.status;
  if (world.status == EpisodeStatus::running && world.time >= config.time_limit - 1e-9) {
    world.status = EpisodeStatus::timeout;
  }
  out.status = world.status;
  return out;
}

}  // namespace sgdqn::sim

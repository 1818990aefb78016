#include "sgdqn/sim/state.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sgdqn/errors.hpp"

namespace sgdqn::sim {

std::array<double, FullState::kFeatureDim> FullState::features() const {
  return {position.x, position.y, velocity.x, velocity.y, radius,
          goal.x,     goal.y,     preferred_speed, heading};
}

std::array<double, ObservableState::kFeatureDim> ObservableState::features() const {
  return {position.x, position.y, velocity.x, velocity.y, radius};
}

std::string_view to_string(EpisodeStatus status) {
  switch (status) {
    case EpisodeStatus::running:
      return "running";
    case EpisodeStatus::reached_goal:
      return "reached_goal";
    case EpisodeStatus::collision:
      return "collision";
    case EpisodeStatus::timeout:
      return "timeout";
  }
  return "unknown";
}

std::vector<Action> build_action_space(double preferred_speed) {
  if (!(preferred_speed > 0.0)) {
    throw InvalidArgument("build_action_space: preferred speed must be positive, got " +
                          std::to_string(preferred_speed));
  }
  std::vector<Action> actions;
  actions.reserve(kNumActions);
  actions.push_back(Action{0.0, 0.0, 0});
  for (std::size_t s = 0; s < kNumSpeeds; ++s) {
    const double speed =
        static_cast<double>(s + 1) / static_cast<double>(kNumSpeeds) * preferred_speed;
    for (std::size_t h = 0; h < kNumHeadings; ++h) {
      const double heading =
          static_cast<double>(h) * 2.0 * std::numbers::pi / static_cast<double>(kNumHeadings);
      actions.push_back(Action{speed, heading, actions.size()});
    }
  }
  return actions;
}

void SimConfig::validate() const {
  auto require_positive = [](double value, const char* name) {
    if (!(value > 0.0)) {
      throw InvalidArgument(std::string("sim.") + name + " must be positive, got " +
                            std::to_string(value));
    }
  };
  require_positive(time_step, "time_step");
  require_positive(time_limit, "time_limit");
  require_positive(robot_radius, "robot_radius");
  require_positive(robot_preferred_speed, "robot_v_pref");
  require_positive(pedestrian_radius, "human_radius");
  require_positive(pedestrian_preferred_speed, "human_v_pref");
  require_positive(orca_time_horizon, "orca_time_horizon");
  require_positive(circle_radius, "circle_radius");
  require_positive(square_side, "square_side");
  require_positive(goal_tolerance, "goal_tolerance");
  if (circle_noise < 0.0) throw InvalidArgument("sim.circle_noise must be non-negative");
  if (orca_radius_margin < 0.0) throw InvalidArgument("sim.orca_radius_margin must be non-negative");
  if (discomfort_distance < 0.0) {
    throw InvalidArgument("reward.discomfort_dist must be non-negative");
  }
}

double robot_centric_angle(const FullState& robot) {
  const Vec2 to_goal = robot.goal - robot.position;
  if (to_goal.x == 0.0 && to_goal.y == 0.0) return 0.0;
  return std::atan2(to_goal.y, to_goal.x);
}

JointState to_robot_centric(const JointState& state) {
  const double angle = robot_centric_angle(state.robot);
  const Vec2 origin = state.robot.position;
  auto to_frame = [&](Vec2 p) { return rotate(p - origin, -angle); };

  JointState out;
  out.frame = Frame::robot_centric;
  out.robot = state.robot;
  out.robot.position = {0.0, 0.0};
  out.robot.goal = to_frame(state.robot.goal);
  // The goal is on +x by construction; remove rounding noise in y.
  if (!(state.robot.goal == state.robot.position)) {
    out.robot.goal = {norm(state.robot.goal - origin), 0.0};
  }
  out.robot.velocity = rotate(state.robot.velocity, -angle);
  out.robot.heading = wrap_angle(state.robot.heading - angle);
  out.pedestrians.reserve(state.pedestrians.size());
  for (const auto& p : state.pedestrians) {
    out.pedestrians.push_back({to_frame(p.position), rotate(p.velocity, -angle), p.radius});
  }
  return out;
}

}  // namespace sgdqn::sim

#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "sgdqn/geometry.hpp"

namespace sgdqn::sim {

// Kinematic record of an agent including its hidden intent.
struct FullState {
  Vec2 position;
  Vec2 velocity;
  double radius = 0.3;
  Vec2 goal;
  double preferred_speed = 1.0;
  double heading = 0.0;  // [0, 2*pi)

  static constexpr std::size_t kFeatureDim = 9;
  // [px, py, vx, vy, radius, gx, gy, v_pref, heading]
  std::array<double, kFeatureDim> features() const;
};

// What the robot can observe about a pedestrian.
struct ObservableState {
  Vec2 position;
  Vec2 velocity;
  double radius = 0.3;

  static constexpr std::size_t kFeatureDim = 5;
  // [px, py, vx, vy, radius]
  std::array<double, kFeatureDim> features() const;
};

enum class Frame { world, robot_centric };

struct JointState {
  FullState robot;
  std::vector<ObservableState> pedestrians;
  Frame frame = Frame::world;
};

enum class EpisodeStatus { running, reached_goal, collision, timeout };

std::string_view to_string(EpisodeStatus status);

// Holonomic velocity command. `heading` is measured in the robot-centric
// frame, so heading 0 points straight at the goal.
struct Action {
  double speed = 0.0;
  double heading = 0.0;
  std::size_t index = 0;

  Vec2 velocity() const { return from_polar(speed, heading); }
};

inline constexpr std::size_t kNumSpeeds = 5;
inline constexpr std::size_t kNumHeadings = 16;
inline constexpr std::size_t kNumActions = 1 + kNumSpeeds * kNumHeadings;

// Index 0 is the stop action; index 1 + s * 16 + h carries speed
// (s + 1) / 5 * v_pref and heading h * 2*pi / 16.
std::vector<Action> build_action_space(double preferred_speed);

// Simulator constants. Defaults follow the CrowdNav conventions.
struct SimConfig {
  double time_step = 0.25;
  double time_limit = 25.0;
  double robot_radius = 0.3;
  double robot_preferred_speed = 1.0;
  double pedestrian_radius = 0.3;
  double pedestrian_preferred_speed = 1.0;
  double orca_time_horizon = 5.0;
  // Radius padding seen only by ORCA; without it agents graze at contact.
  double orca_radius_margin = 0.01;
  double circle_radius = 4.0;
  double square_side = 10.0;
  double circle_noise = 0.5;
  // Reward shaping constants.
  double goal_reward = 10.0;
  double collision_penalty = -2.5;
  double discomfort_distance = 0.2;
  double goal_tolerance = 0.2;
  double progress_factor = 0.1;

  void validate() const;
};

// Rigid transform placing the robot at the origin with its goal on +x.
// A robot sitting exactly on its goal keeps the world orientation.
JointState to_robot_centric(const JointState& state);

// Rotation angle used by to_robot_centric: direction from robot to goal.
double robot_centric_angle(const FullState& robot);

}  // namespace sgdqn::sim

#include "sgdqn/eval/policy.hpp"

#include <limits>

#include "sgdqn/errors.hpp"
#include "sgdqn/sim/orca.hpp"

namespace sgdqn::eval {

std::size_t nearest_action(std::span<const sim::Action> actions, Vec2 velocity) {
  if (actions.empty()) throw InvalidArgument("nearest_action: empty action set");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double d = norm_sq(actions[i].velocity() - velocity);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

OrcaRobotPolicy::OrcaRobotPolicy(sim::SimConfig config, double inflation)
    : config_(config), inflation_(inflation), actions_(sim::build_action_space(config.robot_preferred_speed)) {
  if (!(inflation >= 0.0)) throw InvalidArgument("OrcaRobotPolicy: inflation must be non-negative");
}

Vec2 OrcaRobotPolicy::raw_velocity(const sim::JointState& observation) const {
  std::vector<sim::ObservableState> others;
  others.reserve(observation.pedestrians.size());
  for (auto p : observation.pedestrians) {
    p.radius += inflation_;
    others.push_back(p);
  }
  const sim::OrcaParams params{config_.time_step, config_.orca_time_horizon, observation.robot.preferred_speed};
  return sim::orca_velocity(observation.robot, others, params);
}

std::size_t OrcaRobotPolicy::decide(const sim::JointState& observation) {
  const Vec2 world_v = raw_velocity(observation);
  // Actions are expressed in the robot-centric frame.
  const Vec2 local_v = rotate(world_v, -sim::robot_centric_angle(observation.robot));
  return nearest_action(actions_, local_v);
}

NetworkPolicy::NetworkPolicy(std::string name, ad::ParameterSet params,
                             std::shared_ptr<const plan::CrowdModel> model, sim::SimConfig config,
                             double discount, plan::RolloutConfig rollout)
    : name_(std::move(name)),
      params_(std::move(params)),
      model_(model ? std::move(model) : std::make_shared<plan::ConstantVelocityModel>()),
      env_(*model_, config),
      discount_(discount),
      rollout_(rollout) {
  rollout_.validate();
}

std::size_t NetworkPolicy::decide(const sim::JointState& observation) {
  const sim::JointState centric = sim::to_robot_centric(observation);
  return plan::plan_action(centric, params_, env_, discount_, rollout_).action;
}

}  // namespace sgdqn::eval

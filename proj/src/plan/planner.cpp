#include "sgdqn/plan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sgdqn/errors.hpp"
#include "sgdqn/net/network.hpp"
#include "sgdqn/sim/reward.hpp"

namespace sgdqn::plan {
namespace {

struct Expander {
  const ad::ParameterSet& params;
  const EnvironmentModel& model;
  double discount;
  std::size_t width;
  ExpansionCounters& counters;

  std::vector<double> coarse(const sim::JointState& s) {
    ++counters.network_calls;
    return net::q_values(params, s);
  }

  // Q^d(s, a) given the coarse Q(s, a).
  double value(const sim::JointState& s, std::size_t a, double coarse_q, std::size_t depth) {
    if (depth == 0) return coarse_q;
    ++counters.model_calls;
    const Prediction p = model.predict(s, model.actions()[a]);
    const double d = static_cast<double>(depth);
    double lookahead = p.reward;
    if (!p.terminal) {
      const sim::JointState next = sim::to_robot_centric(p.next);
      const std::vector<double> q = coarse(next);
      double best = -INFINITY;
      if (depth == 1) {
        counters.leaf_values += q.size();
        best = *std::max_element(q.begin(), q.end());
      } else {
        for (std::size_t b : top_k_actions(q, width)) best = std::max(best, value(next, b, q[b], depth - 1));
      }
      lookahead += discount * best;
    }
    return d / (d + 1.0) * coarse_q + 1.0 / (d + 1.0) * lookahead;
  }
};

}  // namespace

void RolloutConfig::validate() const {
  if (width < 1 || width > sim::kNumActions) {
    throw InvalidArgument("planner.width must lie in [1, 81], got " + std::to_string(width));
  }
}

EnvironmentModel::EnvironmentModel(const CrowdModel& crowd, sim::SimConfig config)
    : crowd_(crowd), config_(config), actions_(sim::build_action_space(config.robot_preferred_speed)) {}

Prediction EnvironmentModel::predict(const sim::JointState& state, const sim::Action& action) const {
  if (state.frame != sim::Frame::robot_centric) {
    throw InvalidArgument("EnvironmentModel::predict expects a robot-centric state");
  }
  const double dt = config_.time_step;
  const std::vector<Vec2> ped_v = crowd_.predict_velocities(state, dt);
  const Vec2 robot_v = sim::action_world_velocity(state.robot, action);

  Prediction out;
  out.next = state;
  out.next.robot.position += dt * robot_v;
  out.next.robot.velocity = robot_v;
  if (action.speed > 0.0) out.next.robot.heading = wrap_angle(std::atan2(robot_v.y, robot_v.x));
  for (std::size_t i = 0; i < ped_v.size(); ++i) {
    out.next.pedestrians[i].position += dt * ped_v[i];
    out.next.pedestrians[i].velocity = ped_v[i];
  }
  const auto seps = sim::robot_min_separations(state, robot_v, ped_v, dt);
  const auto r = sim::compute_reward(state, out.next, seps, dt, config_);
  out.reward = r.reward.total();
  out.terminal = r.status == sim::EpisodeStatus::reached_goal || r.status == sim::EpisodeStatus::collision;
  return out;
}

std::vector<std::size_t> top_k_actions(const std::vector<double>& values, std::size_t k) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return values[a] > values[b] || (values[a] == values[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

RefinedValues refine_q(const sim::JointState& state, const ad::ParameterSet& params,
                       const EnvironmentModel& model, double discount, const RolloutConfig& config) {
  config.validate();
  RefinedValues out;
  Expander ex{params, model, discount, config.width, out.counters};
  out.coarse = ex.coarse(state);
  out.candidates = top_k_actions(out.coarse, config.width);
  for (std::size_t a : out.candidates) out.refined.push_back(ex.value(state, a, out.coarse[a], config.depth));
  const double bound = std::pow(static_cast<double>(config.width), static_cast<double>(config.depth)) *
                       static_cast<double>(sim::kNumActions);
  if (config.depth > 0 && static_cast<double>(out.counters.leaf_values) > bound) {
    throw InvalidState("refine_q visited more leaves than k^d * 81");
  }
  return out;
}

PlanResult plan_action(const sim::JointState& state, const ad::ParameterSet& params,
                       const EnvironmentModel& model, double discount, const RolloutConfig& config) {
  PlanResult r;
  r.values = refine_q(state, params, model, discount, config);
  const auto& v = r.values;
  if (config.compare_non_candidates) {
    std::vector<double> all = v.coarse;
    for (std::size_t i = 0; i < v.candidates.size(); ++i) all[v.candidates[i]] = v.refined[i];
    r.action = net::argmax(all);
    return r;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.candidates.size(); ++i) {
    const bool better = v.refined[i] > v.refined[best] ||
                        (v.refined[i] == v.refined[best] && v.candidates[i] < v.candidates[best]);
    if (better) best = i;
  }
  r.action = v.candidates[best];
  return r;
}

}  // namespace sgdqn::plan

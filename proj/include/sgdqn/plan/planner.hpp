#pragma once

#include <cstddef>
#include <vector>

#include "sgdqn/ad/parameters.hpp"
#include "sgdqn/plan/crowd_model.hpp"
#include "sgdqn/sim/simulator.hpp"

namespace sgdqn::plan {

struct RolloutConfig {
  std::size_t depth = 1;
  std::size_t width = 10;
  // false: argmax over the refined candidates only, so width 1 is exactly
  // the greedy network policy. true: refined candidates compete with the
  // coarse values of every other action.
  bool compare_non_candidates = false;

  void validate() const;
};

struct Prediction {
  sim::JointState next;  // robot-centric frame of the input state
  double reward = 0.0;
  bool terminal = false;  // goal or collision by the reward's own tests
};

// Exact robot kinematics plus a crowd model; rewards come from the true
// reward function applied to the predicted states.
class EnvironmentModel {
 public:
  EnvironmentModel(const CrowdModel& crowd, sim::SimConfig config);

  // `state` must be robot-centric; it is not modified.
  Prediction predict(const sim::JointState& state, const sim::Action& action) const;

  const sim::SimConfig& config() const { return config_; }
  const std::vector<sim::Action>& actions() const { return actions_; }

 private:
  const CrowdModel& crowd_;
  sim::SimConfig config_;
  std::vector<sim::Action> actions_;
};

struct ExpansionCounters {
  std::size_t model_calls = 0;
  std::size_t network_calls = 0;
  std::size_t leaf_values = 0;  // Q-values read at depth 0 below the root
};

struct RefinedValues {
  std::vector<double> coarse;             // all actions
  std::vector<std::size_t> candidates;    // best coarse first, ties by lower index
  std::vector<double> refined;            // per candidate
  ExpansionCounters counters;
};

// Top-k action indices by value; ties resolve to the lower index.
std::vector<std::size_t> top_k_actions(const std::vector<double>& values, std::size_t k);

// d-step refinement of the top-k coarse values at a robot-centric state.
RefinedValues refine_q(const sim::JointState& state, const ad::ParameterSet& params,
                       const EnvironmentModel& model, double discount, const RolloutConfig& config);

struct PlanResult {
  std::size_t action = 0;
  RefinedValues values;
};

PlanResult plan_action(const sim::JointState& state, const ad::ParameterSet& params,
                       const EnvironmentModel& model, double discount, const RolloutConfig& config);

}  // namespace sgdqn::plan

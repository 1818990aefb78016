#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "sgdqn/ad/parameters.hpp"
#include "sgdqn/plan/crowd_model.hpp"
#include "sgdqn/plan/planner.hpp"
#include "sgdqn/sim/simulator.hpp"

namespace sgdqn::eval {

// Maps a world-frame observation to an index into the 81-action set.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::size_t decide(const sim::JointState& observation) = 0;
  virtual std::string name() const = 0;
};

// Index of the action whose robot-centric velocity lies nearest `velocity`.
// Ties go to the lower index.
std::size_t nearest_action(std::span<const sim::Action> actions, Vec2 velocity);

// ORCA for the robot against pedestrians padded by `inflation`, snapped to
// the discrete action set.
class OrcaRobotPolicy final : public Policy {
 public:
  explicit OrcaRobotPolicy(sim::SimConfig config, double inflation = 0.2);
  std::size_t decide(const sim::JointState& observation) override;
  std::string name() const override { return "orca"; }

  // The unsnapped world-frame ORCA velocity, exposed for tests.
  Vec2 raw_velocity(const sim::JointState& observation) const;

 private:
  sim::SimConfig config_;
  double inflation_;
  std::vector<sim::Action> actions_;
};

// Value-network policy with optional lookahead. Depth 0 is the plain
// dueling network.
class NetworkPolicy final : public Policy {
 public:
  NetworkPolicy(std::string name, ad::ParameterSet params, std::shared_ptr<const plan::CrowdModel> model,
                sim::SimConfig config, double discount, plan::RolloutConfig rollout);
  std::size_t decide(const sim::JointState& observation) override;
  std::string name() const override { return name_; }
  const plan::RolloutConfig& rollout() const { return rollout_; }

 private:
  std::string name_;
  ad::ParameterSet params_;
  std::shared_ptr<const plan::CrowdModel> model_;
  plan::EnvironmentModel env_;
  double discount_;
  plan::RolloutConfig rollout_;
};

}  // namespace sgdqn::eval

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sgdqn/ad/parameters.hpp"
#include "sgdqn/net/network.hpp"
#include "sgdqn/sim/simulator.hpp"

namespace sgdqn::plan {

// One-step pedestrian predictor. Works in whatever frame `state` is in and
// must not mutate it.
class CrowdModel {
 public:
  virtual ~CrowdModel() = default;
  // Velocities each pedestrian is predicted to hold over the next step.
  virtual std::vector<Vec2> predict_velocities(const sim::JointState& state, double dt) const = 0;
  virtual std::string name() const = 0;

  std::vector<sim::ObservableState> predict(const sim::JointState& state, double dt) const;
};

class ConstantVelocityModel final : public CrowdModel {
 public:
  std::vector<Vec2> predict_velocities(const sim::JointState& state, double dt) const override;
  std::string name() const override { return "constant_velocity"; }
};

// Embedders + one attention layer + per-pedestrian velocity head, all under
// the "predictor." prefix. Inputs must be robot-centric.
ad::ParameterSet make_predictor_parameters(std::uint64_t seed, const net::NetworkDims& dims = {});

// N_total x 2 velocities for every pedestrian of the batch, graph-major.
ad::Var predictor_forward(net::ParameterBinder& bind, const net::GraphBatch& batch);

class LearnedCrowdModel final : public CrowdModel {
 public:
  explicit LearnedCrowdModel(ad::ParameterSet params) : params_(std::move(params)) {}
  std::vector<Vec2> predict_velocities(const sim::JointState& state, double dt) const override;
  std::string name() const override { return "learned"; }
  const ad::ParameterSet& parameters() const { return params_; }

 private:
  ad::ParameterSet params_;
};

// Training pair: a robot-centric state and the velocities the pedestrians
// actually took during the following step, in the same frame.
struct CrowdSample {
  sim::JointState state;
  std::vector<Vec2> next_velocities;
};

// Rolls out seeded episodes with a random robot and records every step.
std::vector<CrowdSample> harvest_crowd_samples(const sim::SimConfig& config, sim::ScenarioKind kind,
                                               std::size_t episodes, std::uint64_t seed);

struct PredictorTrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct PredictorTrainResult {
  ad::ParameterSet params;
  double untrained_ade = 0.0;  // held-out, before training
  double heldout_ade = 0.0;    // held-out, after training
  double constant_velocity_ade = 0.0;  // held-out baseline
  std::vector<double> epoch_loss;
  std::size_t train_samples = 0;
  std::size_t heldout_samples = 0;
};

// sum over pedestrians of |v_hat - v|^2.
ad::Var predictor_loss(net::ParameterBinder& bind, std::span<const CrowdSample* const> batch);

// Mean one-step displacement error (dt * |v_hat - v|) over all pedestrians.
double average_displacement_error(const CrowdModel& model, std::span<const CrowdSample> samples,
                                  double dt);

// Throws InvalidArgument on an empty dataset.
PredictorTrainResult train_crowd_predictor(const std::vector<CrowdSample>& samples, double dt,
                                           const PredictorTrainConfig& config);

}  // namespace sgdqn::plan

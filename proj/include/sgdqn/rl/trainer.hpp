#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "sgdqn/ad/adam.hpp"
#include "sgdqn/net/network.hpp"
#include "sgdqn/rl/episode.hpp"
#include "sgdqn/rl/replay.hpp"
#include "sgdqn/rl/schedule.hpp"
#include "sgdqn/sim/simulator.hpp"

namespace sgdqn::rl {

enum class UpdateMode { per_episode, per_step };

std::string_view to_string(UpdateMode mode);
UpdateMode parse_update_mode(std::string_view text);

struct TrainConfig {
  std::size_t episodes = 10000;
  EpsilonSchedule epsilon;
  double gamma = 0.9;
  double learning_rate = 5e-4;
  std::size_t target_update_interval = 500;  // C, in episodes
  std::size_t replay_capacity = 100000;
  std::size_t batch_size = 100;
  std::size_t gradient_steps = 1;  // per update trigger
  UpdateMode update_mode = UpdateMode::per_episode;
  // Time-limit endings stop the bootstrap too. Off treats them as truncation.
  bool timeout_terminal = true;
  // Return the parameters of the best validation (success, then return)
  // rather than those after the last episode.
  bool keep_best_validation = true;
  std::size_t validation_interval = 500;
  std::size_t validation_episodes = 100;
  std::uint64_t validation_seed = 1000000;  // validation case i uses seed + i
  std::size_t log_window = 100;
  std::uint64_t seed = 0;
  sim::ScenarioKind scenario = sim::ScenarioKind::simple;

  void validate() const;
};

struct TrainingLogRow {
  std::size_t episode = 0;  // episodes completed
  double avg_reward = 0.0;
  double avg_return = 0.0;
  double nav_time = std::numeric_limits<double>::quiet_NaN();  // successes only
  double disc_rate = 0.0;
  double epsilon = 0.0;
  double loss = std::numeric_limits<double>::quiet_NaN();  // mean over this episode's updates
};

struct ValidationRecord {
  std::size_t episode = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
  double avg_return = 0.0;
  double nav_time = std::numeric_limits<double>::quiet_NaN();
};

struct TrainingHooks {
  std::function<void(const TrainingLogRow&)> on_episode;
  std::function<void(const ValidationRecord&)> on_validation;
  // Called right after theta' <- theta with the number of completed episodes.
  std::function<void(std::size_t episode, const ad::ParameterSet& target)> on_target_sync;
  // Called before each episode with its index; may inspect the networks.
  std::function<void(std::size_t episode, const ad::ParameterSet& online,
                     const ad::ParameterSet& target)> on_episode_start;
  // Every transition as it enters replay memory.
  std::function<void(const Transition&)> on_transition;
};

struct TrainingResult {
  ad::ParameterSet params;  // the selected parameters
  std::vector<TrainingLogRow> log;
  std::vector<ValidationRecord> validations;
  std::size_t episodes = 0;
  // Validation whose parameters ended up in `params`; empty means the
  // parameters after the last episode.
  std::optional<ValidationRecord> selected;
};

// r for terminal transitions, r + discount * max_a' Q'(s', a') otherwise.
double td_target(const Transition& t, const ad::ParameterSet& target, double discount);
std::vector<double> td_targets(std::span<const Transition* const> batch, const ad::ParameterSet& target,
                               double discount);

// sum over the batch of (target - Q(s, a; theta))^2, without updating.
double batch_loss(std::span<const Transition* const> batch, const ad::ParameterSet& online,
                  const ad::ParameterSet& target, double discount);

// One Adam update of `online` on the squared TD error; returns the loss
// before the update. Throws InvalidArgument on an empty batch.
double train_step(std::span<const Transition* const> batch, ad::ParameterSet& online,
                  const ad::ParameterSet& target, ad::AdamState& adam, double discount);

// Greedy action of the Q-network for a world-frame observation.
std::size_t greedy_action(const ad::ParameterSet& params, const sim::JointState& observation);

// Greedy evaluation on the validation cases of `config`.
ValidationRecord validate_policy(const ad::ParameterSet& params, const TrainConfig& config,
                                 const sim::SimConfig& sim_config);

// Deep Q-learning with replay, epsilon-greedy exploration and a target
// network synced every C episodes. Deterministic for a fixed config.
TrainingResult run_training(const TrainConfig& config, const sim::SimConfig& sim_config,
                            const net::NetworkDims& dims = {}, const TrainingHooks& hooks = {});

}  // namespace sgdqn::rl

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sgdqn/plan/crowd_model.hpp"
#include "sgdqn/plan/planner.hpp"
#include "sgdqn/rl/trainer.hpp"
#include "sgdqn/sim/state.hpp"

namespace sgdqn {

enum class PolicyKind { orca, dqn, sgdqn };
std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view text);

enum class CrowdModelKind { constant_velocity, learned };
std::string_view to_string(CrowdModelKind kind);
CrowdModelKind parse_crowd_model_kind(std::string_view text);

struct PlannerSettings {
  plan::RolloutConfig rollout;
  CrowdModelKind model = CrowdModelKind::constant_velocity;
  std::string predictor_checkpoint;  // needed when model is learned
};

struct EvalSettings {
  PolicyKind policy = PolicyKind::sgdqn;
  sim::ScenarioKind scenario = sim::ScenarioKind::simple;
  std::size_t cases = 500;
  std::uint64_t seed = 0;
  double orca_inflation = 0.2;
};

struct PredictorSettings {
  plan::PredictorTrainConfig train;
  std::size_t harvest_episodes = 200;
  sim::ScenarioKind scenario = sim::ScenarioKind::simple;
};

// Everything a run needs. Precedence: command-line flags, then the file,
// then these defaults.
struct RunConfig {
  sim::SimConfig sim;
  rl::TrainConfig train;  // train.seed doubles as the run seed
  PlannerSettings planner;
  EvalSettings eval;
  PredictorSettings predictor;
  std::string output_dir = "run";

  void validate() const;
};

// Sets one "section.key" entry. Unknown keys and unparsable values raise
// InvalidArgument naming the key.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& config, std::string_view key);
std::vector<std::string> config_keys();

// INI text. Parsing starts from `base`, so callers choose the defaults.
RunConfig parse_config(const std::string& text, const RunConfig& base = {});
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = {});
// Every key, fully resolved; reading it back yields the same config.
std::string format_config(const RunConfig& config);

}  // namespace sgdqn

#pragma once

// Whole-run operations that read a RunConfig and leave their artifacts in
// config.output_dir. The C API and the command-line tool are thin layers
// over these.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "sgdqn/config.hpp"
#include "sgdqn/eval/evaluation.hpp"

namespace sgdqn::app {

// Receives one human-readable line per event.
using Progress = std::function<void(const std::string& line)>;

// Artifact names inside the output directory.
inline constexpr const char* kConfigFile = "config.ini";
inline constexpr const char* kRunFile = "run.json";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kTrainingLogFile = "training_log.csv";
inline constexpr const char* kValidationFile = "validation.csv";
inline constexpr const char* kMetricsJsonFile = "metrics.json";
inline constexpr const char* kMetricsTableFile = "metrics.txt";
inline constexpr const char* kEpisodesFile = "episodes.csv";
inline constexpr const char* kTimingFile = "timing.json";
inline constexpr const char* kPredictorFile = "predictor.bin";
inline constexpr const char* kPredictorReportFile = "predictor.json";

ad::ParameterSet load_predictor(const std::filesystem::path& path);

// Policy named by config.eval.policy. orca ignores `checkpoint`; the others
// require it. dqn always plans at depth 0.
std::unique_ptr<eval::Policy> make_policy(const RunConfig& config, const std::string& checkpoint);

// The config as it will actually run: dqn pins planner.depth to 0.
RunConfig resolve_for_policy(RunConfig config);

struct TrainSummary {
  std::filesystem::path checkpoint;
  std::string checkpoint_hash;
  std::size_t episodes = 0;
  std::optional<rl::ValidationRecord> last_validation;
  // Validation whose parameters were checkpointed, if any.
  std::optional<rl::ValidationRecord> selected_validation;
};
TrainSummary train_command(const RunConfig& config, const Progress& progress = {});

struct EvaluateOptions {
  std::string checkpoint;
  bool export_trajectories = false;
  bool export_attention = false;  // initial state of each case; network policies only
};
struct EvaluateSummary {
  eval::Metrics metrics;
  std::string table;
};
EvaluateSummary evaluate_command(const RunConfig& config, const EvaluateOptions& options);

// Single case of the evaluation suite; returns the number of rows written.
std::size_t export_trajectory_command(const RunConfig& config, const std::string& checkpoint,
                                      std::size_t case_index, const std::filesystem::path& out);
// Attention of the Q-network at `step` of case `case_index` under the
// configured policy.
std::size_t inspect_attention_command(const RunConfig& config, const std::string& checkpoint,
                                      std::size_t case_index, std::size_t step,
                                      const std::filesystem::path& out);

struct PredictorSummary {
  std::filesystem::path checkpoint;
  std::size_t train_samples = 0;
  std::size_t heldout_samples = 0;
  double untrained_ade = 0.0;
  double heldout_ade = 0.0;
  double constant_velocity_ade = 0.0;
};
PredictorSummary predict_train_command(const RunConfig& config, const Progress& progress = {});

}  // namespace sgdqn::app

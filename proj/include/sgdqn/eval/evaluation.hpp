#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgdqn/eval/policy.hpp"
#include "sgdqn/sim/simulator.hpp"

namespace sgdqn::eval {

struct TestSuite {
  sim::ScenarioKind kind = sim::ScenarioKind::simple;
  std::size_t cases = 500;
  std::uint64_t seed = 0;  // case i runs scenario seed + i
  std::optional<std::size_t> circle_pedestrians;  // overrides the scenario default
};

struct EpisodeRecord {
  std::size_t case_index = 0;
  std::uint64_t seed = 0;
  sim::EpisodeStatus status = sim::EpisodeStatus::running;
  double time = 0.0;
  std::size_t steps = 0;
  double discounted_return = 0.0;
  std::size_t discomfort_steps = 0;
  double decision_seconds = 0.0;  // wall clock inside Policy::decide
};

struct Metrics {
  std::size_t cases = 0;
  double success = 0.0;
  double collision = 0.0;
  double timeout = 0.0;
  double nav_time = 0.0;  // over successes; NaN without any
  double disc_rate = 0.0;
  double avg_return = 0.0;
  double run_time_ms = 0.0;  // mean per decision
};

// Order of `records` does not matter; they are sorted by case index first.
Metrics aggregate(std::vector<EpisodeRecord> records);

struct EvaluationOptions {
  bool keep_trajectories = false;
};

struct EvaluationResult {
  Metrics metrics;
  std::vector<EpisodeRecord> episodes;
  // World snapshots per episode, initial state first, when requested.
  std::vector<std::vector<sim::World>> trajectories;
};

EvaluationResult run_evaluation(Policy& policy, const TestSuite& suite, const sim::SimConfig& config,
                                double discount, const EvaluationOptions& options = {});

// Human-readable table, one row per named result.
std::string metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows, bool with_timing = true);

}  // namespace sgdqn::eval

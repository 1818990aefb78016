#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "sgdqn/ad/parameters.hpp"
#include "sgdqn/sim/simulator.hpp"

namespace sgdqn::eval {

// Agent 0 is the robot; pedestrians follow in order.
struct TrajectoryRow {
  double t = 0.0;
  std::size_t agent_id = 0;
  double x = 0.0, y = 0.0, vx = 0.0, vy = 0.0, radius = 0.0, goal_x = 0.0, goal_y = 0.0;
};

struct AttentionRow {
  std::size_t from_agent = 0;
  std::size_t to_agent = 0;
  double weight = 0.0;
  std::size_t layer = 0;
};

std::vector<TrajectoryRow> trajectory_rows(const std::vector<sim::World>& frames);
// Weights of every attention layer for a world-frame state.
std::vector<AttentionRow> attention_rows(const ad::ParameterSet& params, const sim::JointState& state);

// CSV with a header line. Numbers are printed with 17 significant digits so
// that parsing reproduces them exactly.
std::string to_csv(const std::vector<TrajectoryRow>& rows);
std::string to_csv(const std::vector<AttentionRow>& rows);
std::vector<TrajectoryRow> parse_trajectory_csv(const std::string& text);
std::vector<AttentionRow> parse_attention_csv(const std::string& text);

// Throws IoError carrying the path.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace sgdqn::eval

#include "sgdqn/eval/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "sgdqn/errors.hpp"
#include "sgdqn/rl/episode.hpp"

namespace sgdqn::eval {

Metrics aggregate(std::vector<EpisodeRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const EpisodeRecord& a, const EpisodeRecord& b) { return a.case_index < b.case_index; });
  Metrics m;
  m.cases = records.size();
  if (records.empty()) {
    m.nav_time = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  std::size_t success = 0, collision = 0, timeout = 0, steps = 0, discomfort = 0;
  double nav = 0.0, ret = 0.0, decide = 0.0;
  for (const auto& r : records) {
    switch (r.status) {
      case sim::EpisodeStatus::reached_goal:
        ++success;
        nav += r.time;
        break;
      case sim::EpisodeStatus::collision: ++collision; break;
      case sim::EpisodeStatus::timeout: ++timeout; break;
      case sim::EpisodeStatus::running: throw InvalidState("aggregate: unfinished episode");
    }
    steps += r.steps;
    discomfort += r.discomfort_steps;
    ret += r.discounted_return;
    decide += r.decision_seconds;
  }
  const double n = static_cast<double>(records.size());
  m.success = static_cast<double>(success) / n;
  m.collision = static_cast<double>(collision) / n;
  m.timeout = static_cast<double>(timeout) / n;
  m.nav_time = success ? nav / static_cast<double>(success) : std::numeric_limits<double>::quiet_NaN();
  m.disc_rate = steps ? static_cast<double>(discomfort) / static_cast<double>(steps) : 0.0;
  m.avg_return = ret / n;
  m.run_time_ms = steps ? 1e3 * decide / static_cast<double>(steps) : 0.0;
  return m;
}

EvaluationResult run_evaluation(Policy& policy, const TestSuite& suite, const sim::SimConfig& config,
                                double discount, const EvaluationOptions& options) {
  const auto actions = sim::build_action_space(config.robot_preferred_speed);
  EvaluationResult result;
  result.episodes.reserve(suite.cases);
  for (std::size_t i = 0; i < suite.cases; ++i) {
    const std::uint64_t seed = suite.seed + i;
    auto spec = sim::ScenarioSpec::make(suite.kind, seed, config);
    if (suite.circle_pedestrians) spec.n_circle = *suite.circle_pedestrians;
    sim::World world = sim::generate_scenario(spec, config);
    double seconds = 0.0;
    const rl::Decide decide = [&](const sim::JointState& obs) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::size_t a = policy.decide(obs);
      seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return a;
    };
    std::vector<sim::World> frames;
    rl::StepObserver observe;
    if (options.keep_trajectories) {
      observe = [&](const sim::World& before, const sim::Action&, const sim::StepOutcome&) {
        frames.push_back(before);
      };
    }
    const rl::EpisodeStats stats = rl::play_episode(world, actions, decide, config, discount, observe);
    if (options.keep_trajectories) {
      frames.push_back(world);
      result.trajectories.push_back(std::move(frames));
    }
    EpisodeRecord r;
    r.case_index = i;
    r.seed = seed;
    r.status = stats.status;
    r.time = stats.time;
    r.steps = stats.steps;
    r.discounted_return = stats.discounted_return;
    r.discomfort_steps = stats.discomfort_steps;
    r.decision_seconds = seconds;
    result.episodes.push_back(r);
  }
  result.metrics = aggregate(result.episodes);
  return result;
}

std::string metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows, bool with_timing) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %6s %8s %8s %8s %9s %9s %9s", "policy", "cases", "success", "collision",
                "timeout", "nav_time", "disc_rate", "return");
  out += line;
  out += with_timing ? "  run_time_ms\n" : "\n";
  for (const auto& [name, m] : rows) {
    std::snprintf(line, sizeof line, "%-12s %6zu %8.3f %8.3f %8.3f %9.2f %9.3f %9.4f", name.c_str(), m.cases,
                  m.success, m.collision, m.timeout, m.nav_time, m.disc_rate, m.avg_return);
    out += line;
    if (with_timing) {
      std::snprintf(line, sizeof line, " %12.3f", m.run_time_ms);
      out += line;
    }
    out += "\n";
  }
  return out;
}

}  // namespace sgdqn::eval

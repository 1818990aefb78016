#include "sgdqn/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <sstream>

#include "sgdqn/errors.hpp"
#include "sgdqn/eval/exports.hpp"

namespace sgdqn {
namespace {

namespace pt = boost::property_tree;

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw InvalidArgument("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "' as " +
                        std::string(expected));
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest exact form
  return std::string(buf, r.ptr);
}
std::string fmt(std::uint64_t v) { return std::to_string(v); }

double parse_real(std::string_view key, std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) bad_value(key, s, "a number");
  return v;
}

std::uint64_t parse_count(std::string_view key, std::string_view s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    bad_value(key, s, "a non-negative integer");
  }
  return v;
}

bool parse_flag(std::string_view key, std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  bad_value(key, s, "true or false");
}

template <class Enum, class Parse>
Enum parse_enum(std::string_view key, std::string_view s, Parse parse) {
  try {
    return parse(s);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument("config key '" + std::string(key) + "': " + e.what());
  }
}

// Member-pointer helpers keep the table below one line per key.
template <class T>
Field real(std::string key, T RunConfig::*section, double T::*member) {
  return {key, [=](const RunConfig& c) { return fmt(c.*section.*member); },
          [=](RunConfig& c, std::string_view v) { c.*section.*member = parse_real(key, v); }};
}
template <class T, class N>
Field count(std::string key, T RunConfig::*section, N T::*member) {
  return {key, [=](const RunConfig& c) { return fmt(static_cast<std::uint64_t>(c.*section.*member)); },
          [=](RunConfig& c, std::string_view v) { c.*section.*member = static_cast<N>(parse_count(key, v)); }};
}
template <class T>
Field scenario(std::string key, T RunConfig::*section, sim::ScenarioKind T::*member) {
  return {key, [=](const RunConfig& c) { return std::string(sim::to_string(c.*section.*member)); },
          [=](RunConfig& c, std::string_view v) {
            c.*section.*member = parse_enum<sim::ScenarioKind>(key, v, sim::parse_scenario_kind);
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using RC = RunConfig;
    std::vector<Field> f;
    f.push_back(real("sim.time_step", &RC::sim, &sim::SimConfig::time_step));
    f.push_back(real("sim.time_limit", &RC::sim, &sim::SimConfig::time_limit));
    f.push_back(real("sim.robot_radius", &RC::sim, &sim::SimConfig::robot_radius));
    f.push_back(real("sim.robot_preferred_speed", &RC::sim, &sim::SimConfig::robot_preferred_speed));
    f.push_back(real("sim.pedestrian_radius", &RC::sim, &sim::SimConfig::pedestrian_radius));
    f.push_back(real("sim.pedestrian_preferred_speed", &RC::sim, &sim::SimConfig::pedestrian_preferred_speed));
    f.push_back(real("sim.orca_time_horizon", &RC::sim, &sim::SimConfig::orca_time_horizon));
    f.push_back(real("sim.orca_radius_margin", &RC::sim, &sim::SimConfig::orca_radius_margin));
    f.push_back(real("sim.circle_radius", &RC::sim, &sim::SimConfig::circle_radius));
    f.push_back(real("sim.square_side", &RC::sim, &sim::SimConfig::square_side));
    f.push_back(real("sim.circle_noise", &RC::sim, &sim::SimConfig::circle_noise));

    f.push_back(real("reward.goal_reward", &RC::sim, &sim::SimConfig::goal_reward));
    f.push_back(real("reward.collision_penalty", &RC::sim, &sim::SimConfig::collision_penalty));
    f.push_back(real("reward.discomfort_distance", &RC::sim, &sim::SimConfig::discomfort_distance));
    f.push_back(real("reward.goal_tolerance", &RC::sim, &sim::SimConfig::goal_tolerance));
    f.push_back(real("reward.progress_factor", &RC::sim, &sim::SimConfig::progress_factor));

    f.push_back(count("run.seed", &RC::train, &rl::TrainConfig::seed));
    f.push_back({"run.output_dir", [](const RC& c) { return c.output_dir; },
                 [](RC& c, std::string_view v) { c.output_dir = std::string(v); }});

    f.push_back(count("train.episodes", &RC::train, &rl::TrainConfig::episodes));
    f.push_back({"train.epsilon_start", [](const RC& c) { return fmt(c.train.epsilon.start); },
                 [](RC& c, std::string_view v) { c.train.epsilon.start = parse_real("train.epsilon_start", v); }});
    f.push_back({"train.epsilon_end", [](const RC& c) { return fmt(c.train.epsilon.end); },
                 [](RC& c, std::string_view v) { c.train.epsilon.end = parse_real("train.epsilon_end", v); }});
    f.push_back({"train.epsilon_decay_episodes",
                 [](const RC& c) { return fmt(static_cast<std::uint64_t>(c.train.epsilon.decay_episodes)); },
                 [](RC& c, std::string_view v) {
                   c.train.epsilon.decay_episodes = parse_count("train.epsilon_decay_episodes", v);
                 }});
    f.push_back(real("train.gamma", &RC::train, &rl::TrainConfig::gamma));
    f.push_back(real("train.learning_rate", &RC::train, &rl::TrainConfig::learning_rate));
    f.push_back(count("train.target_update_interval", &RC::train, &rl::TrainConfig::target_update_interval));
    f.push_back(count("train.replay_capacity", &RC::train, &rl::TrainConfig::replay_capacity));
    f.push_back(count("train.batch_size", &RC::train, &rl::TrainConfig::batch_size));
    f.push_back(count("train.gradient_steps", &RC::train, &rl::TrainConfig::gradient_steps));
    f.push_back({"train.update_mode", [](const RC& c) { return std::string(rl::to_string(c.train.update_mode)); },
                 [](RC& c, std::string_view v) {
                   c.train.update_mode = parse_enum<rl::UpdateMode>("train.update_mode", v, rl::parse_update_mode);
                 }});
    f.push_back({"train.timeout_terminal",
                 [](const RC& c) { return std::string(c.train.timeout_terminal ? "true" : "false"); },
                 [](RC& c, std::string_view v) {
                   c.train.timeout_terminal = parse_flag("train.timeout_terminal", v);
                 }});
    f.push_back({"train.keep_best_validation",
                 [](const RC& c) { return std::string(c.train.keep_best_validation ? "true" : "false"); },
                 [](RC& c, std::string_view v) {
                   c.train.keep_best_validation = parse_flag("train.keep_best_validation", v);
                 }});
    f.push_back(count("train.validation_interval", &RC::train, &rl::TrainConfig::validation_interval));
    f.push_back(count("train.validation_episodes", &RC::train, &rl::TrainConfig::validation_episodes));
    f.push_back(count("train.validation_seed", &RC::train, &rl::TrainConfig::validation_seed));
    f.push_back(count("train.log_window", &RC::train, &rl::TrainConfig::log_window));
    f.push_back(scenario("train.scenario", &RC::train, &rl::TrainConfig::scenario));

    f.push_back({"planner.depth", [](const RC& c) { return fmt(static_cast<std::uint64_t>(c.planner.rollout.depth)); },
                 [](RC& c, std::string_view v) { c.planner.rollout.depth = parse_count("planner.depth", v); }});
    f.push_back({"planner.width", [](const RC& c) { return fmt(static_cast<std::uint64_t>(c.planner.rollout.width)); },
                 [](RC& c, std::string_view v) { c.planner.rollout.width = parse_count("planner.width", v); }});
    f.push_back({"planner.compare_non_candidates",
                 [](const RC& c) { return std::string(c.planner.rollout.compare_non_candidates ? "true" : "false"); },
                 [](RC& c, std::string_view v) {
                   c.planner.rollout.compare_non_candidates = parse_flag("planner.compare_non_candidates", v);
                 }});
    f.push_back({"planner.model", [](const RC& c) { return std::string(to_string(c.planner.model)); },
                 [](RC& c, std::string_view v) {
                   c.planner.model = parse_enum<CrowdModelKind>("planner.model", v, parse_crowd_model_kind);
                 }});
    f.push_back({"planner.predictor_checkpoint", [](const RC& c) { return c.planner.predictor_checkpoint; },
                 [](RC& c, std::string_view v) { c.planner.predictor_checkpoint = std::string(v); }});

    f.push_back({"eval.policy", [](const RC& c) { return std::string(to_string(c.eval.policy)); },
                 [](RC& c, std::string_view v) {
                   c.eval.policy = parse_enum<PolicyKind>("eval.policy", v, parse_policy_kind);
                 }});
    f.push_back(scenario("eval.scenario", &RC::eval, &EvalSettings::scenario));
    f.push_back(count("eval.cases", &RC::eval, &EvalSettings::cases));
    f.push_back(count("eval.seed", &RC::eval, &EvalSettings::seed));
    f.push_back(real("eval.orca_inflation", &RC::eval, &EvalSettings::orca_inflation));

    f.push_back({"predictor.epochs", [](const RC& c) { return fmt(static_cast<std::uint64_t>(c.predictor.train.epochs)); },
                 [](RC& c, std::string_view v) { c.predictor.train.epochs = parse_count("predictor.epochs", v); }});
    f.push_back({"predictor.batch_size",
                 [](const RC& c) { return fmt(static_cast<std::uint64_t>(c.predictor.train.batch_size)); },
                 [](RC& c, std::string_view v) { c.predictor.train.batch_size = parse_count("predictor.batch_size", v); }});
    f.push_back({"predictor.learning_rate", [](const RC& c) { return fmt(c.predictor.train.learning_rate); },
                 [](RC& c, std::string_view v) {
                   c.predictor.train.learning_rate = parse_real("predictor.learning_rate", v);
                 }});
    f.push_back({"predictor.holdout_fraction", [](const RC& c) { return fmt(c.predictor.train.holdout_fraction); },
                 [](RC& c, std::string_view v) {
                   c.predictor.train.holdout_fraction = parse_real("predictor.holdout_fraction", v);
                 }});
    f.push_back(count("predictor.harvest_episodes", &RC::predictor, &PredictorSettings::harvest_episodes));
    f.push_back(scenario("predictor.scenario", &RC::predictor, &PredictorSettings::scenario));
    return f;
  }();
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw InvalidArgument("unknown config key '" + std::string(key) + "'");
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::orca: return "orca";
    case PolicyKind::dqn: return "dqn";
    case PolicyKind::sgdqn: return "sgdqn";
  }
  return "?";
}

PolicyKind parse_policy_kind(std::string_view text) {
  if (text == "orca") return PolicyKind::orca;
  if (text == "dqn") return PolicyKind::dqn;
  if (text == "sgdqn") return PolicyKind::sgdqn;
  throw InvalidArgument("unknown policy '" + std::string(text) + "' (expected orca, dqn or sgdqn)");
}

std::string_view to_string(CrowdModelKind kind) {
  return kind == CrowdModelKind::learned ? "learned" : "constant_velocity";
}

CrowdModelKind parse_crowd_model_kind(std::string_view text) {
  if (text == "constant_velocity") return CrowdModelKind::constant_velocity;
  if (text == "learned") return CrowdModelKind::learned;
  throw InvalidArgument("unknown crowd model '" + std::string(text) + "' (expected constant_velocity or learned)");
}

void RunConfig::validate() const {
  sim.validate();
  train.validate();
  planner.rollout.validate();
  if (planner.model == CrowdModelKind::learned && planner.predictor_checkpoint.empty()) {
    throw InvalidArgument("planner.predictor_checkpoint: required when planner.model is learned");
  }
  if (eval.cases == 0) throw InvalidArgument("eval.cases: must be positive");
  if (!(eval.orca_inflation >= 0.0)) throw InvalidArgument("eval.orca_inflation: must be non-negative");
  if (predictor.train.epochs == 0) throw InvalidArgument("predictor.epochs: must be positive");
  if (predictor.train.batch_size == 0) throw InvalidArgument("predictor.batch_size: must be positive");
  if (!(predictor.train.learning_rate > 0.0)) throw InvalidArgument("predictor.learning_rate: must be positive");
  if (!(predictor.train.holdout_fraction > 0.0 && predictor.train.holdout_fraction < 1.0)) {
    throw InvalidArgument("predictor.holdout_fraction: must lie in (0, 1)");
  }
  if (predictor.harvest_episodes == 0) throw InvalidArgument("predictor.harvest_episodes: must be positive");
  if (output_dir.empty()) throw InvalidArgument("run.output_dir: must not be empty");
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  find_field(key).set(config, value);
  // The run seed also seeds predictor training.
  if (key == "run.seed") config.predictor.train.seed = config.train.seed;
}

std::string get_config_value(const RunConfig& config, std::string_view key) { return find_field(key).get(config); }

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError("config: " + e.message() + " on line " + std::to_string(e.line()));
  }
  RunConfig config = base;
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      throw InvalidArgument("config key '" + section + "' must sit inside a section");
    }
    for (const auto& [key, node] : entries) {
      set_config_value(config, section + "." + key, node.data());
    }
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
  const std::string text = eval::read_text_file(path);
  try {
    return parse_config(text, base);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::string format_config(const RunConfig& config) {
  std::string out;
  std::string current;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string section = f.key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out += "\n";
      out += "[" + section + "]\n";
      current = section;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(config) + "\n";
  }
  return out;
}

}  // namespace sgdqn

#include "sgdqn/app/commands.hpp"

#include <cstdio>
#include <json.hpp>

#include "sgdqn/ad/serialize.hpp"
#include "sgdqn/errors.hpp"
#include "sgdqn/eval/exports.hpp"
#include "sgdqn/rl/checkpoint.hpp"
#include "sgdqn/rl/episode.hpp"
#include "sgdqn/rl/schedule.hpp"

namespace sgdqn::app {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kPredictorKind = "crowd_predictor";

// Settings stored inside checkpoints. The output directory is left out so
// that identical runs give byte-identical checkpoints wherever they land.
json config_json(const RunConfig& config) {
  json j = json::object();
  for (const auto& key : config_keys()) {
    if (key != "run.output_dir") j[key] = get_config_value(config, key);
  }
  return j;
}

void prepare_output(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + config.output_dir + "': " + ec.message());
  eval::write_text_file(fs::path(config.output_dir) / kConfigFile, format_config(config));
}

void write_run_record(const RunConfig& config, const std::string& command, const std::string& checkpoint,
                      const std::string& checkpoint_hash, const json& extra = json::object()) {
  json run = {{"command", command},
              {"seed", config.train.seed},
              {"config", kConfigFile},
              {"checkpoint", checkpoint},
              {"checkpoint_hash", checkpoint_hash},
              {"checkpoint_format_version", rl::kCheckpointFormatVersion}};
  run.update(extra);
  eval::write_text_file(fs::path(config.output_dir) / kRunFile, run.dump(2) + "\n");
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double discount_of(const RunConfig& config) {
  return rl::discount_factor_per_step(config.train.gamma, config.sim.time_step, config.sim.robot_preferred_speed);
}

std::shared_ptr<const plan::CrowdModel> make_crowd_model(const RunConfig& config) {
  if (config.planner.model == CrowdModelKind::learned) {
    return std::make_shared<plan::LearnedCrowdModel>(load_predictor(config.planner.predictor_checkpoint));
  }
  return std::make_shared<plan::ConstantVelocityModel>();
}

json metrics_json(const eval::Metrics& m) {
  auto maybe = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  return {{"success", m.success},     {"collision", m.collision}, {"timeout", m.timeout},
          {"nav_time", maybe(m.nav_time)}, {"disc_rate", m.disc_rate}, {"avg_return", m.avg_return}};
}

sim::World case_world(const RunConfig& config, std::size_t case_index) {
  return sim::generate_scenario(
      sim::ScenarioSpec::make(config.eval.scenario, config.eval.seed + case_index, config.sim), config.sim);
}

std::string checkpoint_hash_or_empty(const std::string& checkpoint) {
  return checkpoint.empty() ? std::string() : rl::file_hash(checkpoint);
}

}  // namespace

ad::ParameterSet load_predictor(const fs::path& path) {
  rl::Checkpoint raw = rl::read_checkpoint(path);
  const std::string found = raw.metadata.value("kind", "");
  if (found != kPredictorKind) {
    throw InvalidArgument(path.string() + ": checkpoint holds a '" + found + "', expected a '" + kPredictorKind + "'");
  }
  ad::ParameterSet params = plan::make_predictor_parameters(0);
  try {
    ad::assign_by_name(params, raw.params);
  } catch (const ShapeError& e) {
    throw ShapeError(path.string() + ": " + e.what());
  }
  return params;
}

RunConfig resolve_for_policy(RunConfig config) {
  if (config.eval.policy == PolicyKind::dqn) config.planner.rollout.depth = 0;
  return config;
}

std::unique_ptr<eval::Policy> make_policy(const RunConfig& raw, const std::string& checkpoint) {
  const RunConfig config = resolve_for_policy(raw);
  if (config.eval.policy == PolicyKind::orca) {
    return std::make_unique<eval::OrcaRobotPolicy>(config.sim, config.eval.orca_inflation);
  }
  if (checkpoint.empty()) {
    throw InvalidArgument("policy '" + std::string(to_string(config.eval.policy)) + "' needs a checkpoint");
  }
  rl::Checkpoint cp = rl::load_checkpoint(checkpoint);
  return std::make_unique<eval::NetworkPolicy>(std::string(to_string(config.eval.policy)), std::move(cp.params),
                                               make_crowd_model(config), config.sim, discount_of(config),
                                               config.planner.rollout);
}

TrainSummary train_command(const RunConfig& config, const Progress& progress) {
  config.validate();
  prepare_output(config);
  const fs::path dir = config.output_dir;

  std::string log = "episode,avg_reward_100,avg_return_100,nav_time_100,disc_rate_100,epsilon,loss\n";
  std::string validation = "episode,success,collision,timeout,avg_return,nav_time\n";
  TrainSummary summary;
  rl::TrainingHooks hooks;
  hooks.on_episode = [&](const rl::TrainingLogRow& r) {
    log += std::to_string(r.episode) + "," + num(r.avg_reward) + "," + num(r.avg_return) + "," + num(r.nav_time) +
           "," + num(r.disc_rate) + "," + num(r.epsilon) + "," + num(r.loss) + "\n";
    if (progress && r.episode % config.train.log_window == 0) {
      char line[200];
      std::snprintf(line, sizeof line, "episode %zu reward %.3f return %.3f nav_time %.2f disc %.3f eps %.3f",
                    r.episode, r.avg_reward, r.avg_return, r.nav_time, r.disc_rate, r.epsilon);
      progress(line);
    }
  };
  hooks.on_validation = [&](const rl::ValidationRecord& v) {
    validation += std::to_string(v.episode) + "," + num(v.success_rate) + "," + num(v.collision_rate) + "," +
                  num(v.timeout_rate) + "," + num(v.avg_return) + "," + num(v.nav_time) + "\n";
    summary.last_validation = v;
    if (progress) {
      char line[200];
      std::snprintf(line, sizeof line, "validation at %zu: success %.3f collision %.3f timeout %.3f", v.episode,
                    v.success_rate, v.collision_rate, v.timeout_rate);
      progress(line);
    }
  };
  const rl::TrainingResult result = rl::run_training(config.train, config.sim, {}, hooks);

  summary.checkpoint = dir / kCheckpointFile;
  rl::save_checkpoint(summary.checkpoint, result.params, config_json(config), result.episodes);
  eval::write_text_file(dir / kTrainingLogFile, log);
  eval::write_text_file(dir / kValidationFile, validation);
  summary.checkpoint_hash = rl::file_hash(summary.checkpoint);
  summary.episodes = result.episodes;
  summary.selected_validation = result.selected;
  json selected = nullptr;
  if (result.selected) selected = {{"episode", result.selected->episode}, {"success", result.selected->success_rate}};
  write_run_record(config, "train", summary.checkpoint.string(), summary.checkpoint_hash,
                   {{"selected_validation", selected}});
  return summary;
}

EvaluateSummary evaluate_command(const RunConfig& raw, const EvaluateOptions& options) {
  const RunConfig config = resolve_for_policy(raw);
  config.validate();
  auto policy = make_policy(config, options.checkpoint);
  const std::string hash = config.eval.policy == PolicyKind::orca ? "" : checkpoint_hash_or_empty(options.checkpoint);
  prepare_output(config);
  const fs::path dir = config.output_dir;

  const eval::TestSuite suite{config.eval.scenario, config.eval.cases, config.eval.seed, std::nullopt};
  eval::EvaluationOptions eo;
  eo.keep_trajectories = options.export_trajectories;
  const auto result = eval::run_evaluation(*policy, suite, config.sim, discount_of(config), eo);
  const auto& m = result.metrics;

  // Wall-clock figures go to their own file so the metrics files stay
  // byte-identical between repeated runs.
  json metrics = {{"policy", to_string(config.eval.policy)},
                  {"scenario", sim::to_string(config.eval.scenario)},
                  {"seed", config.eval.seed},
                  {"cases", config.eval.cases},
                  {"depth", config.planner.rollout.depth},
                  {"width", config.planner.rollout.width},
                  {"crowd_model", to_string(config.planner.model)},
                  {"metrics", metrics_json(m)}};
  eval::write_text_file(dir / kMetricsJsonFile, metrics.dump(2) + "\n");
  eval::Metrics untimed = m;
  untimed.run_time_ms = 0.0;
  const std::string name(to_string(config.eval.policy));
  eval::write_text_file(dir / kMetricsTableFile, eval::metrics_table({{name, untimed}}, false));
  json timing = {{"run_time_ms_per_decision", m.run_time_ms}};
  eval::write_text_file(dir / kTimingFile, timing.dump(2) + "\n");

  std::string episodes = "case,seed,status,time,steps,discounted_return,discomfort_steps\n";
  for (const auto& e : result.episodes) {
    episodes += std::to_string(e.case_index) + "," + std::to_string(e.seed) + "," +
                std::string(sim::to_string(e.status)) + "," + num(e.time) + "," + std::to_string(e.steps) + "," +
                num(e.discounted_return) + "," + std::to_string(e.discomfort_steps) + "\n";
  }
  eval::write_text_file(dir / kEpisodesFile, episodes);

  auto case_name = [](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "case_%05zu.csv", i);
    return std::string(buf);
  };
  if (options.export_trajectories) {
    fs::create_directories(dir / "trajectories");
    for (std::size_t i = 0; i < result.trajectories.size(); ++i) {
      eval::write_text_file(dir / "trajectories" / case_name(i),
                            eval::to_csv(eval::trajectory_rows(result.trajectories[i])));
    }
  }
  if (options.export_attention) {
    if (config.eval.policy == PolicyKind::orca) throw InvalidArgument("attention export needs a network policy");
    const rl::Checkpoint cp = rl::load_checkpoint(options.checkpoint);
    fs::create_directories(dir / "attention");
    for (std::size_t i = 0; i < config.eval.cases; ++i) {
      eval::write_text_file(dir / "attention" / case_name(i),
                            eval::to_csv(eval::attention_rows(cp.params, case_world(config, i).joint_state())));
    }
  }
  write_run_record(config, "evaluate", options.checkpoint, hash);
  return {m, eval::metrics_table({{name, m}})};
}

std::size_t export_trajectory_command(const RunConfig& raw, const std::string& checkpoint, std::size_t case_index,
                                      const fs::path& out) {
  const RunConfig config = resolve_for_policy(raw);
  config.validate();
  auto policy = make_policy(config, checkpoint);
  eval::TestSuite suite{config.eval.scenario, 1, config.eval.seed + case_index, std::nullopt};
  const auto result = eval::run_evaluation(*policy, suite, config.sim, discount_of(config), {true});
  const auto rows = eval::trajectory_rows(result.trajectories.at(0));
  eval::write_text_file(out, eval::to_csv(rows));
  return rows.size();
}

std::size_t inspect_attention_command(const RunConfig& raw, const std::string& checkpoint, std::size_t case_index,
                                      std::size_t step, const fs::path& out) {
  const RunConfig config = resolve_for_policy(raw);
  config.validate();
  if (checkpoint.empty()) throw InvalidArgument("inspect-attention needs a checkpoint");
  const rl::Checkpoint cp = rl::load_checkpoint(checkpoint);
  auto policy = make_policy(config, checkpoint);
  const auto actions = sim::build_action_space(config.sim.robot_preferred_speed);
  sim::World world = case_world(config, case_index);
  for (std::size_t s = 0; s < step; ++s) {
    if (world.status != sim::EpisodeStatus::running) {
      throw InvalidArgument("case " + std::to_string(case_index) + " ends after " + std::to_string(s) +
                            " steps; --step " + std::to_string(step) + " is past the end");
    }
    sim::step_episode(world, actions[policy->decide(world.joint_state())], config.sim);
  }
  const auto rows = eval::attention_rows(cp.params, world.joint_state());
  eval::write_text_file(out, eval::to_csv(rows));
  return rows.size();
}

PredictorSummary predict_train_command(const RunConfig& config, const Progress& progress) {
  config.validate();
  prepare_output(config);
  const fs::path dir = config.output_dir;
  const auto samples = plan::harvest_crowd_samples(config.sim, config.predictor.scenario,
                                                   config.predictor.harvest_episodes, config.train.seed);
  if (progress) progress("harvested " + std::to_string(samples.size()) + " crowd transitions");
  const auto r = plan::train_crowd_predictor(samples, config.sim.time_step, config.predictor.train);

  PredictorSummary s;
  s.checkpoint = dir / kPredictorFile;
  rl::save_checkpoint(s.checkpoint, r.params, config_json(config), r.epoch_loss.size(), kPredictorKind);
  s.train_samples = r.train_samples;
  s.heldout_samples = r.heldout_samples;
  s.untrained_ade = r.untrained_ade;
  s.heldout_ade = r.heldout_ade;
  s.constant_velocity_ade = r.constant_velocity_ade;
  json report = {{"train_samples", s.train_samples},
                 {"heldout_samples", s.heldout_samples},
                 {"untrained_ade", s.untrained_ade},
                 {"heldout_ade", s.heldout_ade},
                 {"constant_velocity_ade", s.constant_velocity_ade},
                 {"epoch_loss", r.epoch_loss}};
  eval::write_text_file(dir / kPredictorReportFile, report.dump(2) + "\n");
  write_run_record(config, "predict-train", s.checkpoint.string(), rl::file_hash(s.checkpoint));
  return s;
}

}  // namespace sgdqn::app

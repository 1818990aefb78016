// Command-line front end. Talks to the library only through sgdqn.h.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sgdqn/sgdqn.h"

namespace {

struct Failure {
  sgdqn_status status;
  std::string message;
};

void check(sgdqn_status s) {
  if (s != SGDQN_OK) throw Failure{s, sgdqn_last_error()};
}

using ConfigPtr = std::unique_ptr<sgdqn_config, decltype(&sgdqn_config_destroy)>;

// Options every command accepts.
struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "INI file layered over the built-in defaults")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", c.sets, "Override any key, e.g. --set train.gamma=0.95 (repeatable)");
  cmd->add_option("-o,--output", c.output, "Output directory (run.output_dir)");
  cmd->add_option("--seed", c.seed, "Run seed (run.seed)");
}

void set(sgdqn_config* cfg, const std::string& key, const std::string& value) {
  check(sgdqn_config_set(cfg, key.c_str(), value.c_str()));
}

template <class T>
void set_if(sgdqn_config* cfg, const std::string& key, const std::optional<T>& v) {
  if (!v) return;
  if constexpr (std::is_same_v<T, std::string>) {
    set(cfg, key, *v);
  } else {
    set(cfg, key, std::to_string(*v));
  }
}

// Defaults, then the file, then --set, then the dedicated flags.
ConfigPtr build_config(const Common& c) {
  sgdqn_config* raw = nullptr;
  check(sgdqn_config_create(&raw));
  ConfigPtr cfg(raw, &sgdqn_config_destroy);
  if (!c.config_path.empty()) check(sgdqn_config_load(cfg.get(), c.config_path.c_str()));
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Failure{SGDQN_ERR_INVALID_ARGUMENT, "--set expects key=value, got '" + kv + "'"};
    set(cfg.get(), kv.substr(0, eq), kv.substr(eq + 1));
  }
  set_if(cfg.get(), "run.output_dir", c.output);
  set_if(cfg.get(), "run.seed", c.seed);
  return cfg;
}

std::string get(const sgdqn_config* cfg, const char* key) {
  size_t n = 0;
  check(sgdqn_config_get(cfg, key, nullptr, 0, &n));
  std::string s(n + 1, '\0');
  check(sgdqn_config_get(cfg, key, s.data(), s.size(), &n));
  s.resize(n);
  return s;
}

void print_line(const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

void print_metrics(const std::string& policy, const sgdqn_metrics& m) {
  std::printf("%-8s %6s %8s %9s %8s %9s %9s %9s %12s\n", "policy", "cases", "success", "collision", "timeout",
              "nav_time", "disc_rate", "return", "run_time_ms");
  std::printf("%-8s %6zu %8.3f %9.3f %8.3f %9.2f %9.3f %9.4f %12.3f\n", policy.c_str(), m.cases, m.success,
              m.collision, m.timeout, m.nav_time, m.disc_rate, m.avg_return, m.run_time_ms);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crowd navigation with graph value networks and rollout planning"};
  app.set_version_flag("--version", std::string(sgdqn_version()));
  app.require_subcommand(1);
  app.footer(
      "Precedence: dedicated flags > --set > --config file > built-in defaults.\n"
      "Every run writes config.ini (fully resolved) and run.json into its output directory.");

  Common common;

  auto* train = app.add_subcommand("train", "Train the value network");
  add_common(train, common);
  std::optional<std::size_t> episodes;
  std::optional<std::string> train_scenario;
  train->add_option("--episodes", episodes, "Training episodes (train.episodes)");
  train->add_option("--scenario", train_scenario, "simple or complex (train.scenario)");

  // Shared by the commands that run a policy.
  std::string checkpoint;
  std::optional<std::string> policy, scenario, model, predictor;
  std::optional<std::size_t> cases, depth, width;
  std::optional<std::uint64_t> suite_seed;
  auto add_policy = [&](CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint, "Q-network checkpoint (not needed for orca)");
    cmd->add_option("--policy", policy, "orca, dqn or sgdqn (eval.policy); dqn forces depth 0");
    cmd->add_option("--scenario", scenario, "simple or complex (eval.scenario)");
    cmd->add_option("--suite-seed", suite_seed, "First scenario seed of the suite (eval.seed)");
    cmd->add_option("--depth", depth, "Lookahead depth d (planner.depth)");
    cmd->add_option("--width", width, "Candidates per node k (planner.width)");
    cmd->add_option("--model", model, "constant_velocity or learned (planner.model)");
    cmd->add_option("--predictor", predictor, "Learned crowd predictor checkpoint (planner.predictor_checkpoint)");
  };

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a policy on a seeded test suite");
  add_common(evaluate, common);
  add_policy(evaluate);
  evaluate->add_option("--cases", cases, "Number of test cases (eval.cases)");
  bool do_export = false;
  evaluate->add_flag("--export", do_export, "Also write per-case trajectories and initial-state attention");

  auto* traj = app.add_subcommand("export-traj", "Write one test case's trajectory as CSV");
  add_common(traj, common);
  add_policy(traj);
  std::size_t case_index = 0;
  std::string out_path;
  traj->add_option("--case", case_index, "Case index within the suite");
  traj->add_option("--out", out_path, "CSV destination")->required();

  auto* attn = app.add_subcommand("inspect-attention", "Write attention weights at one step of a test case");
  add_common(attn, common);
  add_policy(attn);
  std::size_t step = 0;
  attn->add_option("--case", case_index, "Case index within the suite");
  attn->add_option("--step", step, "Steps to simulate before reading the attention");
  attn->add_option("--out", out_path, "CSV destination")->required();

  auto* pred = app.add_subcommand("predict-train", "Train the learned one-step crowd predictor");
  add_common(pred, common);
  std::optional<std::size_t> harvest, epochs;
  pred->add_option("--episodes", harvest, "Episodes of crowd motion to record (predictor.harvest_episodes)");
  pred->add_option("--epochs", epochs, "Training epochs (predictor.epochs)");

  CLI11_PARSE(app, argc, argv);

  try {
    ConfigPtr cfg = build_config(common);
    sgdqn_config* c = cfg.get();
    set_if(c, "eval.policy", policy);
    set_if(c, "eval.scenario", scenario);
    set_if(c, "eval.seed", suite_seed);
    set_if(c, "eval.cases", cases);
    set_if(c, "planner.depth", depth);
    set_if(c, "planner.width", width);
    set_if(c, "planner.model", model);
    set_if(c, "planner.predictor_checkpoint", predictor);
    set_if(c, "train.episodes", episodes);
    set_if(c, "train.scenario", train_scenario);
    set_if(c, "predictor.harvest_episodes", harvest);
    set_if(c, "predictor.epochs", epochs);
    check(sgdqn_config_validate(c));
    const char* ckpt = checkpoint.empty() ? nullptr : checkpoint.c_str();

    if (*train) {
      sgdqn_train_result r{};
      check(sgdqn_train(c, print_line, nullptr, &r));
      std::printf("trained %zu episodes; checkpoint hash %s; artifacts in %s\n", r.episodes, r.checkpoint_hash,
                  get(c, "run.output_dir").c_str());
      if (r.has_validation) {
        std::printf("last validation: success %.3f collision %.3f\n", r.last_success, r.last_collision);
      }
      if (r.selected_episode > 0) {
        std::printf("checkpoint holds the episode %zu parameters (validation success %.3f)\n", r.selected_episode,
                    r.selected_success);
      }
    } else if (*evaluate) {
      sgdqn_metrics m{};
      check(sgdqn_evaluate(c, ckpt, do_export, do_export && get(c, "eval.policy") != "orca", &m));
      print_metrics(get(c, "eval.policy"), m);
      std::printf("metrics in %s\n", get(c, "run.output_dir").c_str());
    } else if (*traj) {
      std::size_t rows = 0;
      check(sgdqn_export_trajectory(c, ckpt, case_index, out_path.c_str(), &rows));
      std::printf("wrote %zu rows to %s\n", rows, out_path.c_str());
    } else if (*attn) {
      std::size_t rows = 0;
      check(sgdqn_inspect_attention(c, ckpt, case_index, step, out_path.c_str(), &rows));
      std::printf("wrote %zu rows to %s\n", rows, out_path.c_str());
    } else if (*pred) {
      sgdqn_predictor_result r{};
      check(sgdqn_predict_train(c, print_line, nullptr, &r));
      std::printf("samples %zu train / %zu held out\n", r.train_samples, r.heldout_samples);
      std::printf("held-out ADE: untrained %.4f  trained %.4f  constant-velocity %.4f\n", r.untrained_ade,
                  r.heldout_ade, r.constant_velocity_ade);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error (%s): %s\n", sgdqn_status_string(f.status), f.message.c_str());
    return 1;
  }
  return 0;
}

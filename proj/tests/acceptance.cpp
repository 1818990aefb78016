// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sgdqn/app/commands.hpp"
#include "sgdqn/eval/evaluation.hpp"
#include "sgdqn/eval/exports.hpp"
#include "sgdqn/net/network.hpp"
#include "sgdqn/plan/planner.hpp"
#include "sgdqn/rl/checkpoint.hpp"
#include "sgdqn/rl/schedule.hpp"
#include "sgdqn/sim/reward.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/states.hpp"

using namespace sgdqn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::current_path() / "acceptance_artifacts";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

double default_discount() {
  const sim::SimConfig s;
  return rl::discount_factor_per_step(0.9, s.time_step, s.robot_preferred_speed);
}

// ---------------------------------------------------------------- 1

test::LossBuilder q_loss(const std::vector<sim::JointState>& states, const ad::Tensor& w) {
  return [&states, &w](net::ParameterBinder& bind) {
    std::vector<const sim::JointState*> ptrs;
    for (const auto& s : states) ptrs.push_back(&s);
    ad::Var q = net::forward(bind, net::make_graph_batch(ptrs)).head.q;
    return ad::sum(ad::matmul(ad::reshape(q, 1, q.shape().size()), bind.tape().constant(w)));
  };
}

Outcome gradients() {
  double worst_net = 0.0, worst_pred = 0.0;
  std::string worst_net_at;
  std::size_t coords = 0, kinks = 0;
  constexpr int kSeeds = 20;
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const std::size_t n = 1 + seed % 8;

    auto p = net::make_network_parameters(seed);
    std::vector<sim::JointState> states{test::random_centric_state(rng, n), test::random_centric_state(rng, n)};
    ad::Tensor w(2 * sim::kNumActions, 1);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (double& v : w.values()) v = nd(rng);
    const auto r = test::check_gradients(p, q_loss(states, w), test::sampled_coordinates(p, 24, rng));
    if (r.max_relative_error > worst_net) {
      worst_net = r.max_relative_error;
      worst_net_at = fmt("seed %d %s analytic %.6e numeric %.6e", seed, r.worst.c_str(), r.worst_analytic,
                         r.worst_numeric);
    }
    coords += r.checked;
    kinks += r.kink_retries;

    auto pp = plan::make_predictor_parameters(seed);
    std::vector<plan::CrowdSample> data(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& c : data) {
      c.state = test::random_centric_state(rng, n);
      for (std::size_t k = 0; k < n; ++k) c.next_velocities.push_back({u(rng), u(rng)});
    }
    std::vector<const plan::CrowdSample*> ptrs;
    for (const auto& c : data) ptrs.push_back(&c);
    const test::LossBuilder loss = [&](net::ParameterBinder& bind) { return plan::predictor_loss(bind, ptrs); };
    const auto rp = test::check_gradients(pp, loss, test::all_coordinates(pp));
    worst_pred = std::max(worst_pred, rp.max_relative_error);
    coords += rp.checked;
    kinks += rp.kink_retries;
  }
  return {worst_net <= 1e-4 && worst_pred <= 1e-4,
          fmt("%d seeds, %zu coordinates; max rel. error network %.2e (%s), predictor %.2e (limit 1e-4; %zu "
              "coordinates needed a smaller step near ReLU kinks)",
              kSeeds, coords, worst_net, worst_net_at.c_str(), worst_pred, kinks)};
}

// ---------------------------------------------------------------- 2

Outcome rewards() {
  const sim::SimConfig c;
  auto state = [](Vec2 robot, std::vector<Vec2> peds) {
    sim::JointState s;
    s.robot.position = robot;
    s.robot.goal = {0.0, 4.0};
    for (auto p : peds) s.pedestrians.push_back({p, {}, 0.3});
    return s;
  };
  bool ok = true;
  std::string detail;

  // Goal: ends 0.15 m from the goal, pedestrian far away.
  const auto g = sim::compute_reward(state({0, 3.6}, {{5, 5}}), state({0, 3.85}, {{5, 5}}),
                                     std::vector<double>{7.0}, c.time_step, c);
  ok &= std::fabs(g.reward.goal - 10.0) <= 1e-12 && g.status == sim::EpisodeStatus::reached_goal;
  detail += fmt("r_g=%.15g ", g.reward.goal);

  // Collision: separation 0.5 < 0.6.
  const auto k = sim::compute_reward(state({0, 0}, {{0.5, 0}}), state({0, 0.25}, {{0.5, 0.25}}),
                                     std::vector<double>{0.5}, c.time_step, c);
  ok &= std::fabs(k.reward.collision - (-2.5)) <= 1e-12 && k.status == sim::EpisodeStatus::collision;
  detail += fmt("r_c=%.15g ", k.reward.collision);

  // Discomfort: surface gap 0.1 with dt 0.25.
  const auto d = sim::compute_reward(state({0, 0}, {{0.7, 0}}), state({0, 0.25}, {{0.7, 0.25}}),
                                     std::vector<double>{0.7}, c.time_step, c);
  const double expect_s = c.time_step * (0.1 - 0.2) / 2.0;
  ok &= std::fabs(d.reward.discomfort - expect_s) <= 1e-12 && std::fabs(expect_s + 0.0125) <= 1e-12;
  detail += fmt("R_s=%.15g ", d.reward.discomfort);

  // Progress shaping: 0.25 m closer, nobody near.
  const auto pr = sim::compute_reward(state({0, 0}, {{5, 5}}), state({0, 0.25}, {{5, 5}}),
                                      std::vector<double>{7.0}, c.time_step, c);
  ok &= std::fabs(pr.reward.total() - 0.025) <= 1e-12;
  detail += fmt("progress=%.15g", pr.reward.total());
  return {ok, detail + " (tolerance 1e-12)"};
}

// ---------------------------------------------------------------- 3

Outcome refinement_identities() {
  const sim::SimConfig config;
  plan::ConstantVelocityModel cv;
  plan::EnvironmentModel model(cv, config);
  const double discount = default_discount();
  std::size_t d0_mismatch = 0, k1_mismatch = 0;
  constexpr int kStates = 1000;
  std::mt19937_64 rng(2024);
  ad::ParameterSet params;
  for (int t = 0; t < kStates; ++t) {
    if (t % 100 == 0) params = net::make_network_parameters(500 + t);
    const auto s = test::random_centric_state(rng, 1 + t % 10);
    const auto coarse = net::q_values(params, s);
    const auto r0 = plan::refine_q(s, params, model, discount, {0, 10});
    for (std::size_t i = 0; i < r0.candidates.size(); ++i) {
      if (std::memcmp(&r0.refined[i], &coarse[r0.candidates[i]], sizeof(double)) != 0) {
        ++d0_mismatch;
        break;
      }
    }
    if (plan::plan_action(s, params, model, discount, {1, 1}).action != net::argmax(coarse)) ++k1_mismatch;
  }
  return {d0_mismatch == 0 && k1_mismatch == 0,
          fmt("%d random states: d=0 differs from coarse Q in %zu, k=1 differs from greedy in %zu", kStates,
              d0_mismatch, k1_mismatch)};
}

// ---------------------------------------------------------------- 4

Outcome orca_baseline() {
  const sim::SimConfig config;
  const auto t0 = std::chrono::steady_clock::now();
  eval::OrcaRobotPolicy policy(config);
  const auto r = eval::run_evaluation(policy, {sim::ScenarioKind::simple, 500, 0, std::nullopt}, config,
                                      default_discount());
  const double elapsed = seconds_since(t0);
  const auto& m = r.metrics;
  return {std::fabs(m.success - 0.824) <= 0.08 && m.collision > 0.0 && elapsed < 300.0,
          fmt("500 simple cases: success %.3f (target 0.824 +- 0.08), collision %.3f, timeout %.3f, %.1f s", m.success,
              m.collision, m.timeout, elapsed)};
}

// ---------------------------------------------------------------- 5, 6, 7

RunConfig acceptance_training_config() {
  RunConfig c;
  c.train.episodes = 3000;
  // Reduced-scale schedule: more frequent target syncs, several small
  // gradient steps per episode and a shorter exploration decay.
  c.train.target_update_interval = 100;
  c.train.validation_interval = 100;
  c.train.gradient_steps = 20;
  c.train.learning_rate = 1e-4;
  c.train.epsilon.decay_episodes = 1000;
  c.train.scenario = sim::ScenarioKind::simple;
  c.train.seed = 0;
  c.output_dir = (work_dir() / "train").string();
  return c;
}

struct Trained {
  fs::path checkpoint;
  std::vector<rl::ValidationRecord> validations;
  std::optional<rl::ValidationRecord> selected;
  double seconds = 0.0;
};

const Trained& trained() {
  static const Trained t = [] {
    const RunConfig c = acceptance_training_config();
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = app::train_command(c, [](const std::string& line) {
      if (line.starts_with("validation")) std::printf("      %s\n", line.c_str());
      std::fflush(stdout);
    });
    Trained out;
    out.checkpoint = s.checkpoint;
    out.selected = s.selected_validation;
    out.seconds = seconds_since(t0);
    // Validation history as written to disk.
    const auto text = eval::read_text_file(fs::path(c.output_dir) / app::kValidationFile);
    std::size_t pos = text.find('\n') + 1;
    while (pos < text.size()) {
      const auto end = text.find('\n', pos);
      rl::ValidationRecord v;
      std::sscanf(text.substr(pos, end - pos).c_str(), "%zu,%lf,%lf,%lf,%lf", &v.episode, &v.success_rate,
                  &v.collision_rate, &v.timeout_rate, &v.avg_return);
      out.validations.push_back(v);
      pos = end + 1;
    }
    return out;
  }();
  return t;
}

eval::Metrics evaluate_on(eval::Policy& policy, const eval::TestSuite& suite) {
  const sim::SimConfig config;
  return eval::run_evaluation(policy, suite, config, default_discount()).metrics;
}

std::unique_ptr<eval::NetworkPolicy> network_policy(const std::string& name, std::size_t depth, std::size_t width) {
  const sim::SimConfig config;
  return std::make_unique<eval::NetworkPolicy>(name, rl::load_checkpoint(trained().checkpoint).params,
                                               std::make_shared<plan::ConstantVelocityModel>(), config,
                                               default_discount(), plan::RolloutConfig{depth, width, false});
}

// The validation suite used during training.
eval::TestSuite validation_suite() {
  const RunConfig c = acceptance_training_config();
  return {sim::ScenarioKind::simple, c.train.validation_episodes, c.train.validation_seed, std::nullopt};
}

struct Comparison {
  eval::Metrics orca, dqn, sgdqn;
};

const Comparison& paired_metrics() {
  static const Comparison c = [] {
    Comparison out;
    const auto suite = validation_suite();
    eval::OrcaRobotPolicy orca{sim::SimConfig{}};
    out.orca = evaluate_on(orca, suite);
    out.dqn = evaluate_on(*network_policy("dqn", 0, 10), suite);
    out.sgdqn = evaluate_on(*network_policy("sgdqn", 1, 10), suite);
    return out;
  }();
  return c;
}

Outcome training_outcome() {
  const auto& t = trained();
  if (!t.selected) return {false, "training produced no validation records"};
  const auto& m = paired_metrics();
  // The checkpoint replayed greedily must reproduce the validation it was
  // selected on.
  const bool replayed = m.dqn.success == t.selected->success_rate;
  const double success = t.selected->success_rate;
  const bool primary = replayed && success >= 0.85 && success > m.orca.success;
  const bool ordering = m.sgdqn.success > m.dqn.success && m.dqn.success > m.orca.success;
  std::string history;
  for (const auto& v : t.validations) history += fmt(" %zu:%.2f", v.episode, v.success_rate);
  return {primary,
          fmt("3000 episodes in %.0f s; checkpoint from episode %zu, validation success %.3f (need >= 0.85, "
              "greedy replay %.3f) vs ORCA %.3f on the same %zu cases; ordering SG-DQN %.3f / DQN %.3f / ORCA %.3f "
              "%s; final validation %.3f; history%s",
              t.seconds, t.selected->episode, success, m.dqn.success, m.orca.success, validation_suite().cases,
              m.sgdqn.success, m.dqn.success, m.orca.success, ordering ? "holds" : "does not hold",
              t.validations.back().success_rate, history.c_str())};
}

Outcome lookahead_no_worse() {
  const sim::SimConfig config;
  const eval::TestSuite suite{sim::ScenarioKind::simple, 500, 0, std::nullopt};
  const auto dqn = evaluate_on(*network_policy("dqn", 0, 10), suite);
  const auto sg = evaluate_on(*network_policy("sgdqn", 1, 10), suite);
  return {sg.success >= dqn.success && sg.avg_return >= dqn.avg_return - 0.05,
          fmt("500 simple cases, same checkpoint: SG-DQN(d=1,k=10) success %.3f return %.4f; DQN success %.3f return "
              "%.4f",
              sg.success, sg.avg_return, dqn.success, dqn.avg_return)};
}

Outcome decision_time_ratio() {
  const sim::SimConfig config;
  // Observations visited by the greedy policy on a few cases.
  std::vector<sim::JointState> states;
  {
    auto dqn = network_policy("dqn", 0, 10);
    const auto actions = sim::build_action_space(config.robot_preferred_speed);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      sim::World w = sim::generate_scenario(sim::ScenarioSpec::make(sim::ScenarioKind::simple, 7000 + seed, config),
                                            config);
      while (w.status == sim::EpisodeStatus::running) {
        states.push_back(w.joint_state());
        sim::step_episode(w, actions[dqn->decide(w.joint_state())], config);
      }
    }
  }
  auto d0 = network_policy("dqn", 0, 10);
  auto d1 = network_policy("sgdqn", 1, 10);
  double t0_total = 0.0, t1_total = 0.0;
  std::size_t sink = 0;
  for (int rep = 0; rep < 5; ++rep) {  // interleaved to share any drift
    auto a = std::chrono::steady_clock::now();
    for (const auto& s : states) sink += d0->decide(s);
    t0_total += seconds_since(a);
    a = std::chrono::steady_clock::now();
    for (const auto& s : states) sink += d1->decide(s);
    t1_total += seconds_since(a);
  }
  const double n = 5.0 * static_cast<double>(states.size());
  const double ms0 = 1e3 * t0_total / n, ms1 = 1e3 * t1_total / n;
  const double ratio = ms1 / ms0;
  return {ratio >= 5.0 && ratio <= 15.0,
          fmt("%zu states x 5: d=0 %.3f ms, d=1 k=10 %.3f ms per decision, ratio %.2f (need 5-15) [%zu]",
              states.size(), ms0, ms1, ratio, sink % 2)};
}

// ---------------------------------------------------------------- 8

Outcome separation_and_crowd() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> pos(-2.0, 2.0), vel(-2.0, 2.0);
  double worst = 0.0;
  constexpr int kInstances = 100000;
  for (int i = 0; i < kInstances; ++i) {
    const Vec2 pa{pos(rng), pos(rng)}, va{vel(rng), vel(rng)}, pb{pos(rng), pos(rng)}, vb{vel(rng), vel(rng)};
    const double exact = sim::min_separation(pa, va, pb, vb, 0.25);
    worst = std::max(worst, std::fabs(exact - test::sampled_min_separation(pa, va, pb, vb, 0.25, 10000)));
  }
  const sim::SimConfig config;
  int clean = 0;
  constexpr int kEpisodes = 500;
  for (int s = 0; s < kEpisodes; ++s) {
    const auto w = sim::generate_scenario(sim::ScenarioSpec::make(sim::ScenarioKind::simple, s, config), config);
    clean += test::pedestrian_only_episode_collision_free(w, config);
  }
  const double rate = static_cast<double>(clean) / kEpisodes;
  return {worst <= 1e-3 && rate >= 0.99,
          fmt("min_separation vs 10^4-sample oracle on %d instances: max diff %.2e (limit 1e-3); pedestrian-only ORCA "
              "collision-free in %d/%d episodes (%.3f, need >= 0.99)",
              kInstances, worst, clean, kEpisodes, rate)};
}

// ---------------------------------------------------------------- 9

Outcome determinism() {
  auto run = [](const std::string& tag) {
    RunConfig c;
    c.train.episodes = 300;
    c.train.validation_interval = 150;
    c.train.validation_episodes = 20;
    c.train.seed = 11;
    c.output_dir = (work_dir() / ("determinism_" + tag)).string();
    app::train_command(c);
    RunConfig e = c;
    e.eval.policy = PolicyKind::sgdqn;
    e.eval.cases = 50;
    e.eval.seed = 7;
    e.output_dir = (work_dir() / ("determinism_eval_" + tag)).string();
    app::EvaluateOptions o;
    o.checkpoint = (fs::path(c.output_dir) / app::kCheckpointFile).string();
    app::evaluate_command(e, o);
    return std::make_pair(fs::path(c.output_dir), fs::path(e.output_dir));
  };
  const auto [ta, ea] = run("a");
  const auto [tb, eb] = run("b");
  std::vector<std::string> differing;
  for (const char* f : {app::kTrainingLogFile, app::kValidationFile, app::kCheckpointFile}) {
    if (eval::read_text_file(ta / f) != eval::read_text_file(tb / f)) differing.push_back(f);
  }
  for (const char* f : {app::kMetricsJsonFile, app::kMetricsTableFile, app::kEpisodesFile}) {
    if (eval::read_text_file(ea / f) != eval::read_text_file(eb / f)) differing.push_back(f);
  }
  std::string which;
  for (const auto& d : differing) which += " " + d;
  return {differing.empty(), differing.empty()
                                 ? "300-episode training plus 50-case SG-DQN evaluation, run twice: training log, "
                                   "validation log, checkpoint and metric files byte-identical"
                                 : "files differ:" + which};
}

// ---------------------------------------------------------------- 10

Outcome relabeling() {
  std::mt19937_64 rng(10);
  double worst = 0.0;
  constexpr int kTrials = 1000;
  ad::ParameterSet params;
  for (int t = 0; t < kTrials; ++t) {
    if (t % 50 == 0) params = net::make_network_parameters(900 + t);
    const auto s = test::random_centric_state(rng, 2 + t % 9);
    auto shuffled = s;
    std::shuffle(shuffled.pedestrians.begin(), shuffled.pedestrians.end(), rng);
    const auto a = net::q_values(params, s);
    const auto b = net::q_values(params, shuffled);
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
  }
  return {worst <= 1e-9, fmt("%d trials, max |dq| under pedestrian permutation %.2e (limit 1e-9)", kTrials, worst)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "finite-difference gradients", gradients},
      {2, "reward table", rewards},
      {3, "refinement base cases", refinement_identities},
      {4, "ORCA robot baseline", orca_baseline},
      {8, "min-separation oracle and pedestrian ORCA", separation_and_crowd},
      {10, "relabeling invariance", relabeling},
      {9, "bit-identical reruns", determinism},
      {5, "training outcome", training_outcome},
      {6, "lookahead no worse than greedy", lookahead_no_worse},
      {7, "decision-time ratio", decision_time_ratio},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] criterion %d, %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}

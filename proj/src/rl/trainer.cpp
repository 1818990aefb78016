#include "sgdqn/rl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <string>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "sgdqn/errors.hpp"
#include "sgdqn/seeding.hpp"

namespace sgdqn::rl {
namespace {

// Indices of the batch grouped by pedestrian count, in first-seen order of
// counts so the result does not depend on map ordering quirks.
std::vector<std::vector<std::size_t>> group_by_crowd_size(std::span<const Transition* const> batch) {
  std::map<std::size_t, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t n = batch[i]->state.pedestrians.size();
    auto [it, inserted] = slot.try_emplace(n, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

// Builds the loss on `tape`; online parameters are bound through `bind`.
ad::Var squared_td_error(net::ParameterBinder& bind, std::span<const Transition* const> batch,
                         std::span<const double> targets) {
  ad::Tape& tape = bind.tape();
  ad::Var total{};
  bool first = true;
  for (const auto& group : group_by_crowd_size(batch)) {
    std::vector<const sim::JointState*> states;
    std::vector<std::size_t> actions;
    ad::Tensor y(group.size(), 1);
    for (std::size_t r = 0; r < group.size(); ++r) {
      states.push_back(&batch[group[r]]->state);
      actions.push_back(batch[group[r]]->action);
      y(r, 0) = targets[group[r]];
    }
    ad::Var q = net::forward(bind, net::make_graph_batch(states)).head.q;
    ad::Var err = ad::sub(tape.constant(std::move(y)), ad::pick(q, actions));
    ad::Var part = ad::sum(ad::square(err));
    total = first ? part : ad::add(total, part);
    first = false;
  }
  return total;
}

// Tape tensors of a few MB are allocated and freed every update; glibc's
// default mmap threshold turns each into a syscall pair.
void keep_large_blocks_in_heap() {
#if defined(__GLIBC__)
  static const bool once = [] {
    mallopt(M_MMAP_THRESHOLD, 64 << 20);
    mallopt(M_TRIM_THRESHOLD, 256 << 20);
    return true;
  }();
  (void)once;
#endif
}

// Ties keep the earlier record.
bool better_validation(const ValidationRecord& v, const std::optional<ValidationRecord>& best) {
  if (!best) return true;
  if (v.success_rate != best->success_rate) return v.success_rate > best->success_rate;
  return v.avg_return > best->avg_return;
}

double mean_or_nan(double sum, std::size_t n) {
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

}  // namespace

std::string_view to_string(UpdateMode mode) {
  return mode == UpdateMode::per_episode ? "episode" : "step";
}

UpdateMode parse_update_mode(std::string_view text) {
  if (text == "episode") return UpdateMode::per_episode;
  if (text == "step") return UpdateMode::per_step;
  throw InvalidArgument("train.update_mode must be 'episode' or 'step', got '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw InvalidArgument(std::string("train.") + name + " must be positive");
  };
  positive(target_update_interval, "target_update");
  positive(replay_capacity, "replay_capacity");
  positive(batch_size, "batch_size");
  positive(validation_interval, "validation_interval");
  positive(log_window, "log_window");
  positive(epsilon.decay_episodes, "epsilon_decay_episodes");
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("train.gamma must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw InvalidArgument("train.learning_rate must be positive");
  for (double e : {epsilon.start, epsilon.end}) {
    if (e < 0.0 || e > 1.0) throw InvalidArgument("train.epsilon_start/epsilon_end must lie in [0, 1]");
  }
}

std::vector<double> td_targets(std::span<const Transition* const> batch, const ad::ParameterSet& target,
                               double discount) {
  std::vector<double> out(batch.size());
  for (const auto& group : group_by_crowd_size(batch)) {
    std::vector<const sim::JointState*> next;
    for (std::size_t i : group) next.push_back(&batch[i]->next_state);
    ad::Tape tape(ad::GradMode::disabled);
    net::ParameterBinder bind(tape, target);
    const ad::Tensor& q = net::forward(bind, net::make_graph_batch(next)).head.q.value();
    for (std::size_t r = 0; r < group.size(); ++r) {
      const Transition& t = *batch[group[r]];
      if (t.terminal) {
        out[group[r]] = t.reward;
        continue;
      }
      double best = q(r, 0);
      for (std::size_t a = 1; a < q.cols(); ++a) best = std::max(best, q(r, a));
      out[group[r]] = t.reward + discount * best;
    }
  }
  return out;
}

double td_target(const Transition& t, const ad::ParameterSet& target, double discount) {
  const Transition* one[] = {&t};
  return td_targets(one, target, discount)[0];
}

double batch_loss(std::span<const Transition* const> batch, const ad::ParameterSet& online,
                  const ad::ParameterSet& target, double discount) {
  if (batch.empty()) throw InvalidArgument("batch_loss: empty batch");
  const auto y = td_targets(batch, target, discount);
  ad::Tape tape(ad::GradMode::disabled);
  net::ParameterBinder bind(tape, online);
  return squared_td_error(bind, batch, y).value().item();
}

double train_step(std::span<const Transition* const> batch, ad::ParameterSet& online,
                  const ad::ParameterSet& target, ad::AdamState& adam, double discount) {
  if (batch.empty()) throw InvalidArgument("train_step: empty batch");
  const auto y = td_targets(batch, target, discount);
  online.set_requires_grad(true);
  online.zero_grad();
  ad::Tape tape;
  net::ParameterBinder bind(tape, online);
  ad::Var loss = squared_td_error(bind, batch, y);
  const double value = loss.value().item();
  tape.backward(loss);
  ad::adam_step(online, adam);
  return value;
}

std::size_t greedy_action(const ad::ParameterSet& params, const sim::JointState& observation) {
  return net::argmax(net::q_values(params, sim::to_robot_centric(observation)));
}

ValidationRecord validate_policy(const ad::ParameterSet& params, const TrainConfig& config,
                                 const sim::SimConfig& sim_config) {
  const auto actions = sim::build_action_space(sim_config.robot_preferred_speed);
  const double discount = discount_factor_per_step(config.gamma, sim_config.time_step,
                                                   sim_config.robot_preferred_speed);
  const Decide decide = [&](const sim::JointState& obs) { return greedy_action(params, obs); };
  std::size_t success = 0, collision = 0, timeout = 0;
  double returns = 0.0, nav = 0.0;
  for (std::size_t i = 0; i < config.validation_episodes; ++i) {
    sim::World world = sim::generate_scenario(
        sim::ScenarioSpec::make(config.scenario, config.validation_seed + i, sim_config), sim_config);
    const EpisodeStats s = play_episode(world, actions, decide, sim_config, discount);
    returns += s.discounted_return;
    switch (s.status) {
      case sim::EpisodeStatus::reached_goal: ++success; nav += s.time; break;
      case sim::EpisodeStatus::collision: ++collision; break;
      default: ++timeout; break;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(config.validation_episodes, 1));
  ValidationRecord r;
  r.success_rate = static_cast<double>(success) / n;
  r.collision_rate = static_cast<double>(collision) / n;
  r.timeout_rate = static_cast<double>(timeout) / n;
  r.avg_return = returns / n;
  r.nav_time = mean_or_nan(nav, success);
  return r;
}

TrainingResult run_training(const TrainConfig& config, const sim::SimConfig& sim_config,
                            const net::NetworkDims& dims, const TrainingHooks& hooks) {
  config.validate();
  sim_config.validate();
  keep_large_blocks_in_heap();
  const auto actions = sim::build_action_space(sim_config.robot_preferred_speed);
  const double discount = discount_factor_per_step(config.gamma, sim_config.time_step,
                                                   sim_config.robot_preferred_speed);

  TrainingResult result;
  ad::ParameterSet& online = result.params;
  online = net::make_network_parameters(derive_seed(config.seed, seed_stream::network_init, 0), dims);
  online.set_requires_grad(true);
  ad::ParameterSet target = online;
  target.set_requires_grad(false);
  ad::AdamState adam = ad::make_adam_state(online, config.learning_rate);

  ad::ParameterSet best;
  ReplayMemory replay(config.replay_capacity);
  std::mt19937_64 explore_rng(derive_seed(config.seed, seed_stream::exploration, 0));
  std::mt19937_64 sample_rng(derive_seed(config.seed, seed_stream::replay_sampling, 0));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_action(0, actions.size() - 1);

  std::deque<EpisodeStats> window;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  auto update = [&] {
    if (replay.size() < config.batch_size) return;
    for (std::size_t k = 0; k < config.gradient_steps; ++k) {
      const auto batch = replay.sample(config.batch_size, sample_rng);
      loss_sum += train_step(batch, online, target, adam, discount);
      ++loss_count;
    }
  };

  for (std::size_t e = 0; e < config.episodes; ++e) {
    if (hooks.on_episode_start) hooks.on_episode_start(e, online, target);
    const double eps = epsilon_at(e, config.epsilon);
    sim::World world = sim::generate_scenario(
        sim::ScenarioSpec::make(config.scenario,
                                derive_seed(config.seed, seed_stream::training_scenarios, e), sim_config),
        sim_config);
    loss_sum = 0.0;
    loss_count = 0;

    const Decide decide = [&](const sim::JointState& obs) -> std::size_t {
      if (coin(explore_rng) < eps) return any_action(explore_rng);
      return greedy_action(online, obs);
    };
    const StepObserver remember = [&](const sim::World& before, const sim::Action& action,
                                      const sim::StepOutcome& out) {
      Transition t;
      t.state = sim::to_robot_centric(before.joint_state());
      t.action = action.index;
      t.reward = out.reward.total();
      t.next_state = sim::to_robot_centric(out.next_state);
      t.terminal = out.status == sim::EpisodeStatus::reached_goal ||
                   out.status == sim::EpisodeStatus::collision ||
                   (config.timeout_terminal && out.status == sim::EpisodeStatus::timeout);
      if (hooks.on_transition) hooks.on_transition(t);
      replay.push(std::move(t));
      if (config.update_mode == UpdateMode::per_step) update();
    };
    const EpisodeStats stats = play_episode(world, actions, decide, sim_config, discount, remember);
    if (config.update_mode == UpdateMode::per_episode) update();

    window.push_back(stats);
    if (window.size() > config.log_window) window.pop_front();
    TrainingLogRow row;
    row.episode = e + 1;
    row.epsilon = eps;
    row.loss = mean_or_nan(loss_sum, loss_count);
    double nav = 0.0;
    std::size_t successes = 0, steps = 0, uncomfortable = 0;
    for (const auto& s : window) {
      row.avg_reward += s.total_reward;
      row.avg_return += s.discounted_return;
      steps += s.steps;
      uncomfortable += s.discomfort_steps;
      if (s.status == sim::EpisodeStatus::reached_goal) {
        nav += s.time;
        ++successes;
      }
    }
    row.avg_reward /= static_cast<double>(window.size());
    row.avg_return /= static_cast<double>(window.size());
    row.nav_time = mean_or_nan(nav, successes);
    row.disc_rate = steps == 0 ? 0.0 : static_cast<double>(uncomfortable) / static_cast<double>(steps);
    result.log.push_back(row);
    if (hooks.on_episode) hooks.on_episode(row);

    if ((e + 1) % config.target_update_interval == 0) {
      target.copy_values_from(online);
      if (hooks.on_target_sync) hooks.on_target_sync(e + 1, target);
    }
    if (config.validation_episodes > 0 && (e + 1) % config.validation_interval == 0) {
      ValidationRecord v = validate_policy(online, config, sim_config);
      v.episode = e + 1;
      result.validations.push_back(v);
      if (hooks.on_validation) hooks.on_validation(v);
      if (config.keep_best_validation && better_validation(v, result.selected)) {
        result.selected = v;
        best = online;
      }
    }
  }
  result.episodes = config.episodes;
  if (result.selected) online = std::move(best);
  return result;
}

}  // namespace sgdqn::rl

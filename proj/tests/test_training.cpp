#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "sgdqn/errors.hpp"
#include "sgdqn/rl/checkpoint.hpp"
#include "sgdqn/rl/trainer.hpp"
#include "support/states.hpp"

using namespace sgdqn;
using namespace sgdqn::rl;

namespace {

// Network whose every Q-value equals `value`: all weights zero except the
// value-stream bias.
ad::ParameterSet constant_q_network(double value) {
  auto p = net::make_network_parameters(0);
  for (auto& e : p.entries()) std::fill(e.tensor.values().begin(), e.tensor.values().end(), 0.0);
  p.at("dueling.value.bias").values()[0] = value;
  return p;
}

std::vector<Transition> random_transitions(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Transition> out;
  for (std::size_t i = 0; i < count; ++i) {
    Transition t;
    t.state = test::random_centric_state(rng, 5);
    t.next_state = test::random_centric_state(rng, 5);
    t.action = rng() % sim::kNumActions;
    t.reward = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    t.terminal = i % 4 == 0;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<const Transition*> pointers(const std::vector<Transition>& ts) {
  std::vector<const Transition*> out;
  for (const auto& t : ts) out.push_back(&t);
  return out;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

TrainConfig tiny_config() {
  TrainConfig c;
  c.episodes = 12;
  c.batch_size = 16;
  c.gradient_steps = 2;
  c.target_update_interval = 5;
  c.validation_interval = 6;
  c.validation_episodes = 3;
  c.seed = 17;
  return c;
}

}  // namespace

TEST_CASE("epsilon schedule") {
  CHECK(epsilon_at(0) == 0.5);
  CHECK(epsilon_at(2500) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(epsilon_at(5000) == 0.1);
  CHECK(epsilon_at(123456) == 0.1);
  for (std::size_t e = 0; e < 12000; e += 7) {
    CHECK(epsilon_at(e) >= 0.1);
    CHECK(epsilon_at(e) <= 0.5);
    CHECK(epsilon_at(e + 1) <= epsilon_at(e));
  }
}

TEST_CASE("per-step discount") {
  // Reference through long double logarithms, independent of std::pow.
  const long double ref = std::exp(0.25L * std::log(0.9L));
  const double d = discount_factor_per_step(0.9, 0.25, 1.0);
  CHECK(std::abs(static_cast<long double>(d) - ref) <= 1e-16L);
  CHECK(d == doctest::Approx(0.97400).epsilon(1e-5));
  CHECK(discount_factor_per_step(0.9, 0.5, 2.0) == 0.9);
  CHECK(discount_factor_per_step(0.9, 0.0, 1.0) == 1.0);
  CHECK_THROWS_AS(discount_factor_per_step(1.0, 0.25, 1.0), InvalidArgument);
}

TEST_CASE("replay memory is a bounded FIFO") {
  ReplayMemory m(1000);
  for (int i = 0; i < 2000; ++i) {
    Transition t;
    t.reward = i;
    m.push(t);
    CHECK(m.size() <= 1000);
  }
  CHECK(m.insertions() == 2000);
  for (std::size_t i = 0; i < 1000; ++i) CHECK(m.at(i).reward == 1000.0 + i);

  std::mt19937_64 rng(1);
  auto s = m.sample(100, rng);
  std::sort(s.begin(), s.end());
  CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
  CHECK(m.sample(5000, rng).size() == 1000);

  Transition bad;
  bad.action = 81;
  CHECK_THROWS_AS(m.push(bad), InvalidArgument);
  CHECK_THROWS_AS(ReplayMemory(0), InvalidArgument);

  ReplayMemory full(100000);
  for (int i = 0; i < 200000; ++i) {
    Transition t;
    t.reward = i;
    full.push(std::move(t));
  }
  CHECK(full.size() == 100000);
  CHECK(full.at(0).reward == 100000.0);
  CHECK(full.at(99999).reward == 199999.0);
}

TEST_CASE("TD targets") {
  auto ts = random_transitions(2, 3);
  SUBCASE("terminal transitions do not bootstrap") {
    ts[0].terminal = true;
    ts[0].reward = 10.0;
    CHECK(td_target(ts[0], constant_q_network(123.0), 0.974) == 10.0);
  }
  SUBCASE("bootstrap from the target maximum") {
    ts[1].terminal = false;
    ts[1].reward = 0.0;
    CHECK(td_target(ts[1], constant_q_network(2.0), 0.974) == doctest::Approx(1.948).epsilon(1e-15));
  }
  SUBCASE("targets use the maximum over actions") {
    auto p = constant_q_network(0.0);
    p.at("dueling.advantage.bias").values()[17] = 3.0;
    ts[1].terminal = false;
    ts[1].reward = 1.0;
    CHECK(td_target(ts[1], p, 0.5) == doctest::Approx(2.5).epsilon(1e-15));
  }
}

TEST_CASE("train_step") {
  const auto ts = random_transitions(24, 5);
  const auto batch = pointers(ts);
  const double discount = 0.974;

  SUBCASE("empty batch is rejected") {
    auto online = net::make_network_parameters(1);
    auto adam = ad::make_adam_state(online, 5e-4);
    std::vector<const Transition*> none;
    CHECK_THROWS_AS(train_step(none, online, online, adam, discount), InvalidArgument);
  }
  SUBCASE("single transition loss is the squared TD error") {
    auto online = net::make_network_parameters(1);
    const auto target = net::make_network_parameters(2);
    auto adam = ad::make_adam_state(online, 5e-4);
    const Transition& t = ts[1];
    const auto next_q = net::q_values(target, t.next_state);
    const double y =
        t.terminal ? t.reward : t.reward + discount * *std::max_element(next_q.begin(), next_q.end());
    const double q = net::q_values(online, t.state)[t.action];
    const Transition* one[] = {&t};
    const double loss = train_step(one, online, target, adam, discount);
    CHECK(loss == doctest::Approx((y - q) * (y - q)).epsilon(1e-12));
    CHECK(net::q_values(online, t.state)[t.action] != q);
  }
  SUBCASE("target independent of the online network") {
    const auto target = net::make_network_parameters(2);
    const auto before = td_targets(batch, target, discount);
    auto online = net::make_network_parameters(1);
    auto adam = ad::make_adam_state(online, 1e-2);
    train_step(batch, online, target, adam, discount);
    CHECK(td_targets(batch, target, discount) == before);
  }
  SUBCASE("online already equal to targets gives zero loss and no change") {
    auto online = constant_q_network(1.5);
    auto terminal = ts;
    for (auto& t : terminal) {
      t.terminal = true;
      t.reward = 1.5;
    }
    const auto tb = pointers(terminal);
    auto adam = ad::make_adam_state(online, 5e-4);
    const auto fp = online.fingerprint();
    CHECK(train_step(tb, online, online, adam, discount) == 0.0);
    CHECK(online.fingerprint() == fp);
  }
  SUBCASE("loss on a frozen default-size batch falls for 50 steps") {
    const auto frozen = random_transitions(100, 6);
    const auto batch = pointers(frozen);
    auto online = net::make_network_parameters(4);
    const auto target = net::make_network_parameters(5);
    auto adam = ad::make_adam_state(online, 5e-4);
    double previous = batch_loss(batch, online, target, discount);
    int decreases = 0;
    for (int step = 0; step < 50; ++step) {
      const double before = train_step(batch, online, target, adam, discount);
      CHECK(before >= 0.0);
      CHECK(before == doctest::Approx(previous).epsilon(1e-12));
      const double after = batch_loss(batch, online, target, discount);
      decreases += after < before ? 1 : 0;
      previous = after;
    }
    CHECK(decreases == 50);
  }
  SUBCASE("mixed crowd sizes are grouped") {
    auto mixed = random_transitions(4, 9);
    std::mt19937_64 rng(2);
    mixed[1].state = test::random_centric_state(rng, 3);
    mixed[1].next_state = test::random_centric_state(rng, 3);
    const auto online = net::make_network_parameters(1);
    const auto target = net::make_network_parameters(2);
    double expected = 0.0;
    for (const auto& t : mixed) {
      const Transition* one[] = {&t};
      expected += batch_loss(one, online, target, discount);
    }
    CHECK(batch_loss(pointers(mixed), online, target, discount) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("target network syncs only every C episodes") {
  const TrainConfig config = tiny_config();
  std::vector<std::uint64_t> target_prints;
  std::vector<std::size_t> syncs;
  TrainingHooks hooks;
  hooks.on_episode_start = [&](std::size_t, const ad::ParameterSet&, const ad::ParameterSet& target) {
    target_prints.push_back(target.fingerprint());
  };
  hooks.on_target_sync = [&](std::size_t e, const ad::ParameterSet&) { syncs.push_back(e); };
  run_training(config, sim::SimConfig{}, {}, hooks);
  CHECK(syncs == std::vector<std::size_t>{5, 10});
  for (std::size_t e = 1; e < target_prints.size(); ++e) {
    if (e % 5 == 0) {
      CHECK(target_prints[e] != target_prints[e - 1]);
    } else {
      CHECK(target_prints[e] == target_prints[e - 1]);
    }
  }
}

TEST_CASE("pure exploration is uniform over the action set") {
  TrainConfig config;
  config.episodes = 120;
  config.epsilon = {1.0, 1.0, 1};
  config.batch_size = 1000000;  // never updates
  config.validation_episodes = 0;
  std::vector<std::size_t> counts(sim::kNumActions, 0);
  std::size_t total = 0;
  TrainingHooks hooks;
  hooks.on_transition = [&](const Transition& t) {
    ++counts[t.action];
    ++total;
  };
  run_training(config, sim::SimConfig{}, {}, hooks);
  REQUIRE(total > 8100);
  const double expected = static_cast<double>(total) / sim::kNumActions;
  double chi2 = 0.0;
  for (std::size_t c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 80 degrees of freedom, p = 0.001 critical value.
  CHECK(chi2 < 124.84);
}

TEST_CASE("best validation is what training returns") {
  TrainConfig config = tiny_config();
  config.episodes = 18;
  config.validation_interval = 3;
  std::vector<std::pair<ValidationRecord, std::uint64_t>> seen;
  ad::ParameterSet last;
  TrainingHooks hooks;
  // Validation runs on the online network right after the episode; the
  // next episode start sees the same parameters.
  std::size_t pending = 0;
  hooks.on_validation = [&](const ValidationRecord& v) {
    seen.push_back({v, 0});
    pending = v.episode;
  };
  hooks.on_episode_start = [&](std::size_t e, const ad::ParameterSet& online, const ad::ParameterSet&) {
    if (pending != 0 && e == pending) seen.back().second = online.fingerprint();
  };
  const auto result = run_training(config, sim::SimConfig{}, {}, hooks);
  REQUIRE(seen.size() == 6);
  REQUIRE(result.selected.has_value());
  auto best = seen.front();
  for (const auto& s : seen) {
    const auto& v = s.first;
    if (v.success_rate > best.first.success_rate ||
        (v.success_rate == best.first.success_rate && v.avg_return > best.first.avg_return)) {
      best = s;
    }
  }
  CHECK(result.selected->episode == best.first.episode);
  if (best.first.episode < config.episodes) CHECK(result.params.fingerprint() == best.second);

  config.keep_best_validation = false;
  const auto plain = run_training(config, sim::SimConfig{});
  CHECK_FALSE(plain.selected.has_value());
  CHECK(plain.validations.size() == 6);
}

TEST_CASE("time-limit endings and the terminal flag") {
  TrainConfig config;
  config.episodes = 40;
  config.epsilon = {1.0, 1.0, 1};
  config.batch_size = 1000000;
  config.validation_episodes = 0;
  sim::SimConfig sim_config;
  sim_config.time_limit = 0.5;  // two steps, far too short to arrive
  auto terminal_count = [&](bool flag) {
    config.timeout_terminal = flag;
    std::size_t n = 0;
    TrainingHooks hooks;
    hooks.on_transition = [&](const Transition& t) { n += t.terminal ? 1 : 0; };
    run_training(config, sim_config, {}, hooks);
    return n;
  };
  // Every episode ends exactly once, so each contributes one terminal.
  CHECK(terminal_count(true) == config.episodes);
  CHECK(terminal_count(false) < config.episodes);
}

TEST_CASE("training is deterministic") {
  const TrainConfig config = tiny_config();
  const auto a = run_training(config, sim::SimConfig{});
  const auto b = run_training(config, sim::SimConfig{});
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(same_bits(a.log[i].avg_reward, b.log[i].avg_reward));
    CHECK(same_bits(a.log[i].avg_return, b.log[i].avg_return));
    CHECK(same_bits(a.log[i].loss, b.log[i].loss));
    CHECK(same_bits(a.log[i].nav_time, b.log[i].nav_time));
  }
  CHECK(a.params.fingerprint() == b.params.fingerprint());
  REQUIRE(a.validations.size() == 2);
  CHECK(same_bits(a.validations[1].avg_return, b.validations[1].avg_return));

  TrainConfig other = config;
  other.seed = 18;
  CHECK(run_training(other, sim::SimConfig{}).params.fingerprint() != a.params.fingerprint());
}

TEST_CASE("checkpoints") {
  const auto dir = std::filesystem::temp_directory_path() / "sgdqn_test_checkpoints";
  std::filesystem::create_directories(dir);
  const auto path = dir / "model.ckpt";
  const auto params = net::make_network_parameters(42);
  save_checkpoint(path, params, {{"train", {{"gamma", 0.9}}}}, 1234);

  SUBCASE("round trip is bitwise exact") {
    const Checkpoint cp = load_checkpoint(path);
    CHECK(cp.params.fingerprint() == params.fingerprint());
    CHECK(cp.metadata["episodes"] == 1234);
    CHECK(cp.metadata["format_version"] == kCheckpointFormatVersion);
    CHECK(cp.metadata["config"]["train"]["gamma"] == 0.9);
    CHECK(cp.hash.size() == 16);
  }
  SUBCASE("truncated file is a load error") {
    std::string bytes;
    {
      std::ifstream in(path, std::ios::binary);
      bytes.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }
    const auto cut = dir / "cut.ckpt";
    std::ofstream(cut, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(cut), FormatError);
  }
  SUBCASE("different head size names the parameter") {
    net::NetworkDims small;
    small.common_hidden = 64;
    const auto other = dir / "small.ckpt";
    save_checkpoint(other, net::make_network_parameters(1, small), {}, 0);
    try {
      load_checkpoint(other);
      FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
      CHECK(std::string(e.what()).find("dueling.common.0.weight") != std::string::npos);
    }
  }
  SUBCASE("kind mismatch is explicit") {
    CHECK_THROWS_AS(load_checkpoint(path, {}, "crowd_predictor"), InvalidArgument);
  }
  std::filesystem::remove_all(dir);
}

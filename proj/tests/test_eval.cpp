#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "sgdqn/errors.hpp"
#include "sgdqn/eval/evaluation.hpp"
#include "sgdqn/eval/exports.hpp"
#include "sgdqn/net/network.hpp"
#include "sgdqn/rl/episode.hpp"
#include "sgdqn/sim/orca.hpp"
#include "support/states.hpp"

using namespace sgdqn;
using namespace sgdqn::eval;

namespace {

constexpr std::size_t kFullSpeedAhead = 1 + 4 * 16;

class Straight final : public Policy {
 public:
  std::size_t decide(const sim::JointState&) override { return kFullSpeedAhead; }
  std::string name() const override { return "straight"; }
};

bool same_metrics(const Metrics& a, const Metrics& b) {
  auto eq = [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; };
  return a.cases == b.cases && eq(a.success, b.success) && eq(a.collision, b.collision) &&
         eq(a.timeout, b.timeout) && eq(a.nav_time, b.nav_time) && eq(a.disc_rate, b.disc_rate) &&
         eq(a.avg_return, b.avg_return);
}

const double kDiscount = std::pow(0.9, 0.25);

}  // namespace

TEST_CASE("straight-line policy with no pedestrians") {
  const sim::SimConfig config;
  Straight policy;
  TestSuite suite{sim::ScenarioKind::simple, 20, 3, 0};
  const auto r = run_evaluation(policy, suite, config, kDiscount);
  CHECK(r.metrics.success == 1.0);
  CHECK(r.metrics.nav_time >= 7.75);
  CHECK(r.metrics.nav_time <= 8.0);
  CHECK(r.metrics.disc_rate == 0.0);
}

TEST_CASE("action snapping") {
  const auto actions = sim::build_action_space(1.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.3, 1.3);
  for (int t = 0; t < 500; ++t) {
    const Vec2 v{u(rng), u(rng)};
    const std::size_t got = nearest_action(actions, v);
    for (const auto& a : actions) CHECK(norm(actions[got].velocity() - v) <= norm(a.velocity() - v));
  }
}

TEST_CASE("ORCA robot policy") {
  const sim::SimConfig config;
  OrcaRobotPolicy policy(config);
  sim::JointState s;
  s.robot.position = {0, -4};
  s.robot.goal = {0, 4};
  s.robot.preferred_speed = 1.0;
  CHECK(policy.decide(s) == kFullSpeedAhead);

  // Inflated radii: the same answer as plain ORCA against padded neighbours.
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto w = test::random_world_state(rng, 5);
    std::vector<sim::ObservableState> padded;
    for (auto p : w.pedestrians) {
      p.radius = p.radius + 0.2;
      padded.push_back(p);
    }
    const Vec2 expect = sim::orca_velocity(w.robot, padded, {0.25, config.orca_time_horizon, w.robot.preferred_speed});
    const Vec2 got = policy.raw_velocity(w);
    CHECK(got.x == expect.x);
    CHECK(got.y == expect.y);
  }
}

TEST_CASE("metric bookkeeping") {
  const sim::SimConfig config;
  OrcaRobotPolicy policy(config);
  TestSuite suite{sim::ScenarioKind::simple, 40, 100, std::nullopt};
  const auto a = run_evaluation(policy, suite, config, kDiscount);
  const auto b = run_evaluation(policy, suite, config, kDiscount);
  CHECK(same_metrics(a.metrics, b.metrics));

  std::size_t s = 0, c = 0, t = 0;
  for (const auto& e : a.episodes) {
    s += e.status == sim::EpisodeStatus::reached_goal;
    c += e.status == sim::EpisodeStatus::collision;
    t += e.status == sim::EpisodeStatus::timeout;
  }
  CHECK(s + c + t == suite.cases);
  CHECK(std::fabs(a.metrics.success + a.metrics.collision + a.metrics.timeout - 1.0) < 1e-12);
  CHECK(a.metrics.run_time_ms > 0.0);

  auto shuffled = a.episodes;
  std::mt19937_64 rng(1);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(same_metrics(aggregate(shuffled), a.metrics));
  }
  CHECK(std::isnan(aggregate({}).nav_time));
}

TEST_CASE("discomfort counts a step once") {
  const sim::SimConfig config;
  const auto actions = sim::build_action_space(1.0);
  std::size_t multi = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    sim::World w = sim::generate_scenario(sim::ScenarioSpec::make(sim::ScenarioKind::complex, seed, config), config);
    std::size_t oracle = 0;
    const rl::StepObserver watch = [&](const sim::World& before, const sim::Action&, const sim::StepOutcome& out) {
      std::size_t close = 0;
      for (std::size_t i = 0; i < out.min_separations.size(); ++i) {
        const double surface = out.min_separations[i] - before.robot.radius - before.pedestrians[i].radius;
        close += surface < config.discomfort_distance;
      }
      oracle += close > 0;
      multi += close > 1;
    };
    const auto stats = rl::play_episode(w, actions, [](const sim::JointState&) { return kFullSpeedAhead; }, config,
                                        kDiscount, watch);
    CHECK(stats.discomfort_steps == oracle);
  }
  CHECK(multi > 0);  // the check above saw steps with several intruders
}

TEST_CASE("network policies") {
  const sim::SimConfig config;
  const auto params = net::make_network_parameters(21);
  auto cv = std::make_shared<plan::ConstantVelocityModel>();
  NetworkPolicy dqn("dqn", params, cv, config, kDiscount, {0, 10});
  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    const auto w = test::random_world_state(rng, 5);
    CHECK(dqn.decide(w) == net::argmax(net::q_values(params, sim::to_robot_centric(w))));
  }
  NetworkPolicy depth0("sgdqn", params, cv, config, kDiscount, {0, 3});
  TestSuite suite{sim::ScenarioKind::simple, 5, 40, std::nullopt};
  CHECK(same_metrics(run_evaluation(dqn, suite, config, kDiscount).metrics,
                     run_evaluation(depth0, suite, config, kDiscount).metrics));
  CHECK_THROWS_AS(NetworkPolicy("x", params, cv, config, kDiscount, {1, 0}), InvalidArgument);
}

TEST_CASE("trajectory export") {
  const sim::SimConfig config;
  OrcaRobotPolicy policy(config);
  const auto r = run_evaluation(policy, TestSuite{sim::ScenarioKind::simple, 2, 8, std::nullopt}, config, kDiscount, {true});
  REQUIRE(r.trajectories.size() == 2);
  for (std::size_t e = 0; e < 2; ++e) {
    const auto rows = trajectory_rows(r.trajectories[e]);
    CHECK(rows.size() == (r.episodes[e].steps + 1) * 6);
    const auto back = parse_trajectory_csv(to_csv(rows));
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(std::memcmp(&back[i].x, &rows[i].x, sizeof(double)) == 0);
      CHECK(std::memcmp(&back[i].y, &rows[i].y, sizeof(double)) == 0);
      CHECK(std::memcmp(&back[i].vx, &rows[i].vx, sizeof(double)) == 0);
      CHECK(back[i].agent_id == rows[i].agent_id);
      CHECK(back[i].t == rows[i].t);
    }
    CHECK(rows.front().t == 0.0);
    CHECK(rows.back().t == doctest::Approx(r.episodes[e].time));
  }
}

TEST_CASE("attention export") {
  const auto params = net::make_network_parameters(2);
  std::mt19937_64 rng(6);
  for (std::size_t n : {1u, 5u, 10u}) {
    const auto s = test::random_world_state(rng, n);
    const auto rows = attention_rows(params, s);
    CHECK(rows.size() == (n + 1) * (n + 1) * 2);
    std::vector<double> sums((n + 1) * 2, 0.0);
    for (const auto& row : rows) sums[row.layer * (n + 1) + row.from_agent] += row.weight;
    for (double x : sums) CHECK(std::fabs(x - 1.0) < 1e-9);
    const auto back = parse_attention_csv(to_csv(rows));
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(std::memcmp(&back[i].weight, &rows[i].weight, sizeof(double)) == 0);
    }
  }
}

TEST_CASE("export errors") {
  CHECK_THROWS_AS(parse_trajectory_csv("x,y\n1,2\n"), FormatError);
  CHECK_THROWS_AS(parse_attention_csv("from_agent,to_agent,weight,layer\n1,2,0.5\n"), FormatError);
  CHECK_THROWS_AS(parse_attention_csv("from_agent,to_agent,weight,layer\n1,2,abc,0\n"), FormatError);
  const std::filesystem::path bad = "/nonexistent-dir/out.csv";
  try {
    write_text_file(bad, "x");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(bad.string()) != std::string::npos);
  }
  CHECK_THROWS_AS(read_text_file(bad), IoError);
}

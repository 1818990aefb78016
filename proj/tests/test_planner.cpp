#include <doctest.h>

#include <cmath>
#include <random>

#include "sgdqn/errors.hpp"
#include "sgdqn/net/network.hpp"
#include "sgdqn/plan/planner.hpp"
#include "support/gradcheck.hpp"
#include "support/states.hpp"

using namespace sgdqn;
using namespace sgdqn::plan;

namespace {

// Crowd model returning fixed velocities, for hand-built scenarios.
class FixedCrowd final : public CrowdModel {
 public:
  explicit FixedCrowd(std::vector<Vec2> v) : v_(std::move(v)) {}
  std::vector<Vec2> predict_velocities(const sim::JointState&, double) const override { return v_; }
  std::string name() const override { return "fixed"; }

 private:
  std::vector<Vec2> v_;
};

ad::ParameterSet zero_network() {
  auto p = net::make_network_parameters(0);
  for (auto& e : p.entries()) std::fill(e.tensor.values().begin(), e.tensor.values().end(), 0.0);
  return p;
}

}  // namespace

TEST_CASE("constant-velocity crowd model") {
  sim::JointState s;
  s.frame = sim::Frame::robot_centric;
  s.robot.goal = {4, 0};
  s.pedestrians.push_back({{0, 0}, {1, 0}, 0.3});
  s.pedestrians.push_back({{2, 1}, {0, 0}, 0.3});
  const auto next = ConstantVelocityModel{}.predict(s, 0.25);
  CHECK(next[0].position == Vec2{0.25, 0});
  CHECK(next[1].position == Vec2{2, 1});
  CHECK(s.pedestrians[0].position == Vec2{0, 0});  // input untouched

  // One-step error against the true ORCA crowd is finite.
  const sim::SimConfig config;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    sim::World w = sim::generate_scenario(sim::ScenarioSpec::make(sim::ScenarioKind::simple, seed, config), config);
    const auto actions = sim::build_action_space(1.0);
    for (int k = 0; k < 5; ++k) sim::step_episode(w, actions[0], config);
    const sim::JointState before = sim::to_robot_centric(w.joint_state());
    const auto predicted = ConstantVelocityModel{}.predict(before, config.time_step);
    const double angle = sim::robot_centric_angle(w.robot);
    sim::step_episode(w, actions[0], config);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const Vec2 truth = rotate(w.pedestrians[i].position - w.robot.position, -angle);
      worst = std::max(worst, norm(truth - predicted[i].position));
    }
  }
  CHECK(std::isfinite(worst));
  MESSAGE("constant-velocity one-step error, worst of 100 states: ", worst, " m");
}

TEST_CASE("environment model") {
  const sim::SimConfig config;
  ConstantVelocityModel cv;
  EnvironmentModel model(cv, config);
  std::mt19937_64 rng(3);
  const auto s = test::random_centric_state(rng, 5);
  const auto copy = s;
  const auto p = model.predict(s, model.actions()[1 + 4 * 16]);
  CHECK(p.next.robot.position.x == doctest::Approx(0.25));
  CHECK(p.next.robot.position.y == doctest::Approx(0.0));
  CHECK(s.pedestrians[2].position == copy.pedestrians[2].position);
  CHECK_THROWS_AS(model.predict(test::random_world_state(rng, 2), model.actions()[0]), InvalidArgument);
}

TEST_CASE("refinement identities") {
  const sim::SimConfig config;
  ConstantVelocityModel cv;
  EnvironmentModel model(cv, config);
  const auto params = net::make_network_parameters(11);
  std::mt19937_64 rng(12);

  SUBCASE("depth 0 leaves coarse values untouched") {
    for (int t = 0; t < 20; ++t) {
      const auto s = test::random_centric_state(rng, 5);
      const auto r = refine_q(s, params, model, 0.974, {0, 10});
      for (std::size_t i = 0; i < r.candidates.size(); ++i) {
        CHECK(r.refined[i] == r.coarse[r.candidates[i]]);
      }
      CHECK(r.counters.model_calls == 0);
    }
  }
  SUBCASE("width 1 selects the greedy network action") {
    for (int t = 0; t < 50; ++t) {
      const auto s = test::random_centric_state(rng, 5);
      const auto greedy = net::argmax(net::q_values(params, s));
      CHECK(plan_action(s, params, model, 0.974, {1, 1}).action == greedy);
      CHECK(plan_action(s, params, model, 0.974, {0, 10}).action == greedy);
    }
  }
  SUBCASE("top-k ordering and ties") {
    const std::vector<double> v{1, 3, 3, 2, 3};
    CHECK(top_k_actions(v, 3) == std::vector<std::size_t>{1, 2, 4});
    CHECK(top_k_actions(v, 4) == std::vector<std::size_t>{1, 2, 4, 3});
  }
  SUBCASE("non-candidates keep coarse values and expansion stays bounded") {
    for (std::size_t d : {1u, 2u}) {
      const auto s = test::random_centric_state(rng, 5);
      const auto r = refine_q(s, params, model, 0.974, {d, 3});
      CHECK(r.counters.leaf_values <= static_cast<std::size_t>(std::pow(3, d)) * 81);
      CHECK(r.coarse == net::q_values(params, s));
    }
  }
  SUBCASE("invalid width") {
    const auto s = test::random_centric_state(rng, 5);
    CHECK_THROWS_AS(refine_q(s, params, model, 0.974, {1, 0}), InvalidArgument);
    CHECK_THROWS_AS(refine_q(s, params, model, 0.974, {1, 82}), InvalidArgument);
  }
}

TEST_CASE("one-step refinement arithmetic") {
  // Q = 4 everywhere, successor max Q = 5, reward 1 from progress:
  // 1/2 * 4 + 1/2 * (1 + 0.974 * 5) = 4.935.
  sim::SimConfig config;
  config.progress_factor = 4.0;  // 0.25 m progress -> reward 1
  FixedCrowd still({{0.0, 0.0}});
  EnvironmentModel model(still, config);
  auto p = zero_network();
  p.at("dueling.value.bias").values()[0] = 4.0;
  sim::JointState s;
  s.frame = sim::Frame::robot_centric;
  s.robot.goal = {6.0, 0.0};
  s.pedestrians.push_back({{0.0, 5.0}, {0.0, 0.0}, 0.3});
  // Successor Q is 5: the value bias depends on nothing, so use a second
  // network for the check by shifting after the root evaluation is known.
  const auto pred = model.predict(s, model.actions()[1 + 4 * 16]);
  CHECK(pred.reward == doctest::Approx(1.0).epsilon(1e-12));
  const double refined = 0.5 * 4.0 + 0.5 * (pred.reward + 0.974 * 5.0);
  CHECK(refined == doctest::Approx(4.935).epsilon(1e-12));

  // Through refine_q with Q = 4 at every state: 2 + (1 + 0.974 * 4) / 2.
  const auto r = refine_q(s, p, model, 0.974, {1, 81});
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    if (r.candidates[i] != 1 + 4 * 16) continue;
    CHECK(std::fabs(r.refined[i] - (2.0 + 0.5 * (1.0 + 0.974 * 4.0))) < 1e-12);
  }
}

TEST_CASE("lookahead vetoes a candidate that collides") {
  // Two actions look best to the network; the better one drives into a
  // pedestrian one step ahead. The refined value must drop below the other.
  sim::SimConfig config;
  FixedCrowd still({{0.0, 0.0}});
  EnvironmentModel model(still, config);
  auto p = zero_network();
  const std::size_t forward = 1 + 4 * 16;     // full speed toward the goal
  const std::size_t sideways = 1 + 4 * 16 + 4;  // full speed, 90 degrees left
  p.at("dueling.advantage.bias").values()[forward] = 1.0;
  p.at("dueling.advantage.bias").values()[sideways] = 0.9;

  sim::JointState s;
  s.frame = sim::Frame::robot_centric;
  s.robot.goal = {6.0, 0.0};
  s.pedestrians.push_back({{0.75, 0.0}, {0.0, 0.0}, 0.3});  // blocks the forward move

  const auto greedy = net::argmax(net::q_values(p, s));
  CHECK(greedy == forward);
  const auto r = plan_action(s, p, model, 0.974, {1, 2});
  CHECK(model.predict(s, model.actions()[forward]).reward <= -2.5 + 0.1);
  CHECK(r.action == sideways);
  CHECK(plan_action(s, p, model, 0.974, {1, 2, true}).action == sideways);
}

TEST_CASE("identical outcomes leave the choice unchanged") {
  // With a network that ignores its input and a world where every top
  // candidate earns the same reward, refinement cannot reorder candidates.
  sim::SimConfig config;
  config.progress_factor = 0.0;
  config.discomfort_distance = 0.0;
  FixedCrowd still({{0.0, 0.0}});
  EnvironmentModel model(still, config);
  auto p = zero_network();
  for (std::size_t a = 0; a < 81; ++a) p.at("dueling.advantage.bias").values()[a] = 0.01 * static_cast<double>(a % 7);
  sim::JointState s;
  s.frame = sim::Frame::robot_centric;
  s.robot.goal = {6.0, 0.0};
  s.pedestrians.push_back({{0.0, 5.0}, {0.0, 0.0}, 0.3});
  CHECK(plan_action(s, p, model, 0.974, {1, 10}).action == plan_action(s, p, model, 0.974, {0, 10}).action);
}

TEST_CASE("learned crowd predictor") {
  const sim::SimConfig config;
  SUBCASE("output shape") {
    const auto params = make_predictor_parameters(1);
    std::mt19937_64 rng(1);
    const auto s = test::random_centric_state(rng, 7);
    CHECK(LearnedCrowdModel(params).predict_velocities(s, 0.25).size() == 7);
  }
  SUBCASE("empty dataset is rejected") {
    CHECK_THROWS_AS(train_crowd_predictor({}, 0.25, {}), InvalidArgument);
  }
  SUBCASE("learns constant-velocity data") {
    std::mt19937_64 rng(2);
    std::vector<CrowdSample> data;
    for (int i = 0; i < 400; ++i) {
      CrowdSample c;
      c.state = test::random_centric_state(rng, 5);
      for (const auto& ped : c.state.pedestrians) c.next_velocities.push_back(ped.velocity);
      data.push_back(std::move(c));
    }
    PredictorTrainConfig tc;
    tc.epochs = 15;
    const auto r = train_crowd_predictor(data, 0.25, tc);
    MESSAGE("held-out ADE untrained ", r.untrained_ade, " trained ", r.heldout_ade);
    CHECK(r.heldout_ade < r.untrained_ade);
    CHECK(r.constant_velocity_ade == 0.0);
  }
  SUBCASE("harvested samples line up with the simulator") {
    const auto data = harvest_crowd_samples(config, sim::ScenarioKind::simple, 2, 5);
    REQUIRE(!data.empty());
    for (const auto& c : data) CHECK(c.next_velocities.size() == c.state.pedestrians.size());
  }
  SUBCASE("regression loss gradients") {
    auto params = make_predictor_parameters(3);
    std::mt19937_64 rng(4);
    std::vector<CrowdSample> data;
    for (int i = 0; i < 3; ++i) {
      CrowdSample c;
      c.state = test::random_centric_state(rng, 4);
      for (std::size_t k = 0; k < 4; ++k) c.next_velocities.push_back({0.1 * k, -0.2});
      data.push_back(std::move(c));
    }
    std::vector<const CrowdSample*> ptrs;
    for (const auto& c : data) ptrs.push_back(&c);
    const test::LossBuilder loss = [&](net::ParameterBinder& bind) { return predictor_loss(bind, ptrs); };
    const auto report = test::check_gradients(params, loss, test::all_coordinates(params));
    INFO("worst ", report.worst);
    CHECK(report.max_relative_error <= 1e-4);
  }
}

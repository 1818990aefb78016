#include "sgdqn/plan/crowd_model.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "sgdqn/ad/adam.hpp"
#include "sgdqn/errors.hpp"
#include "sgdqn/seeding.hpp"

namespace sgdqn::plan {
namespace {

constexpr const char* kPrefix = "predictor.";

}  // namespace

std::vector<sim::ObservableState> CrowdModel::predict(const sim::JointState& state, double dt) const {
  const auto v = predict_velocities(state, dt);
  std::vector<sim::ObservableState> out = state.pedestrians;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].position += dt * v[i];
    out[i].velocity = v[i];
  }
  return out;
}

std::vector<Vec2> ConstantVelocityModel::predict_velocities(const sim::JointState& state, double) const {
  std::vector<Vec2> v;
  v.reserve(state.pedestrians.size());
  for (const auto& p : state.pedestrians) v.push_back(p.velocity);
  return v;
}

ad::ParameterSet make_predictor_parameters(std::uint64_t seed, const net::NetworkDims& dims) {
  std::mt19937_64 rng(seed);
  ad::ParameterSet params;
  net::add_graph_parameters(params, kPrefix, dims, 1, rng);
  net::add_linear(params, std::string(kPrefix) + "velocity", dims.feature, 2, rng);
  return params;
}

ad::Var predictor_forward(net::ParameterBinder& bind, const net::GraphBatch& batch) {
  const std::size_t n = batch.nodes_per_graph();
  ad::Var h0 = net::embed_agents(bind, kPrefix, batch);
  ad::Var h1 = net::attention_layer(bind, kPrefix, 0, h0, n).features;
  // Skip connection keeps each pedestrian's own motion visible to the head.
  ad::Var h = ad::add(h0, h1);
  std::vector<std::size_t> rows;
  rows.reserve(batch.graphs * batch.pedestrians_per_graph);
  for (std::size_t g = 0; g < batch.graphs; ++g) {
    for (std::size_t i = 1; i < n; ++i) rows.push_back(g * n + i);
  }
  return net::linear(bind, std::string(kPrefix) + "velocity", ad::select_rows(h, rows));
}

std::vector<Vec2> LearnedCrowdModel::predict_velocities(const sim::JointState& state, double) const {
  if (state.pedestrians.empty()) return {};
  ad::Tape tape(ad::GradMode::disabled);
  net::ParameterBinder bind(tape, params_);
  const ad::Tensor& v = predictor_forward(bind, net::make_graph_batch(state)).value();
  std::vector<Vec2> out(state.pedestrians.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {v(i, 0), v(i, 1)};
  return out;
}

std::vector<CrowdSample> harvest_crowd_samples(const sim::SimConfig& config, sim::ScenarioKind kind,
                                               std::size_t episodes, std::uint64_t seed) {
  const auto actions = sim::build_action_space(config.robot_preferred_speed);
  std::mt19937_64 rng(derive_seed(seed, seed_stream::predictor, 0));
  std::uniform_int_distribution<std::size_t> any(0, actions.size() - 1);
  std::vector<CrowdSample> out;
  for (std::size_t e = 0; e < episodes; ++e) {
    sim::World world = sim::generate_scenario(
        sim::ScenarioSpec::make(kind, derive_seed(seed, seed_stream::predictor, e + 1), config), config);
    while (world.status == sim::EpisodeStatus::running) {
      const sim::JointState before = world.joint_state();
      const double angle = sim::robot_centric_angle(before.robot);
      sim::step_episode(world, actions[any(rng)], config);
      CrowdSample s;
      s.state = sim::to_robot_centric(before);
      for (const auto& p : world.pedestrians) s.next_velocities.push_back(rotate(p.velocity, -angle));
      out.push_back(std::move(s));
    }
  }
  return out;
}

ad::Var predictor_loss(net::ParameterBinder& bind, std::span<const CrowdSample* const> batch) {
  if (batch.empty()) throw InvalidArgument("predictor_loss: empty batch");
  ad::Tape& tape = bind.tape();
  std::map<std::size_t, std::vector<const CrowdSample*>> groups;
  for (const CrowdSample* s : batch) {
    if (s->next_velocities.size() != s->state.pedestrians.size()) {
      throw InvalidArgument("crowd sample has mismatched velocity targets");
    }
    if (!s->state.pedestrians.empty()) groups[s->state.pedestrians.size()].push_back(s);
  }
  ad::Var total = tape.constant(ad::Tensor(1, 1, 0.0));
  for (const auto& [n, samples] : groups) {
    std::vector<const sim::JointState*> states;
    ad::Tensor target(samples.size() * n, 2);
    for (std::size_t b = 0; b < samples.size(); ++b) {
      states.push_back(&samples[b]->state);
      for (std::size_t i = 0; i < n; ++i) {
        target(b * n + i, 0) = samples[b]->next_velocities[i].x;
        target(b * n + i, 1) = samples[b]->next_velocities[i].y;
      }
    }
    ad::Var pred = predictor_forward(bind, net::make_graph_batch(states));
    total = ad::add(total, ad::sum(ad::square(ad::sub(pred, tape.constant(std::move(target))))));
  }
  return total;
}

double average_displacement_error(const CrowdModel& model, std::span<const CrowdSample> samples,
                                  double dt) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : samples) {
    const auto v = model.predict_velocities(s.state, dt);
    for (std::size_t i = 0; i < v.size(); ++i) {
      sum += dt * norm(v[i] - s.next_velocities[i]);
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

PredictorTrainResult train_crowd_predictor(const std::vector<CrowdSample>& samples, double dt,
                                           const PredictorTrainConfig& config) {
  if (samples.empty()) throw InvalidArgument("train_crowd_predictor: empty dataset");
  if (config.batch_size == 0) throw InvalidArgument("predictor.batch_size must be positive");
  if (!(config.holdout_fraction >= 0.0 && config.holdout_fraction < 1.0)) {
    throw InvalidArgument("predictor.holdout_fraction must lie in [0, 1)");
  }
  std::mt19937_64 rng(derive_seed(config.seed, seed_stream::predictor, 0));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto held = static_cast<std::size_t>(config.holdout_fraction * static_cast<double>(samples.size()));
  std::vector<CrowdSample> heldout;
  std::vector<const CrowdSample*> train;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < held) {
      heldout.push_back(samples[order[i]]);
    } else {
      train.push_back(&samples[order[i]]);
    }
  }
  // With no hold-out the training set doubles as the evaluation set.
  const std::vector<CrowdSample>& eval_set = heldout.empty() ? samples : heldout;

  PredictorTrainResult result;
  result.params = make_predictor_parameters(derive_seed(config.seed, seed_stream::predictor, 1));
  result.untrained_ade = average_displacement_error(LearnedCrowdModel(result.params), eval_set, dt);
  result.constant_velocity_ade = average_displacement_error(ConstantVelocityModel{}, eval_set, dt);
  result.train_samples = train.size();
  result.heldout_samples = heldout.size();

  result.params.set_requires_grad(true);
  ad::AdamState adam = ad::make_adam_state(result.params, config.learning_rate);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train.size(); start += config.batch_size) {
      const std::size_t end = std::min(train.size(), start + config.batch_size);
      std::span<const CrowdSample* const> batch(train.data() + start, end - start);
      result.params.zero_grad();
      ad::Tape tape;
      net::ParameterBinder bind(tape, result.params);
      ad::Var loss = predictor_loss(bind, batch);
      loss_sum += loss.value().item();
      tape.backward(loss);
      ad::adam_step(result.params, adam);
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(std::max<std::size_t>(train.size(), 1)));
  }
  result.params.set_requires_grad(false);
  result.heldout_ade = average_displacement_error(LearnedCrowdModel(result.params), eval_set, dt);
  return result;
}

}  // namespace sgdqn::plan

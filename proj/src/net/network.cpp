#include "sgdqn/net/network.hpp"

#include <algorithm>
#include <numeric>

#include "sgdqn/errors.hpp"

namespace sgdqn::net {
namespace {

std::string layer_prefix(const std::string& prefix, std::size_t layer) {
  return prefix + "gat." + std::to_string(layer) + ".";
}

// Two-layer perceptron with ReLU after each layer.
ad::Var embed_mlp(ParameterBinder& bind, const std::string& name, ad::Var x) {
  ad::Var h = ad::relu(linear(bind, name + ".0", x));
  return ad::relu(linear(bind, name + ".1", h));
}

}  // namespace

void add_linear(ad::ParameterSet& params, const std::string& name, std::size_t fan_in,
                std::size_t fan_out, std::mt19937_64& rng) {
  params.add(name + ".weight", ad::uniform_init(fan_in, fan_out, fan_in, rng));
  params.add(name + ".bias", ad::uniform_init(1, fan_out, fan_in, rng));
}

void add_graph_parameters(ad::ParameterSet& params, const std::string& prefix,
                          const NetworkDims& dims, std::size_t layers, std::mt19937_64& rng) {
  add_linear(params, prefix + "robot_embed.0", dims.robot_input, dims.embed_hidden, rng);
  add_linear(params, prefix + "robot_embed.1", dims.embed_hidden, dims.feature, rng);
  add_linear(params, prefix + "pedestrian_embed.0", dims.pedestrian_input, dims.embed_hidden, rng);
  add_linear(params, prefix + "pedestrian_embed.1", dims.embed_hidden, dims.feature, rng);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string p = layer_prefix(prefix, l);
    add_linear(params, p + "query", dims.feature, dims.feature, rng);
    add_linear(params, p + "key", dims.feature, dims.feature, rng);
    add_linear(params, p + "attention", 2 * dims.feature, 1, rng);
  }
}

ad::ParameterSet make_network_parameters(std::uint64_t seed, const NetworkDims& dims) {
  std::mt19937_64 rng(seed);
  ad::ParameterSet params;
  add_graph_parameters(params, "", dims, dims.graph_layers, rng);
  add_linear(params, "dueling.common.0", dims.feature, dims.common_hidden, rng);
  add_linear(params, "dueling.common.1", dims.common_hidden, dims.common_hidden, rng);
  add_linear(params, "dueling.value", dims.common_hidden, 1, rng);
  add_linear(params, "dueling.advantage", dims.common_hidden, dims.num_actions, rng);
  return params;
}

GraphBatch GraphBatch::from_features(ad::Tensor robot, ad::Tensor pedestrians,
                                     std::size_t pedestrians_per_graph) {
  if (robot.cols() != sim::FullState::kFeatureDim) {
    throw InvalidArgument("robot features must be " + std::to_string(sim::FullState::kFeatureDim) +
                          "-dimensional, got " + robot.shape().str());
  }
  if (pedestrians.cols() != sim::ObservableState::kFeatureDim && pedestrians.rows() != 0) {
    throw InvalidArgument("pedestrian features must be " +
                          std::to_string(sim::ObservableState::kFeatureDim) +
                          "-dimensional, got " + pedestrians.shape().str());
  }
  if (pedestrians.rows() != robot.rows() * pedestrians_per_graph) {
    throw InvalidArgument("pedestrian rows " + std::to_string(pedestrians.rows()) + " != " +
                          std::to_string(robot.rows()) + " graphs x " +
                          std::to_string(pedestrians_per_graph) + " pedestrians");
  }
  GraphBatch batch;
  batch.graphs = robot.rows();
  batch.pedestrians_per_graph = pedestrians_per_graph;
  batch.robot = std::move(robot);
  batch.pedestrians = pedestrians.rows() == 0
                          ? ad::Tensor(0, sim::ObservableState::kFeatureDim)
                          : std::move(pedestrians);
  return batch;
}

GraphBatch make_graph_batch(std::span<const sim::JointState* const> states) {
  if (states.empty()) throw InvalidArgument("make_graph_batch: no states");
  const std::size_t n = states.front()->pedestrians.size();
  constexpr std::size_t rd = sim::FullState::kFeatureDim;
  constexpr std::size_t pd = sim::ObservableState::kFeatureDim;
  ad::Tensor robot(states.size(), rd);
  ad::Tensor peds(states.size() * n, pd);
  for (std::size_t b = 0; b < states.size(); ++b) {
    const sim::JointState& s = *states[b];
    if (s.frame != sim::Frame::robot_centric) {
      throw InvalidArgument("make_graph_batch: state " + std::to_string(b) +
                            " is not in the robot-centric frame");
    }
    if (s.pedestrians.size() != n) {
      throw InvalidArgument("make_graph_batch: mixed pedestrian counts " + std::to_string(n) +
                            " and " + std::to_string(s.pedestrians.size()));
    }
    const auto rf = s.robot.features();
    std::copy(rf.begin(), rf.end(), robot.data() + b * rd);
    for (std::size_t i = 0; i < n; ++i) {
      const auto pf = s.pedestrians[i].features();
      std::copy(pf.begin(), pf.end(), peds.data() + (b * n + i) * pd);
    }
  }
  return GraphBatch::from_features(std::move(robot), std::move(peds), n);
}

GraphBatch make_graph_batch(const sim::JointState& state) {
  const sim::JointState* one[] = {&state};
  return make_graph_batch(one);
}

ParameterBinder::ParameterBinder(ad::Tape& tape, ad::ParameterSet& params)
    : tape_(tape), read_(&params), write_(&params) {}

ParameterBinder::ParameterBinder(ad::Tape& tape, const ad::ParameterSet& params)
    : tape_(tape), read_(&params), write_(nullptr) {}

ad::Var ParameterBinder::operator()(std::string_view name) {
  for (const auto& [bound_name, var] : bound_) {
    if (bound_name == name) return var;
  }
  ad::Var v = write_ != nullptr ? tape_.parameter(write_->at(name))
                                : tape_.constant_ref(read_->at(name));
  bound_.emplace_back(std::string(name), v);
  return v;
}

bool ParameterBinder::has(std::string_view name) const { return read_->find(name) != nullptr; }

ad::Var linear(ParameterBinder& bind, const std::string& name, ad::Var x) {
  return ad::add_row(ad::matmul(x, bind(name + ".weight")), bind(name + ".bias"));
}

ad::Var embed_agents(ParameterBinder& bind, const std::string& prefix, const GraphBatch& batch) {
  ad::Tape& tape = bind.tape();
  ad::Var robot = embed_mlp(bind, prefix + "robot_embed", tape.constant(batch.robot));
  ad::Var peds = embed_mlp(bind, prefix + "pedestrian_embed", tape.constant(batch.pedestrians));
  return ad::interleave(robot, peds, batch.pedestrians_per_graph);
}

AttentionLayerOutput attention_layer(ParameterBinder& bind, const std::string& prefix,
                                     std::size_t layer, ad::Var features,
                                     std::size_t nodes_per_graph) {
  const std::string p = layer_prefix(prefix, layer);
  ad::Var query = linear(bind, p + "query", features);
  ad::Var key = linear(bind, p + "key", features);
  ad::Var pairs = ad::pairwise_concat(query, key, nodes_per_graph);
  ad::Var logits = ad::leaky_relu(linear(bind, p + "attention", pairs), kAttentionSlope);
  ad::Var scores = ad::reshape(logits, features.shape().rows, nodes_per_graph);
  ad::Var attention = ad::softmax(scores, 1);
  ad::Var mixed = ad::group_matmul(attention, features, nodes_per_graph);
  return {ad::relu(mixed), attention};
}

GraphOutput graph_representation(ParameterBinder& bind, const GraphBatch& batch) {
  GraphOutput out;
  const std::size_t n = batch.nodes_per_graph();
  ad::Var h = embed_agents(bind, "", batch);
  out.node_features.push_back(h);
  for (std::size_t l = 0; bind.has("gat." + std::to_string(l) + ".query.weight"); ++l) {
    auto layer = attention_layer(bind, "", l, h, n);
    h = layer.features;
    out.node_features.push_back(h);
    out.attention.push_back(layer.attention);
  }

  std::vector<std::size_t> robot_rows(batch.graphs);
  for (std::size_t b = 0; b < batch.graphs; ++b) robot_rows[b] = b * n;
  out.representation = ad::select_rows(out.node_features[0], robot_rows);
  for (std::size_t l = 1; l < out.node_features.size(); ++l) {
    out.representation = ad::add(out.representation, ad::select_rows(out.node_features[l], robot_rows));
  }
  return out;
}

DuelingOutput dueling_head(ParameterBinder& bind, ad::Var representation) {
  ad::Var c = ad::relu(linear(bind, "dueling.common.0", representation));
  c = ad::relu(linear(bind, "dueling.common.1", c));
  DuelingOutput out;
  out.value = linear(bind, "dueling.value", c);
  out.advantage = linear(bind, "dueling.advantage", c);
  const std::size_t actions = out.advantage.shape().cols;
  // V broadcast across actions as V * 1^T.
  ad::Var ones = bind.tape().constant(ad::Tensor(1, actions, 1.0));
  out.q = ad::add(ad::matmul(out.value, ones), out.advantage);
  return out;
}

ForwardResult forward(ParameterBinder& bind, const GraphBatch& batch) {
  ForwardResult result;
  result.graph = graph_representation(bind, batch);
  result.head = dueling_head(bind, result.graph.representation);
  return result;
}

Evaluation evaluate(const ad::ParameterSet& params, const sim::JointState& state) {
  ad::Tape tape(ad::GradMode::disabled);
  ParameterBinder bind(tape, params);
  const GraphBatch batch = make_graph_batch(state);
  const ForwardResult r = forward(bind, batch);
  Evaluation out;
  auto copy = [](ad::Var v) {
    const auto values = v.value().values();
    return std::vector<double>(values.begin(), values.end());
  };
  out.q = copy(r.head.q);
  out.value = r.head.value.value().item();
  out.advantage = copy(r.head.advantage);
  out.representation = copy(r.graph.representation);
  for (ad::Var a : r.graph.attention) out.attention.push_back(a.value());
  return out;
}

std::vector<double> q_values(const ad::ParameterSet& params, const sim::JointState& state) {
  ad::Tape tape(ad::GradMode::disabled);
  ParameterBinder bind(tape, params);
  const GraphBatch batch = make_graph_batch(state);
  const ForwardResult r = forward(bind, batch);
  const auto values = r.head.q.value().values();
  return {values.begin(), values.end()};
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("argmax of an empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace sgdqn::net

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sgdqn/ad/ops.hpp"
#include "sgdqn/ad/parameters.hpp"
#include "sgdqn/ad/tape.hpp"
#include "sgdqn/sim/state.hpp"

namespace sgdqn::net {

struct NetworkDims {
  std::size_t robot_input = sim::FullState::kFeatureDim;
  std::size_t pedestrian_input = sim::ObservableState::kFeatureDim;
  std::size_t embed_hidden = 64;
  std::size_t feature = 32;  // node width, also query/key width
  std::size_t graph_layers = 2;
  std::size_t common_hidden = 128;
  std::size_t num_actions = sim::kNumActions;
};

inline constexpr double kAttentionSlope = 0.2;

// Trainable weights of the Q-network:
//   robot_embed.{0,1}, pedestrian_embed.{0,1}      agent embedders
//   gat.<l>.{query,key,attention}                  per graph layer
//   dueling.common.{0,1}, dueling.value, dueling.advantage
// each with .weight (fan_in x fan_out) and .bias (1 x fan_out).
ad::ParameterSet make_network_parameters(std::uint64_t seed, const NetworkDims& dims = {});

// Adds embedders plus `layers` attention layers under `prefix` (e.g. "" or
// "predictor."). Used by both the Q-network and the crowd predictor.
void add_graph_parameters(ad::ParameterSet& params, const std::string& prefix,
                          const NetworkDims& dims, std::size_t layers, std::mt19937_64& rng);
void add_linear(ad::ParameterSet& params, const std::string& name, std::size_t fan_in,
                std::size_t fan_out, std::mt19937_64& rng);

// Network inputs for B graphs that all contain N pedestrians.
struct GraphBatch {
  ad::Tensor robot;        // B x 9
  ad::Tensor pedestrians;  // (B*N) x 5, graph-major
  std::size_t graphs = 0;
  std::size_t pedestrians_per_graph = 0;

  std::size_t nodes_per_graph() const { return pedestrians_per_graph + 1; }

  // Validates feature widths and row counts.
  static GraphBatch from_features(ad::Tensor robot, ad::Tensor pedestrians,
                                  std::size_t pedestrians_per_graph);
};

// States must be robot-centric and share one pedestrian count.
GraphBatch make_graph_batch(std::span<const sim::JointState* const> states);
GraphBatch make_graph_batch(const sim::JointState& state);

// Binds parameters to a tape once each. Mutable sets feed gradients back when
// the tape records them; const sets are read-only.
class ParameterBinder {
 public:
  ParameterBinder(ad::Tape& tape, ad::ParameterSet& params);
  ParameterBinder(ad::Tape& tape, const ad::ParameterSet& params);

  ad::Var operator()(std::string_view name);
  bool has(std::string_view name) const;
  ad::Tape& tape() { return tape_; }

 private:
  ad::Tape& tape_;
  const ad::ParameterSet* read_;
  ad::ParameterSet* write_;
  std::vector<std::pair<std::string, ad::Var>> bound_;
};

// x * W + b for the parameters `<name>.weight` / `<name>.bias`.
ad::Var linear(ParameterBinder& bind, const std::string& name, ad::Var x);

// Node features h^0 for every graph: robot node first, then pedestrians.
// The batch inputs are copied onto the tape, so `batch` may die before backward.
ad::Var embed_agents(ParameterBinder& bind, const std::string& prefix, const GraphBatch& batch);

struct AttentionLayerOutput {
  ad::Var features;   // (B*n) x feature
  ad::Var attention;  // (B*n) x n, row i holds alpha_i.
};

// One social-attention layer over fully connected graphs (self loops
// included): e_ij = LeakyReLU(a(q_i | k_j)), alpha = softmax_j(e),
// h'_i = ReLU(sum_j alpha_ij h_j).
AttentionLayerOutput attention_layer(ParameterBinder& bind, const std::string& prefix,
                                     std::size_t layer, ad::Var features,
                                     std::size_t nodes_per_graph);

struct GraphOutput {
  ad::Var representation;             // B x feature, sum of robot rows over layers
  std::vector<ad::Var> node_features;  // h^0 .. h^L
  std::vector<ad::Var> attention;      // per layer
};

GraphOutput graph_representation(ParameterBinder& bind, const GraphBatch& batch);

struct DuelingOutput {
  ad::Var q;          // B x actions
  ad::Var value;      // B x 1
  ad::Var advantage;  // B x actions
};

DuelingOutput dueling_head(ParameterBinder& bind, ad::Var representation);

struct ForwardResult {
  GraphOutput graph;
  DuelingOutput head;
};

ForwardResult forward(ParameterBinder& bind, const GraphBatch& batch);

// Plain-value evaluation of one robot-centric state.
struct Evaluation {
  std::vector<double> q;
  double value = 0.0;
  std::vector<double> advantage;
  std::vector<double> representation;
  std::vector<ad::Tensor> attention;  // n x n per layer
};

Evaluation evaluate(const ad::ParameterSet& params, const sim::JointState& state);
std::vector<double> q_values(const ad::ParameterSet& params, const sim::JointState& state);

// Index of the largest entry; ties resolve to the lower index.
std::size_t argmax(std::span<const double> values);

}  // namespace sgdqn::net

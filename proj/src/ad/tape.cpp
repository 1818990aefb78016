#include "sgdqn/ad/tape.hpp"

#include <algorithm>

#include "sgdqn/errors.hpp"

namespace sgdqn::ad {

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::constant_ref(const Tensor& value) {
  Node node;
  node.ref = &value;
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Tensor& param) {
  Node node;
  node.ref = &param;
  if (grad_enabled() && param.requires_grad()) {
    node.sink = &param;
    node.needs_grad = true;
  }
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& node = nodes_[id];
  return node.ref != nullptr ? *node.ref : node.owned;
}

std::span<double> Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(value(id).size(), 0.0);
  return node.grad;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  Node node;
  node.owned = std::move(value);
  if (grad_enabled()) {
    for (const Var& in : inputs) {
      if (in.tape != this) throw InvalidArgument("Tape::record: input belongs to another tape");
      if (nodes_[in.id].needs_grad) node.needs_grad = true;
    }
  }
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw InvalidArgument("Tape::backward: loss belongs to another tape");
  if (value(loss.id).size() != 1) {
    throw InvalidArgument("Tape::backward: loss must be scalar, got shape " +
                          value(loss.id).shape().str());
  }
  if (consumed_) {
    throw InvalidState("Tape::backward: gradients already accumulated; reset the tape first");
  }
  consumed_ = true;
  if (!nodes_[loss.id].needs_grad) return;

  grad_buffer(loss.id)[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.needs_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(*this, id);
    if (node.sink != nullptr) {
      auto dst = node.sink->grad();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += node.grad[i];
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  consumed_ = false;
}

}  // namespace sgdqn::ad

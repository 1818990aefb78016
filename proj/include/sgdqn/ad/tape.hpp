#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "sgdqn/ad/tensor.hpp"

namespace sgdqn::ad {

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

enum class GradMode { enabled, disabled };

// Linear record of primitive operations. Node ids are assigned in recording
// order, which is a topological order; backward walks it in reverse exactly
// once. A tape may be used for backward only once until reset().
class Tape {
 public:
  // Called during backward with the node's own id; must accumulate
  // vector-Jacobian products into the grad buffers of the node's inputs.
  using Backward = std::function<void(Tape&, std::size_t)>;

  explicit Tape(GradMode mode = GradMode::enabled) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Owned constant; never receives gradient.
  Var constant(Tensor value);
  // Borrowed constant; `value` must outlive the tape.
  Var constant_ref(const Tensor& value);
  // Borrowed leaf. When the tape records gradients and `param` requires them,
  // backward() adds d(loss)/d(param) into param.grad().
  Var parameter(Tensor& param);

  const Tensor& value(std::size_t id) const;
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  bool grad_enabled() const { return mode_ == GradMode::enabled; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient of the last backward() with respect to node `id` (empty when the
  // node did not need one).
  std::span<const double> grad(std::size_t id) const { return nodes_[id].grad; }

  // Grad buffer of a node, allocated on first use. Only valid during backward.
  std::span<double> grad_buffer(std::size_t id);

  // Records the output of a primitive. The node needs a gradient if any
  // input does; `backward` is dropped otherwise.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);

  // Reverse-mode sweep from a 1x1 loss. Throws InvalidArgument on a
  // non-scalar loss and InvalidState when called twice without reset().
  void backward(Var loss);

  // Drops every node.
  void reset();

 private:
  struct Node {
    Tensor owned;
    const Tensor* ref = nullptr;
    Tensor* sink = nullptr;
    bool needs_grad = false;
    std::vector<double> grad;
    Backward backward;
  };

  GradMode mode_;
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace sgdqn::ad

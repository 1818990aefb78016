#include "sgdqn/ad/adam.hpp"

#include <cmath>

#include "sgdqn/errors.hpp"

namespace sgdqn::ad {

AdamState make_adam_state(const ParameterSet& params, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  for (const auto& e : params.entries()) {
    state.first_moment.emplace_back(e.tensor.size(), 0.0);
    state.second_moment.emplace_back(e.tensor.size(), 0.0);
  }
  return state;
}

void adam_step(ParameterSet& params, AdamState& state) {
  auto& entries = params.entries();
  if (state.first_moment.size() != entries.size()) {
    throw ShapeError("adam_step: optimizer state has " + std::to_string(state.first_moment.size()) +
                     " slots for " + std::to_string(entries.size()) + " parameters");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t p = 0; p < entries.size(); ++p) {
    Tensor& param = entries[p].tensor;
    auto grad = param.grad();
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    if (grad.size() != param.size() || m.size() != param.size()) {
      throw ShapeError("adam_step: gradient or moment size mismatch for '" + entries[p].name + "'");
    }
    auto values = param.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace sgdqn::ad

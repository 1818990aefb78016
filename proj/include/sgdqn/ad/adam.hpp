#pragma once

#include <cstdint>
#include <vector>

#include "sgdqn/ad/parameters.hpp"

namespace sgdqn::ad {

struct AdamState {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

AdamState make_adam_state(const ParameterSet& params, double learning_rate);

// One bias-corrected Adam update from the gradients currently stored in
// `params`. Gradients are left untouched.
void adam_step(ParameterSet& params, AdamState& state);

}  // namespace sgdqn::ad

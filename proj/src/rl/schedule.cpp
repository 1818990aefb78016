#include "sgdqn/rl/schedule.hpp"

#include <cmath>
#include <string>

#include "sgdqn/errors.hpp"

namespace sgdqn::rl {

double epsilon_at(std::size_t episode, const EpsilonSchedule& schedule) {
  if (episode >= schedule.decay_episodes) return schedule.end;
  const double fraction = static_cast<double>(episode) / static_cast<double>(schedule.decay_episodes);
  return schedule.start + (schedule.end - schedule.start) * fraction;
}

double discount_factor_per_step(double gamma, double time_step, double preferred_speed) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw InvalidArgument("train.gamma must lie in (0, 1), got " + std::to_string(gamma));
  }
  if (time_step < 0.0 || !(preferred_speed > 0.0)) {
    throw InvalidArgument("discount needs time_step >= 0 and preferred speed > 0");
  }
  return std::pow(gamma, time_step * preferred_speed);
}

}  // namespace sgdqn::rl

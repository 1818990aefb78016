#include "sgdqn/sim/orca.hpp"

#include <algorithm>
#include <cmath>

namespace sgdqn::sim {
namespace {

constexpr double kEpsilon = 1e-9;

// Optimises along constraint `line_no` subject to constraints [0, line_no).
bool solve_on_line(std::span<const HalfPlane> lines, std::size_t line_no, double radius,
                   Vec2 opt_velocity, bool direction_opt, Vec2& result) {
  const HalfPlane& line = lines[line_no];
  const double dot_product = dot(line.point, line.direction);
  const double discriminant = dot_product * dot_product + radius * radius - norm_sq(line.point);
  if (discriminant < 0.0) return false;  // max speed circle misses the line

  const double sqrt_discriminant = std::sqrt(discriminant);
  double t_left = -dot_product - sqrt_discriminant;
  double t_right = -dot_product + sqrt_discriminant;

  for (std::size_t i = 0; i < line_no; ++i) {
    const double denominator = det(line.direction, lines[i].direction);
    const double numerator = det(lines[i].direction, line.point - lines[i].point);
    if (std::fabs(denominator) <= kEpsilon) {
      if (numerator < 0.0) return false;  // parallel and infeasible
      continue;
    }
    const double t = numerator / denominator;
    if (denominator >= 0.0) {
      t_right = std::min(t_right, t);
    } else {
      t_left = std::max(t_left, t);
    }
    if (t_left > t_right) return false;
  }

  if (direction_opt) {
    result = dot(opt_velocity, line.direction) > 0.0 ? line.point + t_right * line.direction
                                                     : line.point + t_left * line.direction;
  } else {
    const double t = dot(line.direction, opt_velocity - line.point);
    result = line.point + std::clamp(t, t_left, t_right) * line.direction;
  }
  return true;
}

// Incremental 2D LP. Returns the number of constraints satisfied before the
// first failure (== lines.size() on success).
std::size_t solve_planar(std::span<const HalfPlane> lines, double radius, Vec2 opt_velocity,
                         bool direction_opt, Vec2& result) {
  if (direction_opt) {
    result = opt_velocity * radius;
  } else if (norm_sq(opt_velocity) > radius * radius) {
    result = normalized(opt_velocity) * radius;
  } else {
    result = opt_velocity;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) > 0.0) {
      const Vec2 previous = result;
      if (!solve_on_line(lines, i, radius, opt_velocity, direction_opt, result)) {
        result = previous;
        return i;
      }
    }
  }
  return lines.size();
}

// Minimises the maximum penetration into constraints [begin, end).
void solve_least_violation(std::span<const HalfPlane> lines, std::size_t begin, double radius,
                           Vec2& result) {
  double distance = 0.0;
  std::vector<HalfPlane> projected;
  for (std::size_t i = begin; i < lines.size(); ++i) {
    if (det(lines[i].direction, lines[i].point - result) <= distance) continue;
    projected.clear();
    for (std::size_t j = 0; j < i; ++j) {
      HalfPlane line;
      const double determinant = det(lines[i].direction, lines[j].direction);
      if (std::fabs(determinant) <= kEpsilon) {
        if (dot(lines[i].direction, lines[j].direction) > 0.0) continue;  // same direction
        line.point = 0.5 * (lines[i].point + lines[j].point);
      } else {
        line.point = lines[i].point +
                     (det(lines[j].direction, lines[i].point - lines[j].point) / determinant) *
                         lines[i].direction;
      }
      line.direction = normalized(lines[j].direction - lines[i].direction);
      projected.push_back(line);
    }
    const Vec2 previous = result;
    const Vec2 outward{-lines[i].direction.y, lines[i].direction.x};
    if (solve_planar(projected, radius, outward, true, result) < projected.size()) {
      result = previous;  // numerical failure; keep the last good answer
    }
    distance = det(lines[i].direction, lines[i].point - result);
  }
}

}  // namespace

Vec2 preferred_velocity(const FullState& agent, double time_step) {
  const Vec2 to_goal = agent.goal - agent.position;
  const double distance = norm(to_goal);
  if (distance == 0.0) return {};
  const double reach = agent.preferred_speed * time_step;
  if (distance <= reach) return to_goal / time_step;
  return to_goal * (agent.preferred_speed / distance);
}

std::vector<HalfPlane> orca_constraints(const FullState& self,
                                        std::span<const ObservableState> neighbors,
                                        const OrcaParams& params) {
  std::vector<HalfPlane> lines;
  lines.reserve(neighbors.size());
  const double inv_horizon = 1.0 / params.time_horizon;
  for (const auto& other : neighbors) {
    const Vec2 relative_position = other.position - self.position;
    const Vec2 relative_velocity = self.velocity - other.velocity;
    const double dist_sq = norm_sq(relative_position);
    const double combined_radius = self.radius + other.radius;
    const double combined_radius_sq = combined_radius * combined_radius;

    HalfPlane line;
    Vec2 u;
    if (dist_sq > combined_radius_sq) {
      const Vec2 w = relative_velocity - inv_horizon * relative_position;
      const double w_length_sq = norm_sq(w);
      const double dot1 = dot(w, relative_position);
      if (dot1 < 0.0 && dot1 * dot1 > combined_radius_sq * w_length_sq) {
        // Closest boundary point lies on the truncation circle.
        const double w_length = std::sqrt(w_length_sq);
        const Vec2 unit_w = w / w_length;
        line.direction = {unit_w.y, -unit_w.x};
        u = (combined_radius * inv_horizon - w_length) * unit_w;
      } else {
        // Closest boundary point lies on one of the cone legs.
        const double leg = std::sqrt(dist_sq - combined_radius_sq);
        const Vec2 p = relative_position;
        if (det(p, w) > 0.0) {
          line.direction = Vec2{p.x * leg - p.y * combined_radius,
                                p.x * combined_radius + p.y * leg} /
                           dist_sq;
        } else {
          line.direction = -(Vec2{p.x * leg + p.y * combined_radius,
                                  -p.x * combined_radius + p.y * leg} /
                             dist_sq);
        }
        const double dot2 = dot(relative_velocity, line.direction);
        u = dot2 * line.direction - relative_velocity;
      }
    } else {
      // Already overlapping: resolve within a single step.
      const double inv_step = 1.0 / params.time_step;
      const Vec2 w = relative_velocity - inv_step * relative_position;
      const double w_length = norm(w);
      const Vec2 unit_w = w_length > 0.0 ? w / w_length : Vec2{1.0, 0.0};
      line.direction = {unit_w.y, -unit_w.x};
      u = (combined_radius * inv_step - w_length) * unit_w;
    }
    line.point = self.velocity + 0.5 * u;
    lines.push_back(line);
  }
  return lines;
}

Vec2 solve_orca_program(std::span<const HalfPlane> constraints, double max_speed,
                        Vec2 preferred) {
  Vec2 result;
  const std::size_t failed = solve_planar(constraints, max_speed, preferred, false, result);
  if (failed < constraints.size()) {
    solve_least_violation(constraints, failed, max_speed, result);
  }
  return result;
}

Vec2 orca_velocity(const FullState& self, std::span<const ObservableState> neighbors,
                   const OrcaParams& params) {
  const auto lines = orca_constraints(self, neighbors, params);
  return solve_orca_program(lines, params.max_speed,
                            preferred_velocity(self, params.time_step));
}

}  // namespace sgdqn::sim

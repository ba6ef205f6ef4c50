#include "ach/env.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ach {

MazeEnv::MazeEnv(MazeSpec spec) : spec_(std::move(spec)) {
  const auto goal = spec_.goal_cell();
  const auto [gx, gy] = spec_.cell_center(goal.first, goal.second);
  goal_x_ = gx;
  goal_y_ = gy;
}

std::vector<double> MazeEnv::reset(std::uint64_t seed) {
  rng_ = RngStream(seed);
  const auto start = spec_.start_cell();
  const auto [cx, cy] = spec_.cell_center(start.first, start.second);
  const double jitter = 0.25 * spec_.cell_size;
  state_.x = cx + rng_.uniform(-jitter, jitter);
  state_.y = cy + rng_.uniform(-jitter, jitter);
  state_.step_index = 0;
  state_.done = false;
  started_ = true;
  return observe();
}

StepResult MazeEnv::step(const std::vector<double>& action) {
  if (!started_) throw std::runtime_error("env: step before reset");
  if (state_.done) throw std::runtime_error("env: step on a done episode");
  if (action.size() != 2) throw std::runtime_error("env: action must have dim 2, got " + std::to_string(action.size()));
  for (double a : action) {
    if (!(a >= -1.0 && a <= 1.0))
      throw std::runtime_error("env: action component " + std::to_string(a) + " outside [-1, 1]");
  }

  double dx = spec_.action_scale * action[0];
  double dy = spec_.action_scale * action[1];
  if (spec_.noise_sigma > 0.0) {
    dx += spec_.noise_sigma * rng_.normal();
    dy += spec_.noise_sigma * rng_.normal();
  }
  // Each axis is tested alone from the current position; a blocked axis is
  // cancelled while the other still applies.
  if (spec_.wall_at(state_.x + dx, state_.y)) dx = 0.0;
  if (spec_.wall_at(state_.x, state_.y + dy)) dy = 0.0;
  // Both single-axis moves can be clear while their combination cuts a convex
  // corner diagonally; keep the position invariant by cancelling the move.
  if (spec_.wall_at(state_.x + dx, state_.y + dy)) {
    dx = 0.0;
    dy = 0.0;
  }
  state_.x += dx;
  state_.y += dy;
  state_.step_index += 1;

  const bool success = goal_distance() <= spec_.goal_radius;
  StepResult res;
  res.reward = spec_.step_reward + (success ? spec_.success_reward : 0.0);
  res.terminal = success;
  res.truncated = !success && state_.step_index >= spec_.max_steps;
  state_.done = res.terminal || res.truncated;
  res.obs = observe();
  return res;
}

std::vector<double> MazeEnv::observe() const {
  const double ex = static_cast<double>(spec_.width()) * spec_.cell_size;
  const double ey = static_cast<double>(spec_.height()) * spec_.cell_size;
  return {state_.x / ex, state_.y / ey};
}

double MazeEnv::goal_distance() const {
  const double dx = state_.x - goal_x_;
  const double dy = state_.y - goal_y_;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace ach

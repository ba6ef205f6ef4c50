#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ach/maze.hpp"
#include "ach/rng.hpp"

namespace ach {

struct EnvState {
  double x = 0.0;  // length units
  double y = 0.0;
  std::size_t step_index = 0;
  bool done = false;
};

struct StepResult {
  std::vector<double> obs;  // normalized next position, dim 2
  double reward = 0.0;
  bool terminal = false;   // goal reached
  bool truncated = false;  // step budget exhausted without success
  bool done() const { return terminal || truncated; }
};

// Deterministic-core point-mass maze. All stochasticity comes from the
// internal stream seeded at reset: two uniform draws for the start jitter,
// then per step two normal draws (x first, then y) for dynamics noise.
class MazeEnv {
 public:
  explicit MazeEnv(MazeSpec spec);

  // Places the agent at the start-cell center plus uniform jitter of
  // +/- 0.25 * cell_size per axis and reseeds the noise stream.
  std::vector<double> reset(std::uint64_t seed);

  // Moves by action_scale * action + noise per axis. An axis move that would
  // land in a wall when applied alone from the current position is cancelled;
  // if the surviving combined move still lands in a wall (diagonal through a
  // convex corner), both axes are cancelled. Errors if the episode is done or
  // any action component is outside [-1, 1].
  StepResult step(const std::vector<double>& action);

  const EnvState& state() const { return state_; }
  const MazeSpec& spec() const { return spec_; }
  std::vector<double> observe() const;  // position scaled to [0,1]^2
  // Distance from the current position to the goal-cell center.
  double goal_distance() const;
  std::size_t obs_dim() const { return 2; }
  std::size_t act_dim() const { return 2; }

 private:
  MazeSpec spec_;
  EnvState state_;
  RngStream rng_{0};
  double goal_x_ = 0.0;
  double goal_y_ = 0.0;
  bool started_ = false;
};

}  // namespace ach

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ach {

// Grid maze description loaded from an ASCII file: '#' wall, '.' free,
// 'S' start, 'G' goal. Positions are continuous in length units; cell (r, c)
// spans [c, c+1) x [r, r+1) scaled by cell_size, with x along columns and y
// along rows.
struct MazeSpec {
  std::vector<std::string> grid;  // row-major, all rows equal width
  double cell_size = 1.0;
  double action_scale = 0.5;  // max per-step displacement per axis
  double noise_sigma = 0.0;   // dynamics noise std in length units
  std::size_t max_steps = 120;
  double step_reward = -1.0;
  double success_reward = 0.0;
  double goal_radius = 0.5;

  std::size_t height() const { return grid.size(); }
  std::size_t width() const { return grid.empty() ? 0 : grid[0].size(); }
  bool is_wall(std::size_t r, std::size_t c) const { return grid[r][c] == '#'; }

  // Cell containing a continuous position; positions outside the grid count
  // as wall (the boundary is wall anyway).
  bool wall_at(double x, double y) const;

  std::pair<std::size_t, std::size_t> start_cell() const;  // (row, col)
  std::pair<std::size_t, std::size_t> goal_cell() const;
  // Center of a cell in length units, (x, y).
  std::pair<double, double> cell_center(std::size_t r, std::size_t c) const;
};

// Parses the "ach-maze v1" text format: a version line, `key value` scalar
// lines, a bare `grid` line, then the ASCII rows. Errors name the offending
// line or invariant (exactly one S and one G, rectangular grid, all-wall
// boundary, positive scales, goal reachable from start).
MazeSpec parse_maze(const std::string& text);
MazeSpec load_maze(const std::string& path);

// Canonical re-serialization of a spec (used for content hashing, so datasets
// record which maze produced them).
std::string maze_to_text(const MazeSpec& spec);
std::uint64_t maze_hash(const MazeSpec& spec);

// Breadth-first shortest cell path from start to goal (4-connected), both
// endpoints included. Errors if the goal is unreachable.
std::vector<std::pair<std::size_t, std::size_t>> shortest_cell_path(const MazeSpec& spec);

}  // namespace ach

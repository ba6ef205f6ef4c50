#include "ach/maze.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ach {
namespace {

constexpr const char* kMazeVersion = "ach-maze v1";

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("maze: " + msg);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &pos);
  } catch (const std::exception&) {
    fail("field '" + key + "' has non-numeric value '" + value + "'");
  }
  if (pos != value.size()) fail("field '" + key + "' has trailing junk in '" + value + "'");
  if (!std::isfinite(out)) fail("field '" + key + "' must be finite");
  return out;
}

}  // namespace

bool MazeSpec::wall_at(double x, double y) const {
  if (cell_size <= 0.0) fail("cell_size must be positive");
  const double cf = std::floor(x / cell_size);
  const double rf = std::floor(y / cell_size);
  if (cf < 0.0 || rf < 0.0) return true;
  const auto c = static_cast<std::size_t>(cf);
  const auto r = static_cast<std::size_t>(rf);
  if (r >= height() || c >= width()) return true;
  return is_wall(r, c);
}

std::pair<std::size_t, std::size_t> MazeSpec::start_cell() const {
  for (std::size_t r = 0; r < height(); ++r)
    for (std::size_t c = 0; c < width(); ++c)
      if (grid[r][c] == 'S') return {r, c};
  fail("grid has no start cell");
}

std::pair<std::size_t, std::size_t> MazeSpec::goal_cell() const {
  for (std::size_t r = 0; r < height(); ++r)
    for (std::size_t c = 0; c < width(); ++c)
      if (grid[r][c] == 'G') return {r, c};
  fail("grid has no goal cell");
}

std::pair<double, double> MazeSpec::cell_center(std::size_t r, std::size_t c) const {
  return {(static_cast<double>(c) + 0.5) * cell_size, (static_cast<double>(r) + 0.5) * cell_size};
}

MazeSpec parse_maze(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail("empty maze text");
  if (line != kMazeVersion) fail("unsupported version line '" + line + "', expected '" + std::string(kMazeVersion) + "'");

  MazeSpec spec;
  std::map<std::string, bool> seen;
  bool grid_marker = false;
  while (std::getline(in, line)) {
    if (line == "grid") {
      grid_marker = true;
      break;
    }
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key, value, extra;
    ls >> key >> value;
    if (ls >> extra) fail("scalar line '" + line + "' has more than two tokens");
    if (key.empty() || value.empty()) fail("malformed scalar line '" + line + "'");
    if (seen.count(key)) fail("duplicate field '" + key + "'");
    seen[key] = true;
    if (key == "cell_size") {
      spec.cell_size = parse_double(key, value);
    } else if (key == "action_scale") {
      spec.action_scale = parse_double(key, value);
    } else if (key == "noise_sigma") {
      spec.noise_sigma = parse_double(key, value);
    } else if (key == "max_steps") {
      const double v = parse_double(key, value);
      if (v < 1.0 || v != std::floor(v)) fail("max_steps must be a positive integer");
      spec.max_steps = static_cast<std::size_t>(v);
    } else if (key == "step_reward") {
      spec.step_reward = parse_double(key, value);
    } else if (key == "success_reward") {
      spec.success_reward = parse_double(key, value);
    } else if (key == "goal_radius") {
      spec.goal_radius = parse_double(key, value);
    } else {
      fail("unknown field '" + key + "'");
    }
  }
  if (!grid_marker) fail("missing 'grid' marker line");

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    spec.grid.push_back(line);
  }
  if (spec.grid.empty()) fail("grid has no rows");

  const std::size_t w = spec.grid[0].size();
  std::size_t n_start = 0;
  std::size_t n_goal = 0;
  for (std::size_t r = 0; r < spec.grid.size(); ++r) {
    const std::string& row = spec.grid[r];
    if (row.size() != w) fail("grid row " + std::to_string(r) + " has width " + std::to_string(row.size()) + ", expected " + std::to_string(w));
    for (std::size_t c = 0; c < row.size(); ++c) {
      const char ch = row[c];
      if (ch != '#' && ch != '.' && ch != 'S' && ch != 'G')
        fail("grid cell (" + std::to_string(r) + "," + std::to_string(c) + ") has invalid character '" + std::string(1, ch) + "'");
      if (ch == 'S') ++n_start;
      if (ch == 'G') ++n_goal;
      const bool boundary = r == 0 || c == 0 || r + 1 == spec.grid.size() || c + 1 == w;
      if (boundary && ch != '#')
        fail("boundary cell (" + std::to_string(r) + "," + std::to_string(c) + ") must be wall");
    }
  }
  if (w < 3 || spec.grid.size() < 3) fail("grid must be at least 3x3");
  if (n_start != 1) fail("grid must contain exactly one S, found " + std::to_string(n_start));
  if (n_goal != 1) fail("grid must contain exactly one G, found " + std::to_string(n_goal));

  if (spec.cell_size <= 0.0) fail("cell_size must be positive");
  if (spec.action_scale <= 0.0) fail("action_scale must be positive");
  if (spec.noise_sigma < 0.0) fail("noise_sigma must be non-negative");
  if (spec.goal_radius <= 0.0) fail("goal_radius must be positive");
  if (spec.max_steps == 0) fail("max_steps must be positive");

  shortest_cell_path(spec);  // validates reachability
  return spec;
}

MazeSpec load_maze(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_maze(buf.str());
}

std::string maze_to_text(const MazeSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  out << kMazeVersion << "\n";
  out << "cell_size " << spec.cell_size << "\n";
  out << "action_scale " << spec.action_scale << "\n";
  out << "noise_sigma " << spec.noise_sigma << "\n";
  out << "max_steps " << spec.max_steps << "\n";
  out << "step_reward " << spec.step_reward << "\n";
  out << "success_reward " << spec.success_reward << "\n";
  out << "goal_radius " << spec.goal_radius << "\n";
  out << "grid\n";
  for (const std::string& row : spec.grid) out << row << "\n";
  return out.str();
}

std::uint64_t maze_hash(const MazeSpec& spec) {
  // FNV-1a over the canonical text.
  const std::string text = maze_to_text(spec);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= static_cast<std::uint64_t>(ch);
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::pair<std::size_t, std::size_t>> shortest_cell_path(const MazeSpec& spec) {
  const std::size_t h = spec.height();
  const std::size_t w = spec.width();
  const auto start = spec.start_cell();
  const auto goal = spec.goal_cell();
  const std::size_t none = h * w;
  std::vector<std::size_t> prev(h * w, none);
  std::vector<char> visited(h * w, 0);
  auto idx = [w](std::size_t r, std::size_t c) { return r * w + c; };

  std::deque<std::pair<std::size_t, std::size_t>> queue;
  queue.push_back(start);
  visited[idx(start.first, start.second)] = 1;
  while (!queue.empty()) {
    const auto [r, c] = queue.front();
    queue.pop_front();
    if (r == goal.first && c == goal.second) break;
    const std::pair<std::size_t, std::size_t> next[4] = {
        {r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& [nr, nc] : next) {
      if (nr >= h || nc >= w) continue;  // size_t wraps negative to huge
      if (spec.is_wall(nr, nc) || visited[idx(nr, nc)]) continue;
      visited[idx(nr, nc)] = 1;
      prev[idx(nr, nc)] = idx(r, c);
      queue.push_back({nr, nc});
    }
  }
  if (!visited[idx(goal.first, goal.second)]) fail("goal is not reachable from start");

  std::vector<std::pair<std::size_t, std::size_t>> path;
  std::size_t cur = idx(goal.first, goal.second);
  while (cur != none) {
    path.push_back({cur / w, cur % w});
    cur = prev[cur];
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace ach

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ach/env.hpp"
#include "ach/maze.hpp"
#include "ach/rng.hpp"

using namespace ach;

namespace {

std::string tiny_maze_text(double action_scale = 0.5, double noise_sigma = 0.0,
                           std::size_t max_steps = 10, double goal_radius = 0.5) {
  std::string text = "ach-maze v1\n";
  text += "cell_size 1.0\n";
  text += "action_scale " + std::to_string(action_scale) + "\n";
  text += "noise_sigma " + std::to_string(noise_sigma) + "\n";
  text += "max_steps " + std::to_string(max_steps) + "\n";
  text += "step_reward -1.0\n";
  text += "success_reward 5.0\n";
  text += "goal_radius " + std::to_string(goal_radius) + "\n";
  text += "grid\n#####\n#S.G#\n#####\n";
  return text;
}

// Start cell with a wall immediately east; goal reached by going south.
const char* kWallEastText =
    "ach-maze v1\n"
    "cell_size 1.0\n"
    "action_scale 1.0\n"
    "noise_sigma 0.0\n"
    "max_steps 20\n"
    "step_reward -1.0\n"
    "success_reward 0.0\n"
    "goal_radius 0.5\n"
    "grid\n"
    "###\n"
    "#S#\n"
    "#.#\n"
    "#G#\n"
    "###\n";

// Both single-axis moves from the start stay free but the diagonal lands in
// the wall cell kitty-corner to the start.
const char* kConvexCornerText =
    "ach-maze v1\n"
    "cell_size 1.0\n"
    "action_scale 1.0\n"
    "noise_sigma 0.0\n"
    "max_steps 20\n"
    "step_reward -1.0\n"
    "success_reward 0.0\n"
    "goal_radius 0.5\n"
    "grid\n"
    "#####\n"
    "#S.##\n"
    "#.###\n"
    "#G###\n"
    "#####\n";

}  // namespace

TEST_CASE("parse_maze reads the shipped corridor maze") {
  const MazeSpec spec = load_maze(std::string(ACH_DATA_DIR) + "/mazes/corridor-l.maze");
  CHECK(spec.width() == 16);
  CHECK(spec.height() == 7);
  CHECK(spec.cell_size == 1.0);
  CHECK(spec.action_scale == 0.5);
  CHECK(spec.noise_sigma == 0.05);
  CHECK(spec.max_steps == 120);
  CHECK(spec.step_reward == -1.0);
  CHECK(spec.success_reward == 0.0);
  CHECK(spec.goal_radius == 0.5);
  CHECK(spec.start_cell() == std::pair<std::size_t, std::size_t>{1, 1});
  CHECK(spec.goal_cell() == std::pair<std::size_t, std::size_t>{5, 14});
}

TEST_CASE("maze canonical text round-trips and hashes stably") {
  const MazeSpec spec = load_maze(std::string(ACH_DATA_DIR) + "/mazes/corridor-l.maze");
  const std::string text = maze_to_text(spec);
  const MazeSpec again = parse_maze(text);
  CHECK(again.grid == spec.grid);
  CHECK(again.max_steps == spec.max_steps);
  CHECK(maze_hash(again) == maze_hash(spec));

  MazeSpec tweaked = spec;
  tweaked.noise_sigma = 0.06;
  CHECK(maze_hash(tweaked) != maze_hash(spec));
}

TEST_CASE("parse_maze rejects malformed input") {
  CHECK_THROWS(parse_maze(""));
  CHECK_THROWS(parse_maze("ach-maze v2\ngrid\n###\n#S#\n###\n"));

  const std::string good = tiny_maze_text();
  // Each mutation breaks exactly one invariant.
  auto replace = [&](const std::string& from, const std::string& to) {
    std::string t = good;
    t.replace(t.find(from), from.size(), to);
    return t;
  };
  CHECK_THROWS(parse_maze(replace("#S.G#", "#SSG#")));          // two starts
  CHECK_THROWS(parse_maze(replace("#S.G#", "#S..#")));          // no goal
  CHECK_THROWS(parse_maze(replace("#S.G#", "#S.G")));           // ragged row
  CHECK_THROWS(parse_maze(replace("#S.G#", ".S.G#")));          // boundary hole
  CHECK_THROWS(parse_maze(replace("#S.G#", "#SxG#")));          // bad character
  CHECK_THROWS(parse_maze(replace("goal_radius", "goal_size")));  // unknown key
  CHECK_THROWS(parse_maze(replace("action_scale 0.5", "action_scale -1")));
  CHECK_THROWS(parse_maze(replace("max_steps 10", "max_steps 2.5")));
  CHECK_THROWS(parse_maze(replace("noise_sigma 0.0", "noise_sigma -0.1")));
  CHECK_THROWS(parse_maze(replace("grid\n", "rows\n")));        // missing marker
  CHECK_THROWS(parse_maze(replace("cell_size 1.0", "cell_size nope")));
  CHECK_THROWS(parse_maze(good + "cell_size 1.0\n"));  // grid chars invalid
  // Goal sealed off from start.
  CHECK_THROWS(parse_maze(replace("#S.G#", "#S#G#")));
}

TEST_CASE("shortest_cell_path walks adjacent free cells start to goal") {
  const MazeSpec spec = load_maze(std::string(ACH_DATA_DIR) + "/mazes/corridor-l.maze");
  const auto path = shortest_cell_path(spec);
  REQUIRE(path.size() == 18);  // 13 east moves + 4 south moves + both endpoints
  CHECK(path.front() == spec.start_cell());
  CHECK(path.back() == spec.goal_cell());
  for (std::size_t i = 0; i < path.size(); ++i) {
    CHECK_FALSE(spec.is_wall(path[i].first, path[i].second));
    if (i > 0) {
      const std::size_t dr = path[i].first > path[i - 1].first ? path[i].first - path[i - 1].first
                                                               : path[i - 1].first - path[i].first;
      const std::size_t dc = path[i].second > path[i - 1].second
                                 ? path[i].second - path[i - 1].second
                                 : path[i - 1].second - path[i].second;
      CHECK(dr + dc == 1);
    }
  }

  const MazeSpec snake = load_maze(std::string(ACH_DATA_DIR) + "/mazes/snake-5.maze");
  const auto spath = shortest_cell_path(snake);
  CHECK(spath.size() == 34);
  CHECK(spath.front() == snake.start_cell());
  CHECK(spath.back() == snake.goal_cell());
}

TEST_CASE("wall_at covers cell interiors and everything outside the grid") {
  const MazeSpec spec = parse_maze(tiny_maze_text());
  CHECK_FALSE(spec.wall_at(1.5, 1.5));  // start cell center
  CHECK_FALSE(spec.wall_at(3.5, 1.5));  // goal cell center
  CHECK(spec.wall_at(0.5, 0.5));        // boundary wall
  CHECK(spec.wall_at(-0.1, 1.5));       // outside west
  CHECK(spec.wall_at(5.1, 1.5));        // outside east
  CHECK(spec.wall_at(1.5, -2.0));
  CHECK(spec.wall_at(1.5, 99.0));
}

TEST_CASE("reset is deterministic, jittered within bounds, and seed-sensitive") {
  MazeEnv env(parse_maze(tiny_maze_text()));
  const auto obs_a = env.reset(123);
  const EnvState s_a = env.state();
  const auto obs_b = env.reset(123);
  const EnvState s_b = env.state();
  CHECK(s_a.x == s_b.x);
  CHECK(s_a.y == s_b.y);
  CHECK(obs_a == obs_b);
  CHECK(s_a.step_index == 0);
  CHECK_FALSE(s_a.done);

  std::set<std::pair<double, double>> positions;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    env.reset(seed);
    const EnvState st = env.state();
    CHECK(std::abs(st.x - 1.5) <= 0.25);
    CHECK(std::abs(st.y - 1.5) <= 0.25);
    CHECK_FALSE(env.spec().wall_at(st.x, st.y));
    positions.insert({st.x, st.y});
  }
  CHECK(positions.size() >= 99);
}

TEST_CASE("observation is the position scaled to the unit square") {
  MazeEnv env(load_maze(std::string(ACH_DATA_DIR) + "/mazes/corridor-l.maze"));
  env.reset(5);
  const auto obs = env.observe();
  REQUIRE(obs.size() == 2);
  CHECK(obs[0] == env.state().x / 16.0);
  CHECK(obs[1] == env.state().y / 7.0);
}

TEST_CASE("zero action with zero noise leaves the position bitwise unchanged") {
  MazeEnv env(parse_maze(tiny_maze_text()));
  env.reset(9);
  const EnvState before = env.state();
  const StepResult res = env.step({0.0, 0.0});
  CHECK(env.state().x == before.x);
  CHECK(env.state().y == before.y);
  CHECK(res.reward == -1.0);
  CHECK_FALSE(res.terminal);
  CHECK_FALSE(res.truncated);
  CHECK(env.state().step_index == 1);
}

TEST_CASE("free-space move adds exactly action_scale times the action") {
  MazeEnv env(parse_maze(tiny_maze_text()));
  env.reset(9);
  const EnvState before = env.state();
  env.step({1.0, 0.0});
  CHECK(env.state().x == before.x + 0.5);
  CHECK(env.state().y == before.y);
  env.reset(9);
  env.step({-0.5, 0.0});
  CHECK(env.state().x == before.x - 0.25);
}

TEST_CASE("a move into a wall is cancelled on that axis only") {
  MazeEnv env(parse_maze(kWallEastText));
  env.reset(4);
  const EnvState before = env.state();

  SUBCASE("pure east into the wall: nothing moves") {
    const StepResult res = env.step({1.0, 0.0});
    CHECK(env.state().x == before.x);
    CHECK(env.state().y == before.y);
    CHECK(res.reward == -1.0);
  }
  SUBCASE("diagonal: the east component dies, the south component survives") {
    env.step({1.0, 1.0});
    CHECK(env.state().x == before.x);
    CHECK(env.state().y == before.y + 1.0);
  }
  SUBCASE("west into the other wall is likewise cancelled") {
    env.step({-1.0, 0.0});
    CHECK(env.state().x == before.x);
  }
}

TEST_CASE("a diagonal through a convex corner is fully cancelled") {
  MazeEnv env(parse_maze(kConvexCornerText));
  env.reset(11);
  const EnvState before = env.state();
  // Each axis alone is free (east cell and south cell are open) but the
  // combined move would land kitty-corner inside the wall.
  CHECK_FALSE(env.spec().wall_at(before.x + 1.0, before.y));
  CHECK_FALSE(env.spec().wall_at(before.x, before.y + 1.0));
  CHECK(env.spec().wall_at(before.x + 1.0, before.y + 1.0));
  env.step({1.0, 1.0});
  CHECK(env.state().x == before.x);
  CHECK(env.state().y == before.y);
}

TEST_CASE("goal proximity ends the episode with the success bonus") {
  MazeEnv env(parse_maze(tiny_maze_text()));
  env.reset(21);
  StepResult res;
  std::size_t steps = 0;
  do {
    res = env.step({1.0, 0.0});
    ++steps;
  } while (!res.done() && steps < 10);
  CHECK(res.terminal);
  CHECK_FALSE(res.truncated);
  CHECK(res.reward == -1.0 + 5.0);
  CHECK(steps <= 6);
  CHECK(env.state().done);
  CHECK(env.goal_distance() <= 0.5);
}

TEST_CASE("an episode that never succeeds returns exactly minus max_steps") {
  MazeEnv env(parse_maze(tiny_maze_text()));
  env.reset(3);
  double ret = 0.0;
  StepResult res;
  for (std::size_t i = 0; i < 10; ++i) {
    res = env.step({0.0, 0.0});
    ret += res.reward;
  }
  CHECK(ret == -10.0);
  CHECK(res.truncated);
  CHECK_FALSE(res.terminal);
  CHECK(env.state().done);
}

TEST_CASE("stepping a done episode or before reset is an error") {
  MazeEnv fresh(parse_maze(tiny_maze_text()));
  CHECK_THROWS(fresh.step({0.0, 0.0}));

  MazeEnv env(parse_maze(tiny_maze_text()));
  env.reset(3);
  for (std::size_t i = 0; i < 10; ++i) env.step({0.0, 0.0});
  CHECK_THROWS(env.step({0.0, 0.0}));
}

TEST_CASE("out-of-range or misshapen actions are errors") {
  MazeEnv env(parse_maze(tiny_maze_text()));
  env.reset(3);
  CHECK_THROWS(env.step({1.5, 0.0}));
  CHECK_THROWS(env.step({0.0, -1.0001}));
  CHECK_THROWS(env.step({std::nan(""), 0.0}));
  CHECK_THROWS(env.step({0.0}));
  CHECK_THROWS(env.step({0.0, 0.0, 0.0}));
}

TEST_CASE("noiseless dynamics replay bitwise over a thousand steps") {
  const MazeSpec spec = parse_maze(tiny_maze_text(0.1, 0.0, 1000, 0.05));
  RngStream action_rng(77);
  std::vector<std::vector<double>> actions;
  for (std::size_t i = 0; i < 1000; ++i)
    actions.push_back({action_rng.uniform(-1.0, 1.0), action_rng.uniform(-1.0, 1.0)});

  auto rollout = [&](std::vector<double>& xs, std::vector<double>& ys) {
    MazeEnv env(spec);
    env.reset(55);
    for (const auto& a : actions) {
      if (env.state().done) break;
      env.step(a);
      xs.push_back(env.state().x);
      ys.push_back(env.state().y);
    }
  };
  std::vector<double> x1, y1, x2, y2;
  rollout(x1, y1);
  rollout(x2, y2);
  CHECK(x1.size() == 1000);  // tiny goal radius, drunkard's walk: no success
  CHECK(x1 == x2);
  CHECK(y1 == y2);
}

TEST_CASE("the agent never occupies a wall under random action fuzzing") {
  MazeEnv env(load_maze(std::string(ACH_DATA_DIR) + "/mazes/corridor-l.maze"));  // noise_sigma 0.05
  RngStream rng(31337);
  env.reset(rng.next_u64());
  std::size_t violations = 0;
  for (std::size_t i = 0; i < 100000; ++i) {
    if (env.state().done) env.reset(rng.next_u64());
    env.step({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    if (env.spec().wall_at(env.state().x, env.state().y)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("same-seed resets give identical noisy trajectories") {
  MazeEnv env(load_maze(std::string(ACH_DATA_DIR) + "/mazes/snake-5.maze"));
  auto run = [&](std::uint64_t seed) {
    std::vector<double> trace;
    env.reset(seed);
    for (std::size_t i = 0; i < 50 && !env.state().done; ++i) {
      env.step({0.3, 0.1});
      trace.push_back(env.state().x);
      trace.push_back(env.state().y);
    }
    return trace;
  };
  CHECK(run(8) == run(8));
  CHECK(run(8) != run(9));
}

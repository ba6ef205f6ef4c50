#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ach/maze.hpp"
#include "ach/segment.hpp"

namespace ach {

// In-memory transition log backed by an NDJSON file. The first line is a
// header object {version, obs_dim, act_dim, count, spec_hash}; every further
// line is one transition with the exact field names of `Transition`. Reading
// a file whose version differs from the current writer is a hard error.
class Dataset : public TransitionSource {
 public:
  Dataset() = default;
  Dataset(std::size_t obs_dim, std::size_t act_dim, std::uint64_t spec_hash)
      : obs_dim_(obs_dim), act_dim_(act_dim), spec_hash_(spec_hash) {}

  std::size_t size() const override { return items_.size(); }
  const Transition& get(std::size_t i) const override;
  bool linked(std::size_t i) const override;

  void add(Transition tr);
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t act_dim() const { return act_dim_; }
  std::uint64_t spec_hash() const { return spec_hash_; }

  void save(const std::string& path) const;
  static Dataset load(const std::string& path);

 private:
  std::size_t obs_dim_ = 2;
  std::size_t act_dim_ = 2;
  std::uint64_t spec_hash_ = 0;
  std::vector<Transition> items_;
};

struct CollectConfig {
  double action_noise = 0.3;   // std of the per-component action noise
  std::size_t episodes = 100;
  // Proportional gain toward the next waypoint. Frozen after a one-time sweep
  // on corridor-l at noise 0.3: 0.16 -> ~0.2 success, 0.19 -> ~0.72,
  // 0.22 -> ~0.98. The frozen value keeps the collector suboptimal while
  // still producing plenty of successful demonstrations.
  double gain = 0.19;
  double advance_radius_cells = 0.4;  // waypoint switch distance, in cells
};

struct CollectStats {
  std::size_t episodes = 0;
  std::size_t successes = 0;
  std::size_t transitions = 0;
  double success_rate() const {
    return episodes == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(episodes);
  }
};

// Runs a proportional controller along `waypoints` (cell coordinates,
// typically shortest_cell_path(spec)): each step targets the first waypoint
// farther than the advance radius and plays
// clamp(gain * (waypoint - position) / action_scale + noise). Episode e uses
// env seed derived from (seed, "collect.env", e) and a matching per-episode
// action-noise stream, so the dataset is a pure function of (spec, cfg, seed).
CollectStats scripted_collect(const MazeSpec& spec,
                              const std::vector<std::pair<std::size_t, std::size_t>>& waypoints,
                              const CollectConfig& cfg, std::uint64_t seed, Dataset& out);

}  // namespace ach

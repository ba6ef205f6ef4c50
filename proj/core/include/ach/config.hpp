#pragma once

#include <cstdint>
#include <string>

#include "ach/chunking.hpp"
#include "ach/critic.hpp"
#include "ach/policy.hpp"

namespace ach {

// Everything a training run needs, resolvable from (profile defaults, config
// file, environment, command-line flags) in that precedence order. The
// serialized form is a flat "key value" document whose keys mirror these
// field names exactly.
struct RunConfig {
  // Objective hyperparameters.
  std::size_t h = 9;         // max chunk index; h+1 actions per chunk
  double beta = 1.0;         // length-softmax inverse temperature
  double alpha = 100.0;      // distillation (behavior-cloning) coefficient
  double gamma = 0.99;
  double tau = 0.005;        // Polyak rate for the target critic
  std::size_t flow_steps = 10;

  // Optimization.
  double lr = 1e-3;
  std::size_t batch = 12;
  std::size_t offline_steps = 20000;
  std::size_t online_steps = 30000;
  std::size_t utd = 1;  // update rounds per online environment step

  // Run identity and interaction.
  std::uint64_t seed = 0;
  std::string mode = "soft";  // soft | greedy | random | uniform | fixed-<N>
  std::size_t eval_every = 2500;
  std::size_t eval_episodes = 20;
  std::size_t log_every = 100;
  std::string profile = "desk";  // paper | desk
  std::string maze = "data/mazes/corridor-l.maze";

  // Replay.
  std::size_t replay_capacity = 200000;
  bool symmetric_replay = false;       // 50/50 offline/online sampling
  bool update_on_commit_only = false;  // update only on chunk-commit steps

  // Network sizes (profile defaults, individually overridable). The desk
  // profile runs a single critic; the paper profile keeps the usual pair.
  std::size_t mlp_width = 24;
  std::size_t mlp_depth = 2;
  std::size_t d_model = 12;
  std::size_t n_heads = 2;
  std::size_t n_blocks = 1;
  std::size_t ff_dim = 24;
  std::size_t ensemble = 1;

  PolicyConfig policy_config(std::size_t obs_dim, std::size_t act_dim) const;
  CriticConfig critic_config(std::size_t obs_dim, std::size_t act_dim) const;
  // Length selection for training-time weights and online acting.
  LengthSelectConfig select_config() const;
  // Length selection for evaluation rollouts: fixed-length runs evaluate at
  // their fixed length (that is the baseline being measured); every adaptive
  // mode evaluates greedily.
  LengthSelectConfig eval_select_config() const;
};

// Baseline values for a named profile ("paper" or "desk"). Errors on any
// other name.
RunConfig profile_defaults(const std::string& profile);

// Applies "key value" lines to `base` ('#' comments and blank lines
// ignored). A "profile" key resets every profile-dependent field first, so
// later keys override it regardless of line order. Unknown keys and
// malformed values are errors naming the key.
RunConfig parse_config(const std::string& text, const RunConfig& base);
RunConfig load_config(const std::string& path, const RunConfig& base);

// Applies a single "key=value" or "key value" override.
void apply_config_override(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical serialization: every field, one "key value" line, fixed order,
// round-trip exact.
std::string serialize_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

// Validates invariants; throws naming the first violated field.
void validate_config(const RunConfig& cfg);

}  // namespace ach

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ach/param_store.hpp"
#include "ach/rng.hpp"

namespace ach {

// Run state persisted beside the four parameter stores: enough to identify
// what produced the checkpoint and to replay its random streams.
struct CheckpointState {
  std::uint64_t global_step = 0;
  std::uint64_t config_hash = 0;
  std::map<std::string, RngStream::State> rng_states;
};

struct Checkpoint {
  ParamStore behavior;
  ParamStore policy;
  ParamStore critic;
  ParamStore critic_target;
  CheckpointState state;
};

// Writes `dir/<store>.manifest` + `dir/<store>.blob` for each of the four
// stores plus `dir/state.json`, creating the directory if needed.
void save_checkpoint(const std::string& dir, const ParamStore& behavior, const ParamStore& policy,
                     const ParamStore& critic, const ParamStore& critic_target,
                     const CheckpointState& state);

// Loads all four stores and the run state; version mismatch is a hard error.
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace ach

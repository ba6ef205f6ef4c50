#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ach/config.hpp"
#include "ach/critic.hpp"
#include "ach/dataset.hpp"
#include "ach/env.hpp"
#include "ach/maze.hpp"
#include "ach/metrics.hpp"
#include "ach/param_store.hpp"
#include "ach/policy.hpp"
#include "ach/replay.hpp"
#include "ach/rng.hpp"

namespace ach {

struct EvalSummary {
  double success_rate = 0.0;
  double mean_return = 0.0;
  double mean_steps = 0.0;
  double mean_chunk_len = 0.0;  // mean committed length over all commits
};

// The full training loop: offline pre-training on a replay seeded with a
// static dataset, then online fine-tuning that interleaves acting and
// updates. Each update round steps the behavior flow, the critic, and the
// one-step policy (in that fixed order) and then blends the target critic.
// Every random draw comes from a named stream derived from the run seed, so
// identical (config, dataset) pairs produce bitwise-identical runs.
class Trainer {
 public:
  Trainer(const RunConfig& cfg, const MazeSpec& spec);

  // Copies a transition source (typically a loaded Dataset) into the replay
  // buffer and remembers the offline boundary for symmetric sampling.
  void seed_replay(const TransitionSource& source);

  // Offline phase: offline_steps update rounds sampled from the seeded
  // replay. Errors if the replay is empty and offline_steps > 0.
  void run_offline();

  // Online phase: online_steps environment steps on the spec's maze,
  // acting per the config mode and updating utd times per step.
  void run_online();

  // Evaluation rollouts at the current parameters (greedy length selection,
  // or the fixed length for fixed-mode runs), logged under the current
  // phase. Uses dedicated streams, so it never perturbs training.
  EvalSummary evaluate();

  void save(const std::string& dir) const;

  const RunConfig& config() const { return cfg_; }
  const MazeSpec& maze() const { return spec_; }
  const MetricLog& metrics() const { return log_; }
  ReplayBuffer& replay() { return replay_; }
  std::uint64_t global_step() const { return global_step_; }
  // Update rounds completed (the critic steps once per round).
  std::uint64_t updates_done() const { return critic_t_; }
  std::size_t discarded_actions() const;
  // Actions still buffered from the last committed chunk.
  std::size_t pending_actions() const { return act_buffer_.size(); }

  ParamStore& behavior() { return behavior_; }
  ParamStore& policy() { return policy_; }
  ParamStore& critic() { return critic_; }
  ParamStore& critic_target() { return critic_target_; }

  // Where the diagnostic dump lands if a loss goes non-finite.
  void set_dump_path(const std::string& path) { dump_path_ = path; }

 private:
  void train_iteration();
  std::vector<TransitionSegment> sample_batch();
  void write_loss_dump(const char* loss_name, const std::string& value_text,
                       std::uint64_t sampler_counter_before) const;
  double checked(double value, const char* loss_name, std::uint64_t sampler_counter_before);
  // Runs one loss computation; a non-finite result or an exception thrown
  // inside it produces the diagnostic dump before propagating.
  template <typename Fn>
  double guarded(const char* loss_name, std::uint64_t sampler_counter_before, Fn&& fn) {
    double value = 0.0;
    try {
      value = fn();
    } catch (const std::exception& e) {
      write_loss_dump(loss_name, e.what(), sampler_counter_before);
      throw;
    }
    return checked(value, loss_name, sampler_counter_before);
  }

  RunConfig cfg_;
  MazeSpec spec_;
  PolicyConfig pol_cfg_;
  CriticConfig cri_cfg_;
  AdamConfig adam_;

  ParamStore behavior_;
  ParamStore policy_;
  ParamStore critic_;
  ParamStore critic_target_;

  RngHub hub_;
  ReplayBuffer replay_;
  MetricLog log_;

  std::string phase_ = "offline";
  std::string dump_path_ = "nan-dump.json";
  std::uint64_t global_step_ = 0;
  std::uint64_t behavior_t_ = 0;
  std::uint64_t critic_t_ = 0;
  std::uint64_t policy_t_ = 0;
  std::size_t offline_count_ = 0;
  double commit_len_sum_ = 0.0;
  std::size_t commit_count_ = 0;
  ChunkBuffer act_buffer_;
};

}  // namespace ach

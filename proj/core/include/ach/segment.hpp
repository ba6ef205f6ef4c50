#pragma once

#include <cstddef>
#include <vector>

#include "ach/array.hpp"
#include "ach/rng.hpp"

namespace ach {

// One environment step. Observations are normalized positions in [0,1]^2;
// actions are per-component in [-1,1].
struct Transition {
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminal = false;   // reached an absorbing success state
  bool truncated = false;  // episode cut by the step limit (bootstrappable)

  bool ends_episode() const { return terminal || truncated; }
};

// A length-(h+1) training window starting at some step t.
//
// Layout: obs_seq row j = s_{t+j}. For a window with k valid transitions
// (valid[0..k-1] true), rows 0..k-1 come from the stored observations and,
// when k <= h, row k additionally holds the window-ending next state
// s_{t+k}. bootstrap_obs = s_{t+h+1}, populated only for full windows.
// bootstrap_valid is false exactly when a true terminal ended the window;
// time-limit truncation and data-edge cuts keep it true.
struct TransitionSegment {
  Array obs_seq;                     // (h+1, obs_dim)
  Array act_seq;                     // (h+1, act_dim); invalid rows zero
  std::vector<double> rew_seq;       // h+1; invalid entries zero
  std::vector<unsigned char> valid;  // h+1; true-prefix pattern
  Array bootstrap_obs;               // (1, obs_dim); zero unless k == h+1
  bool bootstrap_valid = false;

  // Number of valid offsets (the k of the prefix pattern); always >= 1.
  std::size_t valid_count() const {
    std::size_t k = 0;
    while (k < valid.size() && valid[k]) ++k;
    return k;
  }
  // The successor state s_{t+n+1} for a valid offset n.
  const double* next_obs_row(std::size_t n) const {
    const std::size_t h = valid.size() - 1;
    return n < h ? obs_seq.data.data() + (n + 1) * obs_seq.cols() : bootstrap_obs.data.data();
  }
  // Whether offset n's TD target may bootstrap from s_{t+n+1}.
  bool bootstrap_applicable(std::size_t n) const {
    const std::size_t k = valid_count();
    return n + 1 < k || (n + 1 == k && bootstrap_valid);
  }
};

// Anything segments can be sampled from: a static dataset or a replay ring.
class TransitionSource {
 public:
  virtual ~TransitionSource() = default;
  virtual std::size_t size() const = 0;
  // i indexes the currently held transitions, 0 = oldest.
  virtual const Transition& get(std::size_t i) const = 0;
  // True when get(i+1) is the immediate temporal successor of get(i)
  // (same episode, no eviction seam between them).
  virtual bool linked(std::size_t i) const = 0;
};

// Uniformly samples `batch` window start indices and builds segments with
// the mask/bootstrap rules above. Windows are cut at episode ends, at data
// edges, and at replay seams; a cut at a true terminal clears
// bootstrap_valid. Errors if the source is empty or batch == 0.
std::vector<TransitionSegment> sample_segments(const TransitionSource& source, std::size_t h,
                                               std::size_t batch, RngStream& rng);

// Builds the single segment starting at index t (used by tests and by
// sample_segments itself).
TransitionSegment build_segment(const TransitionSource& source, std::size_t h, std::size_t t);

}  // namespace ach

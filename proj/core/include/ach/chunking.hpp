#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "ach/array.hpp"
#include "ach/rng.hpp"

namespace ach {

struct PolicyConfig;
struct CriticConfig;
class ParamStore;

// How the chunk length l in {0..h} (i.e. l+1 committed actions) is chosen.
//   kSoft    — sample from softmax(beta * q) over prefix values (the default)
//   kGreedy  — argmax of q, ties toward the smallest l
//   kRandom  — uniform draw, ignoring q
//   kUniform — ablation that flattens the TRAINING weights; acting behaves
//              like kSoft
//   kFixed   — always commit exactly fixed_len actions, no critic query
enum class LengthMode { kSoft, kGreedy, kRandom, kUniform, kFixed };

struct LengthSelectConfig {
  LengthMode mode = LengthMode::kSoft;
  double beta = 1.0;
  std::size_t fixed_len = 10;  // committed actions when mode == kFixed (1..h+1)
};

struct LengthDistribution {
  std::vector<double> probs;  // over l = 0..h
  LengthMode mode = LengthMode::kSoft;
};

// Softmax / one-hot / uniform distribution over prefix indices. `mode` must
// be one of kSoft, kGreedy, kRandom. Soft mode uses a max-subtracted softmax,
// so it is invariant to constant shifts of q.
LengthDistribution length_distribution(const std::vector<double>& prefix_q, double beta,
                                       LengthMode mode);

// Inverse-CDF draw from a LengthDistribution.
std::size_t sample_length(const LengthDistribution& dist, RngStream& rng);

// Sum_l probs[l] * prefix_q[l].
double expected_q(const std::vector<double>& prefix_q, const LengthDistribution& dist);

// Training-side weights over prefix lengths used inside the critic and
// policy losses: kUniform flattens them; every other mode uses the soft
// weights (ablations change acting, not the losses, except kUniform).
std::vector<double> length_weights_train(const std::vector<double>& prefix_q, double beta,
                                         LengthMode mode);

// Shannon entropy of a distribution (nats); diagnostic only.
double distribution_entropy(const std::vector<double>& probs);

// Pending actions from the last committed chunk, executed open-loop.
class ChunkBuffer {
 public:
  bool empty() const { return pending_.empty(); }
  std::size_t size() const { return pending_.size(); }

  // Enqueues the first `count` actions of a flat (n, act_dim) chunk.
  void push_chunk(const Array& chunk, std::size_t count, std::size_t act_dim);
  std::vector<double> pop();
  // Discards pending actions at an episode boundary (counted, never silent).
  void on_episode_end();
  std::size_t discarded_total() const { return discarded_; }

 private:
  std::deque<std::vector<double>> pending_;
  std::size_t discarded_ = 0;
};

struct ActResult {
  std::vector<double> action;
  std::size_t committed_len = 0;  // l+1 when a new chunk was committed, else 0
  double entropy = 0.0;           // length-distribution entropy on commit steps
};

// Algorithm-1 acting step: refill the buffer from the one-step policy when
// empty (valuing prefixes with the online critic and drawing l per `sel`),
// then pop and return the front action. z draws come from z_rng, length
// draws from len_rng (keeping the two streams isolated lets fixed-length
// and adaptive runs share every other random draw).
ActResult act(ChunkBuffer& buffer, ParamStore& policy, ParamStore& critic,
              const PolicyConfig& pol_cfg, const CriticConfig& cri_cfg,
              const std::vector<double>& obs, const LengthSelectConfig& sel, RngStream& z_rng,
              RngStream& len_rng);

}  // namespace ach

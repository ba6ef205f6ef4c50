#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ach/array.hpp"
#include "ach/chunking.hpp"
#include "ach/graph.hpp"
#include "ach/param_store.hpp"
#include "ach/rng.hpp"
#include "ach/segment.hpp"

namespace ach {

struct PolicyConfig;

// Causal-attention value network: one forward pass over the token sequence
// [state, a_t, ..., a_{t+h}] yields V(s) from the state token and
// Q(s, a_{t:t+n}) from action token n. The causal mask is what makes each
// prefix value independent of later actions.
struct CriticConfig {
  std::size_t obs_dim = 2;
  std::size_t act_dim = 2;
  std::size_t h = 9;       // chunk holds h+1 actions
  std::size_t d = 32;      // model width
  std::size_t heads = 4;
  std::size_t blocks = 2;
  std::size_t ff = 64;     // feed-forward hidden width
  std::size_t ensemble = 1;

  std::size_t tokens() const { return h + 2; }
  std::size_t chunk_dim() const { return (h + 1) * act_dim; }
  std::string member_prefix(std::size_t e) const { return "critic.e" + std::to_string(e); }
};

// V(s) plus Q(s, a_{t:t+n}) for n = 0..h (ensemble-aggregated by min).
struct PrefixValues {
  double v = 0.0;
  std::vector<double> q;
};

// Creates all ensemble members' parameters in `store`.
void critic_init(ParamStore& store, const CriticConfig& cfg, RngStream& rng);

// Output heads of one member's in-graph forward pass.
struct CriticHeadNodes {
  NodeId v = 0;          // (B, 1)
  NodeId q = 0;          // (B * n_act, 1); meaningless when n_act == 0
  bool has_q = false;
};

// Appends one member's forward pass over B token sequences of 1 + n_act
// tokens. `obs` is (B, obs_dim); `act` is (B * n_act, act_dim) and ignored
// when n_act == 0 (state-only pass for V targets).
CriticHeadNodes critic_member_forward(Graph& g, ParamStore& store, const CriticConfig& cfg,
                                      std::size_t member, NodeId obs, NodeId act,
                                      std::size_t n_act, bool trainable);

// No-grad batched helpers, aggregated over the ensemble by elementwise min.
Array critic_state_values(ParamStore& store, const CriticConfig& cfg, const Array& obs);
// obs (B, obs_dim), acts (B*(h+1), act_dim) -> (B, h+1) prefix values.
Array critic_prefix_q(ParamStore& store, const CriticConfig& cfg, const Array& obs,
                      const Array& acts);
// Single state + full chunk (flat (1,(h+1)*A) or ((h+1),A)) -> PrefixValues.
PrefixValues critic_values(ParamStore& store, const CriticConfig& cfg,
                           const std::vector<double>& obs, const Array& chunk);

// R = sum_{k=0..n} gamma^k r_k. Errors if n reaches past the valid prefix.
double nstep_return(const std::vector<double>& rew_seq, double gamma, std::size_t n,
                    const std::vector<unsigned char>& valid);

struct CriticLossResult {
  double total = 0.0;
  double td_term = 0.0;     // chunk-value regression over valid offsets
  double v_term = 0.0;      // state-value regression toward the policy value
  std::size_t skipped = 0;  // segments with an empty valid set (defensive)
};

// Joint critic objective over a segment batch. For each member: per-offset
// TD regression with n-step returns bootstrapping from the TARGET net's
// state values, plus state-value regression toward the target net's
// length-weighted chunk value of a fresh one-step-policy sample (weights
// from the target net's prefix values; the whole target is gradient-blocked).
// Gradients go into `critic` only.
CriticLossResult critic_loss(ParamStore& critic, ParamStore& critic_target, ParamStore& policy,
                             const CriticConfig& cfg, const PolicyConfig& pol_cfg,
                             const std::vector<TransitionSegment>& batch, double gamma,
                             double beta, LengthMode train_mode, RngStream& rng, bool backprop);

// target <- (1 - tau) * target + tau * net.
void target_update(const ParamStore& net, ParamStore& target, double tau);

}  // namespace ach

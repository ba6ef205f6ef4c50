#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ach/array.hpp"
#include "ach/chunking.hpp"
#include "ach/critic.hpp"
#include "ach/mlp.hpp"
#include "ach/param_store.hpp"
#include "ach/rng.hpp"
#include "ach/segment.hpp"

namespace ach {

// Shared shape information for the behavior flow policy and the distilled
// one-step policy. Both emit whole action chunks of h+1 actions.
struct PolicyConfig {
  std::size_t obs_dim = 2;
  std::size_t act_dim = 2;
  std::size_t h = 9;
  std::size_t flow_steps = 10;  // K Euler steps for the behavior policy
  std::vector<std::size_t> hidden = {64, 64};

  std::size_t chunk_dim() const { return (h + 1) * act_dim; }
  // Velocity field input: [obs, noisy chunk, flow time u].
  MlpSpec behavior_spec() const { return {obs_dim + chunk_dim() + 1, hidden, chunk_dim()}; }
  // One-step policy input: [obs, noise z].
  MlpSpec onestep_spec() const { return {obs_dim + chunk_dim(), hidden, chunk_dim()}; }
};

void behavior_init(ParamStore& store, const PolicyConfig& cfg, RngStream& rng);
void onestep_init(ParamStore& store, const PolicyConfig& cfg, RngStream& rng);

// Generic K-step Euler integration a_{k+1} = a_k + (1/K) v(a_k, k/K)
// starting from z. The stubbable core of behavior sampling.
Array euler_flow(const Array& z, std::size_t steps,
                 const std::function<Array(const Array&, double)>& velocity, bool clamp_final);

// Velocity-field evaluation (no grad): obs (B,obs_dim), a_u (B,chunk_dim),
// u scalar -> (B, chunk_dim).
Array behavior_velocity(ParamStore& store, const PolicyConfig& cfg, const Array& obs,
                        const Array& a_u, double u);

// Integrates the trained field from fresh noise; rows clamped to [-1,1].
Array behavior_sample(ParamStore& store, const PolicyConfig& cfg, const Array& obs,
                      RngStream& rng);
Array behavior_sample_with_noise(ParamStore& store, const PolicyConfig& cfg, const Array& obs,
                                 const Array& z);

// One-step policy: tanh(mlp([obs, z])); exactly one network evaluation.
Array onestep_sample(ParamStore& store, const PolicyConfig& cfg, const Array& obs,
                     RngStream& rng);
Array onestep_apply_with_noise(ParamStore& store, const PolicyConfig& cfg, const Array& obs,
                               const Array& z);

// Flow-matching regression: per sample draw u ~ U[0,1), z ~ N(0,I), regress
// the field at ((1-u)z + u*chunk, u) onto (chunk - z). Mean over the batch
// of the full squared L2 over chunk coordinates. Requires fully valid
// segments; callers filter partial windows out first.
double flow_bc_loss(ParamStore& behavior, const PolicyConfig& cfg,
                    const std::vector<TransitionSegment>& batch, RngStream& rng, bool backprop);

struct PolicyLossResult {
  double total = 0.0;
  double q_term = 0.0;   // -E_l[Q(s, a'_{0:l})], length weights gradient-blocked
  double bc_term = 0.0;  // alpha * ||a' - behavior(s,z)||^2, same z, target blocked
};

// Distillation + value-maximization objective at FIXED length weights
// w_q (B, h+1): the noise z is supplied, the distillation anchor is the
// behavior flow integrated from that same z, and gradients flow only into
// `policy` (the critic enters frozen, the anchor as a constant). This is the
// differentiable core; the weights are plain numbers by construction.
PolicyLossResult onestep_policy_loss_with_weights(ParamStore& policy, ParamStore& behavior,
                                                  ParamStore& critic,
                                                  const PolicyConfig& pol_cfg,
                                                  const CriticConfig& cri_cfg, const Array& obs,
                                                  const Array& z, double alpha, const Array& w_q,
                                                  bool backprop);

// Full objective: draws z, derives the (gradient-blocked) length weights
// from the TARGET critic's prefix values at the current sample — matching
// the critic loss — and delegates to the fixed-weights core. The maximized
// values come from the online critic.
PolicyLossResult onestep_policy_loss(ParamStore& policy, ParamStore& behavior,
                                     ParamStore& critic, ParamStore& critic_target,
                                     const PolicyConfig& pol_cfg, const CriticConfig& cri_cfg,
                                     const Array& obs, double alpha, double beta,
                                     LengthMode train_mode, RngStream& rng, bool backprop);

}  // namespace ach

#include "ach/policy.hpp"

#include <algorithm>
#include <cmath>

#include "ach/error.hpp"
#include "ach/graph.hpp"

namespace ach {

namespace {
constexpr const char* kBehaviorPrefix = "behavior";
constexpr const char* kOnestepPrefix = "policy";
}  // namespace

void behavior_init(ParamStore& store, const PolicyConfig& cfg, RngStream& rng) {
  mlp_init(store, kBehaviorPrefix, cfg.behavior_spec(), rng);
}

void onestep_init(ParamStore& store, const PolicyConfig& cfg, RngStream& rng) {
  mlp_init(store, kOnestepPrefix, cfg.onestep_spec(), rng);
}

Array euler_flow(const Array& z, std::size_t steps,
                 const std::function<Array(const Array&, double)>& velocity, bool clamp_final) {
  require(steps >= 1, "euler_flow: steps must be >= 1");
  const double inv = 1.0 / static_cast<double>(steps);
  Array a = z;
  for (std::size_t k = 0; k < steps; ++k) {
    const double u = static_cast<double>(k) * inv;
    Array v = velocity(a, u);
    require(v.size() == a.size(), "euler_flow: velocity changed the shape");
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += inv * v.data[i];
  }
  if (clamp_final) {
    for (double& x : a.data) x = std::clamp(x, -1.0, 1.0);
  }
  check_finite(a, "euler_flow output");
  return a;
}

Array behavior_velocity(ParamStore& store, const PolicyConfig& cfg, const Array& obs,
                        const Array& a_u, double u) {
  const std::size_t B = obs.rows();
  require(obs.cols() == cfg.obs_dim, "behavior_velocity: wrong observation width");
  require(a_u.rows() == B && a_u.cols() == cfg.chunk_dim(),
          "behavior_velocity: wrong chunk shape");
  const MlpSpec spec = cfg.behavior_spec();
  Array in({B, spec.in});
  for (std::size_t i = 0; i < B; ++i) {
    double* row = in.data.data() + i * spec.in;
    for (std::size_t c = 0; c < cfg.obs_dim; ++c) row[c] = obs.data[i * cfg.obs_dim + c];
    for (std::size_t c = 0; c < cfg.chunk_dim(); ++c) {
      row[cfg.obs_dim + c] = a_u.data[i * cfg.chunk_dim() + c];
    }
    row[spec.in - 1] = u;
  }
  return mlp_apply(store, kBehaviorPrefix, spec, in);
}

Array behavior_sample_with_noise(ParamStore& store, const PolicyConfig& cfg, const Array& obs,
                                 const Array& z) {
  auto vel = [&](const Array& a, double u) { return behavior_velocity(store, cfg, obs, a, u); };
  return euler_flow(z, cfg.flow_steps, vel, true);
}

Array behavior_sample(ParamStore& store, const PolicyConfig& cfg, const Array& obs,
                      RngStream& rng) {
  Array z({obs.rows(), cfg.chunk_dim()});
  rng.fill_normal(z.data);
  return behavior_sample_with_noise(store, cfg, obs, z);
}

Array onestep_apply_with_noise(ParamStore& store, const PolicyConfig& cfg, const Array& obs,
                               const Array& z) {
  const std::size_t B = obs.rows();
  require(obs.cols() == cfg.obs_dim, "onestep policy: wrong observation width");
  require(z.rows() == B && z.cols() == cfg.chunk_dim(), "onestep policy: wrong noise shape");
  const MlpSpec spec = cfg.onestep_spec();
  Array in({B, spec.in});
  for (std::size_t i = 0; i < B; ++i) {
    double* row = in.data.data() + i * spec.in;
    for (std::size_t c = 0; c < cfg.obs_dim; ++c) row[c] = obs.data[i * cfg.obs_dim + c];
    for (std::size_t c = 0; c < cfg.chunk_dim(); ++c) {
      row[cfg.obs_dim + c] = z.data[i * cfg.chunk_dim() + c];
    }
  }
  Array out = mlp_apply(store, kOnestepPrefix, spec, in);
  for (double& x : out.data) x = std::tanh(x);
  return out;
}

Array onestep_sample(ParamStore& store, const PolicyConfig& cfg, const Array& obs,
                     RngStream& rng) {
  Array z({obs.rows(), cfg.chunk_dim()});
  rng.fill_normal(z.data);
  return onestep_apply_with_noise(store, cfg, obs, z);
}

double flow_bc_loss(ParamStore& behavior, const PolicyConfig& cfg,
                    const std::vector<TransitionSegment>& batch, RngStream& rng, bool backprop) {
  require(!batch.empty(), "flow_bc_loss: empty batch");
  const std::size_t B = batch.size();
  const std::size_t cd = cfg.chunk_dim();
  const MlpSpec spec = cfg.behavior_spec();

  Array in({B, spec.in});
  Array target({B, cd});
  for (std::size_t i = 0; i < B; ++i) {
    const TransitionSegment& s = batch[i];
    require(s.valid_count() == cfg.h + 1, "flow_bc_loss: needs fully valid segments");
    require(s.obs_seq.cols() == cfg.obs_dim && s.act_seq.size() == cd,
            "flow_bc_loss: segment shape does not match the policy config");
    // Per sample: one flow time u, then the chunk_dim noise coordinates.
    const double u = rng.uniform();
    double* row = in.data.data() + i * spec.in;
    for (std::size_t c = 0; c < cfg.obs_dim; ++c) row[c] = s.obs_seq.data[c];
    for (std::size_t c = 0; c < cd; ++c) {
      const double z = rng.normal();
      const double chunk = s.act_seq.data[c];
      row[cfg.obs_dim + c] = (1.0 - u) * z + u * chunk;
      target.data[i * cd + c] = chunk - z;
    }
    row[spec.in - 1] = u;
  }

  Graph g;
  NodeId out = mlp_forward(g, behavior, kBehaviorPrefix, spec, g.constant(std::move(in)), true);
  Array w({B, cd}, 1.0 / static_cast<double>(B));
  NodeId loss = g.weighted_sse(out, target, w);
  if (backprop) g.backward(loss);
  return g.scalar_value(loss);
}

PolicyLossResult onestep_policy_loss_with_weights(ParamStore& policy, ParamStore& behavior,
                                                  ParamStore& critic,
                                                  const PolicyConfig& pol_cfg,
                                                  const CriticConfig& cri_cfg, const Array& obs,
                                                  const Array& z, double alpha, const Array& w_q,
                                                  bool backprop) {
  require(pol_cfg.h == cri_cfg.h && pol_cfg.act_dim == cri_cfg.act_dim &&
              pol_cfg.obs_dim == cri_cfg.obs_dim,
          "onestep_policy_loss: policy and critic configs disagree");
  require(alpha >= 0.0, "onestep_policy_loss: alpha must be >= 0");
  const std::size_t B = obs.rows();
  const std::size_t cd = pol_cfg.chunk_dim();
  const std::size_t n_act = cri_cfg.h + 1;
  require(obs.cols() == pol_cfg.obs_dim, "onestep_policy_loss: wrong observation width");
  require(z.rows() == B && z.cols() == cd, "onestep_policy_loss: wrong noise shape");
  require(w_q.size() == B * n_act, "onestep_policy_loss: wrong weight shape");

  // Distillation anchor: the behavior flow integrated from the SAME noise,
  // clamped like any sampled chunk, entering as a constant.
  Array anchor = behavior_sample_with_noise(behavior, pol_cfg, obs, z);

  const MlpSpec spec = pol_cfg.onestep_spec();
  Array in({B, spec.in});
  for (std::size_t i = 0; i < B; ++i) {
    double* row = in.data.data() + i * spec.in;
    for (std::size_t c = 0; c < pol_cfg.obs_dim; ++c) {
      row[c] = obs.data[i * pol_cfg.obs_dim + c];
    }
    for (std::size_t c = 0; c < cd; ++c) row[pol_cfg.obs_dim + c] = z.data[i * cd + c];
  }

  Graph g;
  NodeId a_prime = g.tanh_act(mlp_forward(g, policy, kOnestepPrefix, spec,
                                          g.constant(std::move(in)), true));

  // Negated, batch-normalized weights turn the weighted sum of online-critic
  // prefix values into the minimized value term.
  Array w_neg({B * n_act, 1});
  for (std::size_t i = 0; i < w_neg.size(); ++i) {
    w_neg.data[i] = -w_q.data[i] / static_cast<double>(B);
  }

  // Maximized values from the ONLINE critic, frozen inside this graph.
  NodeId obs_n = g.constant(obs);
  NodeId act_n = g.reshape(a_prime, {B * n_act, cri_cfg.act_dim});
  NodeId q_agg = 0;
  for (std::size_t e = 0; e < cri_cfg.ensemble; ++e) {
    CriticHeadNodes heads = critic_member_forward(g, critic, cri_cfg, e, obs_n, act_n, n_act,
                                                  false);
    q_agg = (e == 0) ? heads.q : g.add(q_agg, heads.q);
  }
  if (cri_cfg.ensemble > 1) q_agg = g.scale(q_agg, 1.0 / static_cast<double>(cri_cfg.ensemble));

  NodeId q_term = g.weighted_sum(q_agg, w_neg);
  Array w_bc({B, cd}, alpha / static_cast<double>(B));
  NodeId bc_term = g.weighted_sse(a_prime, anchor, w_bc);
  NodeId total = g.add(q_term, bc_term);

  PolicyLossResult res;
  res.total = g.scalar_value(total);
  res.q_term = g.scalar_value(q_term);
  res.bc_term = g.scalar_value(bc_term);
  if (backprop) g.backward(total);
  return res;
}

PolicyLossResult onestep_policy_loss(ParamStore& policy, ParamStore& behavior,
                                     ParamStore& critic, ParamStore& critic_target,
                                     const PolicyConfig& pol_cfg, const CriticConfig& cri_cfg,
                                     const Array& obs, double alpha, double beta,
                                     LengthMode train_mode, RngStream& rng, bool backprop) {
  const std::size_t B = obs.rows();
  const std::size_t cd = pol_cfg.chunk_dim();
  const std::size_t n_act = cri_cfg.h + 1;

  Array z({B, cd});
  rng.fill_normal(z.data);

  // Length weights from the TARGET net's prefix values at the current
  // sample; computed outside the graph, so no gradient reaches them.
  Array a_prime = onestep_apply_with_noise(policy, pol_cfg, obs, z);
  Array q_bar = critic_prefix_q(critic_target, cri_cfg, obs,
                                a_prime.reshaped({B * n_act, cri_cfg.act_dim}));
  Array w_q({B * n_act, 1});
  std::vector<double> q_row(n_act);
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t n = 0; n < n_act; ++n) q_row[n] = q_bar.data[i * n_act + n];
    const std::vector<double> w = length_weights_train(q_row, beta, train_mode);
    for (std::size_t n = 0; n < n_act; ++n) w_q.data[i * n_act + n] = w[n];
  }
  return onestep_policy_loss_with_weights(policy, behavior, critic, pol_cfg, cri_cfg, obs, z,
                                          alpha, w_q, backprop);
}

}  // namespace ach

#include "ach/critic.hpp"

#include <cmath>

#include "ach/error.hpp"
#include "ach/policy.hpp"

namespace ach {

void critic_init(ParamStore& store, const CriticConfig& cfg, RngStream& rng) {
  require(cfg.heads > 0 && cfg.d % cfg.heads == 0, "critic_init: heads must divide d");
  require(cfg.ensemble >= 1, "critic_init: ensemble size must be >= 1");
  for (std::size_t e = 0; e < cfg.ensemble; ++e) {
    const std::string p = cfg.member_prefix(e) + ".";
    store.create_xavier(p + "emb.s.w", cfg.obs_dim, cfg.d, rng);
    store.create(p + "emb.s.b", {1, cfg.d});
    store.create_xavier(p + "emb.a.w", cfg.act_dim, cfg.d, rng);
    store.create(p + "emb.a.b", {1, cfg.d});
    Param& pos = store.create(p + "pos", {cfg.tokens(), cfg.d});
    for (double& x : pos.value.data) x = rng.uniform(-0.02, 0.02);
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
      const std::string bp = p + "blk" + std::to_string(b) + ".";
      store.create_const(bp + "ln1.g", {1, cfg.d}, 1.0);
      store.create(bp + "ln1.b", {1, cfg.d});
      store.create_xavier(bp + "attn.wq", cfg.d, cfg.d, rng);
      store.create(bp + "attn.bq", {1, cfg.d});
      store.create_xavier(bp + "attn.wk", cfg.d, cfg.d, rng);
      store.create(bp + "attn.bk", {1, cfg.d});
      store.create_xavier(bp + "attn.wv", cfg.d, cfg.d, rng);
      store.create(bp + "attn.bv", {1, cfg.d});
      store.create_xavier(bp + "attn.wo", cfg.d, cfg.d, rng);
      store.create(bp + "attn.bo", {1, cfg.d});
      store.create_const(bp + "ln2.g", {1, cfg.d}, 1.0);
      store.create(bp + "ln2.b", {1, cfg.d});
      store.create_xavier(bp + "ff.w1", cfg.d, cfg.ff, rng);
      store.create(bp + "ff.b1", {1, cfg.ff});
      store.create_xavier(bp + "ff.w2", cfg.ff, cfg.d, rng);
      store.create(bp + "ff.b2", {1, cfg.d});
    }
    store.create_const(p + "lnf.g", {1, cfg.d}, 1.0);
    store.create(p + "lnf.b", {1, cfg.d});
    store.create_xavier(p + "head.v.w", cfg.d, 1, rng);
    store.create(p + "head.v.b", {1, 1});
    store.create_xavier(p + "head.q.w", cfg.d, 1, rng);
    store.create(p + "head.q.b", {1, 1});
  }
}

CriticHeadNodes critic_member_forward(Graph& g, ParamStore& store, const CriticConfig& cfg,
                                      std::size_t member, NodeId obs, NodeId act,
                                      std::size_t n_act, bool trainable) {
  require(n_act <= cfg.h + 1, "critic_member_forward: n_act exceeds h+1");
  const std::string p = cfg.member_prefix(member) + ".";
  const std::size_t B = g.value(obs).rows();
  const std::size_t T = 1 + n_act;
  const std::size_t dh = cfg.d / cfg.heads;
  auto P = [&](const std::string& name) { return g.param(store.get(p + name), trainable); };

  NodeId s_emb = g.add(g.matmul(obs, P("emb.s.w")), P("emb.s.b"));
  NodeId x;
  if (n_act > 0) {
    require(g.value(act).rows() == B * n_act,
            "critic_member_forward: action rows do not match batch");
    NodeId a_emb = g.add(g.matmul(act, P("emb.a.w")), P("emb.a.b"));
    x = g.token_stack(s_emb, a_emb, n_act);
  } else {
    x = s_emb;
  }
  x = g.add(x, g.row_slice(P("pos"), 0, T));

  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::string bp = "blk" + std::to_string(b) + ".";
    NodeId ln1 = g.layer_norm(x, P(bp + "ln1.g"), P(bp + "ln1.b"));
    NodeId q = g.split_heads(g.add(g.matmul(ln1, P(bp + "attn.wq")), P(bp + "attn.bq")), B, T,
                             cfg.heads);
    NodeId k = g.split_heads(g.add(g.matmul(ln1, P(bp + "attn.wk")), P(bp + "attn.bk")), B, T,
                             cfg.heads);
    NodeId v = g.split_heads(g.add(g.matmul(ln1, P(bp + "attn.wv")), P(bp + "attn.bv")), B, T,
                             cfg.heads);
    NodeId scores =
        g.scale(g.bmm_nt(q, k, B * cfg.heads, T), 1.0 / std::sqrt(static_cast<double>(dh)));
    NodeId w = g.causal_softmax(scores, B * cfg.heads, T);
    NodeId ctx = g.merge_heads(g.bmm_nn(w, v, B * cfg.heads, T), B, T, cfg.heads);
    x = g.add(x, g.add(g.matmul(ctx, P(bp + "attn.wo")), P(bp + "attn.bo")));
    NodeId ln2 = g.layer_norm(x, P(bp + "ln2.g"), P(bp + "ln2.b"));
    NodeId ff = g.matmul(g.gelu(g.add(g.matmul(ln2, P(bp + "ff.w1")), P(bp + "ff.b1"))),
                         P(bp + "ff.w2"));
    x = g.add(x, g.add(ff, P(bp + "ff.b2")));
  }
  x = g.layer_norm(x, P("lnf.g"), P("lnf.b"));

  CriticHeadNodes heads;
  heads.v = g.add(g.matmul(g.take_state_rows(x, T), P("head.v.w")), P("head.v.b"));
  if (n_act > 0) {
    heads.q = g.add(g.matmul(g.take_action_rows(x, T), P("head.q.w")), P("head.q.b"));
    heads.has_q = true;
  }
  return heads;
}

namespace {

// Shared no-grad evaluation with elementwise-min aggregation over members.
void forward_values(ParamStore& store, const CriticConfig& cfg, const Array& obs,
                    const Array* acts, Array* v_out, Array* q_out) {
  const std::size_t B = obs.rows();
  const std::size_t n_act = acts ? cfg.h + 1 : 0;
  Graph g;
  NodeId obs_n = g.constant(obs);
  NodeId act_n = acts ? g.constant(*acts) : obs_n;
  for (std::size_t e = 0; e < cfg.ensemble; ++e) {
    CriticHeadNodes heads = critic_member_forward(g, store, cfg, e, obs_n, act_n, n_act, false);
    if (v_out) {
      const Array& v = g.value(heads.v);
      if (e == 0) {
        *v_out = v;
      } else {
        for (std::size_t i = 0; i < v.size(); ++i) {
          v_out->data[i] = std::min(v_out->data[i], v.data[i]);
        }
      }
    }
    if (q_out) {
      const Array& q = g.value(heads.q);  // (B*(h+1), 1)
      if (e == 0) {
        *q_out = q.reshaped({B, cfg.h + 1});
      } else {
        for (std::size_t i = 0; i < q.size(); ++i) {
          q_out->data[i] = std::min(q_out->data[i], q.data[i]);
        }
      }
    }
  }
}

}  // namespace

Array critic_state_values(ParamStore& store, const CriticConfig& cfg, const Array& obs) {
  Array v;
  forward_values(store, cfg, obs, nullptr, &v, nullptr);
  return v;
}

Array critic_prefix_q(ParamStore& store, const CriticConfig& cfg, const Array& obs,
                      const Array& acts) {
  Array q;
  forward_values(store, cfg, obs, &acts, nullptr, &q);
  return q;
}

PrefixValues critic_values(ParamStore& store, const CriticConfig& cfg,
                           const std::vector<double>& obs, const Array& chunk) {
  require(obs.size() == cfg.obs_dim, "critic_values: wrong observation size");
  require(chunk.size() == cfg.chunk_dim(), "critic_values: wrong chunk size");
  Array obs_a = Array::row(obs);
  Array acts = chunk.reshaped({cfg.h + 1, cfg.act_dim});
  Array v, q;
  forward_values(store, cfg, obs_a, &acts, &v, &q);
  PrefixValues pv;
  pv.v = v.data[0];
  pv.q = q.data;
  return pv;
}

double nstep_return(const std::vector<double>& rew_seq, double gamma, std::size_t n,
                    const std::vector<unsigned char>& valid) {
  require(n < rew_seq.size(), "nstep_return: n out of range");
  require(n < valid.size() && valid[n], "nstep_return: n beyond the valid prefix");
  double r = 0.0;
  double g = 1.0;
  for (std::size_t k = 0; k <= n; ++k) {
    r += g * rew_seq[k];
    g *= gamma;
  }
  return r;
}

CriticLossResult critic_loss(ParamStore& critic, ParamStore& critic_target, ParamStore& policy,
                             const CriticConfig& cfg, const PolicyConfig& pol_cfg,
                             const std::vector<TransitionSegment>& batch, double gamma,
                             double beta, LengthMode train_mode, RngStream& rng, bool backprop) {
  require(!batch.empty(), "critic_loss: empty batch");
  require(gamma >= 0.0 && gamma <= 1.0, "critic_loss: gamma outside [0, 1]");
  const std::size_t n_act = cfg.h + 1;

  CriticLossResult res;
  std::vector<const TransitionSegment*> segs;
  segs.reserve(batch.size());
  for (const auto& s : batch) {
    if (s.valid_count() == 0) {
      ++res.skipped;
      continue;
    }
    segs.push_back(&s);
  }
  require(!segs.empty(), "critic_loss: every segment in the batch was invalid");
  const std::size_t B = segs.size();

  // Action rows are copied wholesale, invalid tail included: causal masking
  // plus zero per-offset weights make those rows provably inert, and keeping
  // them in the forward pass lets tests assert exactly that.
  Array obs({B, cfg.obs_dim});
  Array acts({B * n_act, cfg.act_dim});
  for (std::size_t i = 0; i < B; ++i) {
    const TransitionSegment& s = *segs[i];
    require(s.obs_seq.cols() == cfg.obs_dim && s.act_seq.cols() == cfg.act_dim &&
                s.act_seq.rows() == n_act,
            "critic_loss: segment shape does not match the critic config");
    for (std::size_t c = 0; c < cfg.obs_dim; ++c) {
      obs.data[i * cfg.obs_dim + c] = s.obs_seq.data[c];
    }
    for (std::size_t c = 0; c < n_act * cfg.act_dim; ++c) {
      acts.data[i * n_act * cfg.act_dim + c] = s.act_seq.data[c];
    }
  }

  // --- TD targets: n-step returns plus discounted target-net state values.
  // Gather the successor states of every bootstrappable offset into one
  // state-only target forward.
  std::vector<std::pair<std::size_t, std::size_t>> boot_idx;  // (segment, offset)
  std::vector<double> boot_rows;
  for (std::size_t i = 0; i < B; ++i) {
    const TransitionSegment& s = *segs[i];
    const std::size_t k = s.valid_count();
    for (std::size_t n = 0; n < k; ++n) {
      if (s.bootstrap_applicable(n)) {
        const double* row = s.next_obs_row(n);
        boot_idx.emplace_back(i, n);
        boot_rows.insert(boot_rows.end(), row, row + cfg.obs_dim);
      }
    }
  }
  Array targets({B * n_act, 1});
  Array w_td({B * n_act, 1});
  for (std::size_t i = 0; i < B; ++i) {
    const TransitionSegment& s = *segs[i];
    const std::size_t k = s.valid_count();
    const double wn = 1.0 / (static_cast<double>(B) * static_cast<double>(k));
    for (std::size_t n = 0; n < k; ++n) {
      targets.data[i * n_act + n] = nstep_return(s.rew_seq, gamma, n, s.valid);
      w_td.data[i * n_act + n] = wn;
    }
  }
  if (!boot_idx.empty()) {
    Array boot_obs;
    boot_obs.shape = {boot_idx.size(), cfg.obs_dim};
    boot_obs.data = std::move(boot_rows);
    Array vbar = critic_state_values(critic_target, cfg, boot_obs);
    for (std::size_t m = 0; m < boot_idx.size(); ++m) {
      const auto [i, n] = boot_idx[m];
      targets.data[i * n_act + n] += std::pow(gamma, static_cast<double>(n + 1)) * vbar.data[m];
    }
  }

  // --- State-value targets: length-weighted target-net value of a fresh
  // one-step-policy chunk (everything gradient-blocked).
  Array z({B, pol_cfg.chunk_dim()});
  rng.fill_normal(z.data);
  Array a_prime = onestep_apply_with_noise(policy, pol_cfg, obs, z);
  Array q_bar = critic_prefix_q(critic_target, cfg, obs,
                                a_prime.reshaped({B * n_act, cfg.act_dim}));
  Array v_targets({B, 1});
  std::vector<double> q_row(n_act);
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t n = 0; n < n_act; ++n) q_row[n] = q_bar.data[i * n_act + n];
    const std::vector<double> w = length_weights_train(q_row, beta, train_mode);
    double t = 0.0;
    for (std::size_t n = 0; n < n_act; ++n) t += w[n] * q_row[n];
    v_targets.data[i] = t;
  }
  Array w_v({B, 1}, 1.0 / static_cast<double>(B));

  // --- Assemble the differentiable loss over all ensemble members.
  Graph g;
  NodeId obs_n = g.constant(obs);
  NodeId act_n = g.constant(acts);
  NodeId total = 0;
  double td_sum = 0.0, v_sum = 0.0;
  for (std::size_t e = 0; e < cfg.ensemble; ++e) {
    CriticHeadNodes heads = critic_member_forward(g, critic, cfg, e, obs_n, act_n, n_act, true);
    NodeId td = g.weighted_sse(heads.q, targets, w_td);
    NodeId vt = g.weighted_sse(heads.v, v_targets, w_v);
    td_sum += g.scalar_value(td);
    v_sum += g.scalar_value(vt);
    NodeId member = g.add(td, vt);
    total = (e == 0) ? member : g.add(total, member);
  }
  if (cfg.ensemble > 1) {
    total = g.scale(total, 1.0 / static_cast<double>(cfg.ensemble));
  }
  res.total = g.scalar_value(total);
  res.td_term = td_sum / static_cast<double>(cfg.ensemble);
  res.v_term = v_sum / static_cast<double>(cfg.ensemble);
  if (backprop) g.backward(total);
  return res;
}

void target_update(const ParamStore& net, ParamStore& target, double tau) {
  require(tau > 0.0 && tau <= 1.0, "target_update: tau outside (0, 1]");
  ParamStore::polyak_blend(net, target, tau);
}

}  // namespace ach

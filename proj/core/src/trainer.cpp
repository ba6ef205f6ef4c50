#include "ach/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "ach/checkpoint.hpp"
#include "ach/chunking.hpp"
#include "ach/segment.hpp"

namespace ach {

Trainer::Trainer(const RunConfig& cfg, const MazeSpec& spec)
    : cfg_(cfg),
      spec_(spec),
      pol_cfg_(cfg.policy_config(2, 2)),
      cri_cfg_(cfg.critic_config(2, 2)),
      hub_(cfg.seed),
      replay_(cfg.replay_capacity) {
  validate_config(cfg_);
  adam_.lr = cfg_.lr;

  RngStream init_behavior(derive_stream_seed(cfg_.seed, "init.behavior"));
  RngStream init_policy(derive_stream_seed(cfg_.seed, "init.policy"));
  RngStream init_critic(derive_stream_seed(cfg_.seed, "init.critic"));
  RngStream init_target(derive_stream_seed(cfg_.seed, "init.critic_target"));
  behavior_init(behavior_, pol_cfg_, init_behavior);
  onestep_init(policy_, pol_cfg_, init_policy);
  critic_init(critic_, cri_cfg_, init_critic);
  critic_init(critic_target_, cri_cfg_, init_target);
  ParamStore::copy_values(critic_, critic_target_);
}

void Trainer::seed_replay(const TransitionSource& source) {
  for (std::size_t i = 0; i < source.size(); ++i) replay_.insert(source.get(i));
  // The tail of one stream must never chain into data inserted later.
  replay_.mark_episode_break();
  offline_count_ = replay_.size();
}

std::vector<TransitionSegment> Trainer::sample_batch() {
  RngStream& rng = hub_.stream("train.sample");
  const bool split = cfg_.symmetric_replay && replay_.size() > offline_count_;
  if (!split) return sample_segments(replay_, cfg_.h, cfg_.batch, rng);

  if (replay_.evicting())
    throw std::runtime_error(
        "trainer: symmetric_replay does not support an overflowing buffer (raise "
        "replay_capacity)");
  const std::size_t half = cfg_.batch / 2;
  const std::size_t rest = cfg_.batch - half;
  SubrangeSource offline_part(replay_, 0, offline_count_);
  SubrangeSource online_part(replay_, offline_count_, replay_.size());
  std::vector<TransitionSegment> segs = sample_segments(offline_part, cfg_.h, half, rng);
  std::vector<TransitionSegment> online_segs = sample_segments(online_part, cfg_.h, rest, rng);
  segs.insert(segs.end(), std::make_move_iterator(online_segs.begin()),
              std::make_move_iterator(online_segs.end()));
  return segs;
}

void Trainer::write_loss_dump(const char* loss_name, const std::string& value_text,
                              std::uint64_t sampler_counter_before) const {
  nlohmann::json j;
  j["version"] = "ach-nan-dump-v1";
  j["seed"] = cfg_.seed;
  j["global_step"] = global_step_;
  j["phase"] = phase_;
  j["loss"] = loss_name;
  j["value"] = value_text;
  // The sampler counter before the draw identifies the exact batch; replaying
  // the run to this counter reproduces it.
  j["sampler_counter_before"] = sampler_counter_before;
  j["config_hash"] = config_hash(cfg_);
  std::ofstream out(dump_path_, std::ios::binary);
  out << j.dump(2) << "\n";
}

double Trainer::checked(double value, const char* loss_name,
                        std::uint64_t sampler_counter_before) {
  if (std::isfinite(value)) return value;
  write_loss_dump(loss_name, std::to_string(value), sampler_counter_before);
  throw std::runtime_error("trainer: non-finite " + std::string(loss_name) + " at step " +
                           std::to_string(global_step_) + " (diagnostics: " + dump_path_ + ")");
}

void Trainer::train_iteration() {
  const std::uint64_t sampler_before = hub_.stream("train.sample").state().counter;
  const std::vector<TransitionSegment> segs = sample_batch();
  const LengthMode train_mode = cfg_.select_config().mode;

  // Behavior flow update (full windows only; the chunk regression target is
  // undefined past an episode cut).
  std::vector<TransitionSegment> full;
  full.reserve(segs.size());
  for (const TransitionSegment& seg : segs)
    if (seg.valid_count() == cfg_.h + 1) full.push_back(seg);
  double flow_value = 0.0;
  if (!full.empty()) {
    behavior_.zero_grads();
    flow_value = guarded("flow_loss", sampler_before, [&] {
      return flow_bc_loss(behavior_, pol_cfg_, full, hub_.stream("train.flow"), true);
    });
    behavior_.adam_step(adam_, ++behavior_t_);
  }

  // Critic update.
  critic_.zero_grads();
  CriticLossResult cl;
  guarded("critic_loss", sampler_before, [&] {
    cl = critic_loss(critic_, critic_target_, policy_, cri_cfg_, pol_cfg_, segs, cfg_.gamma,
                     cfg_.beta, train_mode, hub_.stream("train.critic"), true);
    return cl.total;
  });
  critic_.adam_step(adam_, ++critic_t_);

  // One-step policy update on the segment start states.
  Array obs({segs.size(), pol_cfg_.obs_dim});
  for (std::size_t i = 0; i < segs.size(); ++i)
    for (std::size_t d = 0; d < pol_cfg_.obs_dim; ++d)
      obs.data[i * pol_cfg_.obs_dim + d] = segs[i].obs_seq.data[d];
  policy_.zero_grads();
  PolicyLossResult pl;
  guarded("policy_loss", sampler_before, [&] {
    pl = onestep_policy_loss(policy_, behavior_, critic_, critic_target_, pol_cfg_, cri_cfg_, obs,
                             cfg_.alpha, cfg_.beta, train_mode, hub_.stream("train.policy"), true);
    return pl.total;
  });
  policy_.adam_step(adam_, ++policy_t_);

  target_update(critic_, critic_target_, cfg_.tau);

  if (global_step_ % cfg_.log_every == 0) {
    log_.log(global_step_, phase_, "flow_loss", flow_value);
    log_.log(global_step_, phase_, "flow_batch", static_cast<double>(full.size()));
    log_.log(global_step_, phase_, "critic_loss", cl.total);
    log_.log(global_step_, phase_, "critic_td", cl.td_term);
    log_.log(global_step_, phase_, "critic_v", cl.v_term);
    log_.log(global_step_, phase_, "policy_loss", pl.total);
    log_.log(global_step_, phase_, "policy_q", pl.q_term);
    log_.log(global_step_, phase_, "policy_bc", pl.bc_term);
  }
}

void Trainer::run_offline() {
  phase_ = "offline";
  if (cfg_.offline_steps == 0) return;
  if (replay_.size() == 0)
    throw std::runtime_error("trainer: offline phase needs a seeded replay (empty dataset?)");
  for (std::size_t it = 0; it < cfg_.offline_steps; ++it) {
    train_iteration();
    ++global_step_;
    if (cfg_.eval_every > 0 && global_step_ % cfg_.eval_every == 0 &&
        global_step_ != cfg_.offline_steps)
      evaluate();
  }
  evaluate();
}

void Trainer::run_online() {
  phase_ = "online";
  if (cfg_.online_steps == 0) return;

  MazeEnv env(spec_);
  std::size_t episode = 0;
  std::vector<double> obs = env.reset(derive_stream_seed(cfg_.seed, "online.env.0"));
  double ep_return = 0.0;
  std::size_t ep_len = 0;
  RngStream& act_z = hub_.stream("act.z");
  RngStream& act_len = hub_.stream("act.len");
  const LengthSelectConfig sel = cfg_.select_config();

  for (std::size_t t = 0; t < cfg_.online_steps; ++t) {
    const ActResult ar =
        act(act_buffer_, policy_, critic_, pol_cfg_, cri_cfg_, obs, sel, act_z, act_len);
    const StepResult sr = env.step(ar.action);

    Transition tr;
    tr.obs = obs;
    tr.action = ar.action;
    tr.reward = sr.reward;
    tr.next_obs = sr.obs;
    tr.terminal = sr.terminal;
    tr.truncated = sr.truncated;
    replay_.insert(std::move(tr));

    ep_return += sr.reward;
    ++ep_len;
    if (ar.committed_len > 0) {
      commit_len_sum_ += static_cast<double>(ar.committed_len);
      ++commit_count_;
      log_.log(global_step_, phase_, "chunk_len", static_cast<double>(ar.committed_len));
      log_.log(global_step_, phase_, "chunk_entropy", ar.entropy);
    }
    if (global_step_ % cfg_.log_every == 0 && commit_count_ > 0)
      log_.log(global_step_, phase_, "chunk_len_avg",
               commit_len_sum_ / static_cast<double>(commit_count_));

    const bool update = !cfg_.update_on_commit_only || ar.committed_len > 0;
    if (update)
      for (std::size_t u = 0; u < cfg_.utd; ++u) train_iteration();

    ++global_step_;
    if (sr.done()) {
      log_.log(global_step_, phase_, "episode_return", ep_return);
      log_.log(global_step_, phase_, "episode_success", sr.terminal ? 1.0 : 0.0);
      log_.log(global_step_, phase_, "episode_len", static_cast<double>(ep_len));
      act_buffer_.on_episode_end();
      log_.log(global_step_, phase_, "discarded_actions",
               static_cast<double>(act_buffer_.discarded_total()));
      ++episode;
      obs = env.reset(derive_stream_seed(cfg_.seed, "online.env." + std::to_string(episode)));
      ep_return = 0.0;
      ep_len = 0;
    } else {
      obs = sr.obs;
    }
    if (cfg_.eval_every > 0 && (t + 1) % cfg_.eval_every == 0 && t + 1 != cfg_.online_steps)
      evaluate();
  }
  evaluate();
}

EvalSummary Trainer::evaluate() {
  const LengthSelectConfig sel = cfg_.eval_select_config();
  const std::uint64_t env_base = derive_stream_seed(cfg_.seed, "eval.env");
  const std::uint64_t z_base = derive_stream_seed(cfg_.seed, "eval.z");
  const std::uint64_t len_base = derive_stream_seed(cfg_.seed, "eval.len");

  EvalSummary sum;
  double total_commits = 0.0;
  for (std::size_t r = 0; r < cfg_.eval_episodes; ++r) {
    MazeEnv env(spec_);
    std::vector<double> obs = env.reset(env_base + r);
    RngStream z_rng(z_base + r);
    RngStream len_rng(len_base + r);
    ChunkBuffer buf;
    double ret = 0.0;
    std::size_t steps = 0;
    bool success = false;
    while (true) {
      const ActResult ar = act(buf, policy_, critic_, pol_cfg_, cri_cfg_, obs, sel, z_rng, len_rng);
      const StepResult sr = env.step(ar.action);
      ret += sr.reward;
      ++steps;
      if (ar.committed_len > 0) {
        sum.mean_chunk_len += static_cast<double>(ar.committed_len);
        total_commits += 1.0;
      }
      obs = sr.obs;
      if (sr.done()) {
        success = sr.terminal;
        break;
      }
    }
    sum.success_rate += success ? 1.0 : 0.0;
    sum.mean_return += ret;
    sum.mean_steps += static_cast<double>(steps);
  }
  const double n = static_cast<double>(cfg_.eval_episodes);
  sum.success_rate /= n;
  sum.mean_return /= n;
  sum.mean_steps /= n;
  sum.mean_chunk_len = total_commits > 0.0 ? sum.mean_chunk_len / total_commits : 0.0;

  log_.log(global_step_, phase_, "eval_success", sum.success_rate);
  log_.log(global_step_, phase_, "eval_return", sum.mean_return);
  log_.log(global_step_, phase_, "eval_steps", sum.mean_steps);
  log_.log(global_step_, phase_, "eval_chunk_len", sum.mean_chunk_len);
  return sum;
}

void Trainer::save(const std::string& dir) const {
  CheckpointState state;
  state.global_step = global_step_;
  state.config_hash = config_hash(cfg_);
  for (const std::string& name : hub_.stream_names())
    state.rng_states[name] = hub_.stream_state(name);
  save_checkpoint(dir, behavior_, policy_, critic_, critic_target_, state);
}

std::size_t Trainer::discarded_actions() const { return act_buffer_.discarded_total(); }

}  // namespace ach

#include <benchmark/benchmark.h>

#include <vector>

#include "ach/array.hpp"
#include "ach/chunking.hpp"
#include "ach/critic.hpp"
#include "ach/policy.hpp"
#include "ach/rng.hpp"
#include "ach/segment.hpp"

namespace {

void BM_MatmulNN(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  ach::RngStream rng(1);
  std::vector<double> a(n * n), b(n * n), c(n * n);
  rng.fill_normal(a);
  rng.fill_normal(b);
  for (auto _ : state) {
    ach::mm_nn(a.data(), b.data(), c.data(), n, n, n, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * n * n * n * 2);
}

// ---------------------------------------------------------------------------
// Training-step benchmarks at profile-candidate sizes. range(0) scales the
// model: d = 8 * r, ff = 2d, hidden = {16 * r, 16 * r}; range(1) is the
// segment batch size.
// ---------------------------------------------------------------------------

struct TrainFixture {
  ach::CriticConfig cri;
  ach::PolicyConfig pol;
  ach::ParamStore critic, critic_target, policy, behavior;
  std::vector<ach::TransitionSegment> batch;
  ach::Array obs;

  TrainFixture(std::size_t scale, std::size_t batch_size) {
    cri.obs_dim = 2;
    cri.act_dim = 2;
    cri.h = 9;
    cri.d = 8 * scale;
    cri.heads = 2;
    cri.blocks = 2;
    cri.ff = 2 * cri.d;
    pol.obs_dim = 2;
    pol.act_dim = 2;
    pol.h = 9;
    pol.flow_steps = 10;
    pol.hidden = {16 * scale, 16 * scale};

    ach::RngStream r1(1), r2(2), r3(3), r4(4), data(5);
    critic_init(critic, cri, r1);
    critic_init(critic_target, cri, r2);
    onestep_init(policy, pol, r3);
    behavior_init(behavior, pol, r4);

    obs = ach::Array({batch_size, cri.obs_dim});
    for (double& x : obs.data) x = data.uniform();
    for (std::size_t i = 0; i < batch_size; ++i) {
      ach::TransitionSegment seg;
      seg.obs_seq = ach::Array({cri.h + 1, cri.obs_dim});
      seg.act_seq = ach::Array({cri.h + 1, cri.act_dim});
      seg.rew_seq.assign(cri.h + 1, 0.0);
      seg.valid.assign(cri.h + 1, 1);
      seg.bootstrap_obs = ach::Array({1, cri.obs_dim});
      seg.bootstrap_valid = true;
      for (double& x : seg.obs_seq.data) x = data.uniform();
      for (double& x : seg.act_seq.data) x = data.uniform(-1.0, 1.0);
      for (double& x : seg.rew_seq) x = data.uniform(-1.0, 1.0);
      for (double& x : seg.bootstrap_obs.data) x = data.uniform();
      batch.push_back(std::move(seg));
    }
  }
};

void BM_CriticLoss(benchmark::State& state) {
  TrainFixture f(static_cast<std::size_t>(state.range(0)),
                 static_cast<std::size_t>(state.range(1)));
  ach::RngStream rng(77);
  for (auto _ : state) {
    f.critic.zero_grads();
    auto res = ach::critic_loss(f.critic, f.critic_target, f.policy, f.cri, f.pol, f.batch,
                                0.99, 1.0, ach::LengthMode::kSoft, rng, true);
    benchmark::DoNotOptimize(res.total);
  }
}

void BM_FlowLoss(benchmark::State& state) {
  TrainFixture f(static_cast<std::size_t>(state.range(0)),
                 static_cast<std::size_t>(state.range(1)));
  ach::RngStream rng(78);
  for (auto _ : state) {
    f.behavior.zero_grads();
    double loss = ach::flow_bc_loss(f.behavior, f.pol, f.batch, rng, true);
    benchmark::DoNotOptimize(loss);
  }
}

void BM_PolicyLoss(benchmark::State& state) {
  TrainFixture f(static_cast<std::size_t>(state.range(0)),
                 static_cast<std::size_t>(state.range(1)));
  ach::RngStream rng(79);
  for (auto _ : state) {
    f.policy.zero_grads();
    auto res = ach::onestep_policy_loss(f.policy, f.behavior, f.critic, f.critic_target, f.pol,
                                        f.cri, f.obs, 1.0, 1.0, ach::LengthMode::kSoft, rng,
                                        true);
    benchmark::DoNotOptimize(res.total);
  }
}

// One full optimizer round: all three losses plus Adam and the target blend.
void BM_TrainIteration(benchmark::State& state) {
  TrainFixture f(static_cast<std::size_t>(state.range(0)),
                 static_cast<std::size_t>(state.range(1)));
  ach::RngStream rng(80);
  ach::AdamConfig adam;
  std::uint64_t step = 0;
  for (auto _ : state) {
    ++step;
    f.behavior.zero_grads();
    ach::flow_bc_loss(f.behavior, f.pol, f.batch, rng, true);
    f.behavior.adam_step(adam, step);
    f.critic.zero_grads();
    ach::critic_loss(f.critic, f.critic_target, f.policy, f.cri, f.pol, f.batch, 0.99, 1.0,
                     ach::LengthMode::kSoft, rng, true);
    f.critic.adam_step(adam, step);
    f.policy.zero_grads();
    ach::onestep_policy_loss(f.policy, f.behavior, f.critic, f.critic_target, f.pol, f.cri,
                             f.obs, 1.0, 1.0, ach::LengthMode::kSoft, rng, true);
    f.policy.adam_step(adam, step);
    ach::target_update(f.critic, f.critic_target, 0.005);
  }
}

// Acting path: one chunk commit (policy sample + critic valuation + draw).
void BM_ActCommit(benchmark::State& state) {
  TrainFixture f(static_cast<std::size_t>(state.range(0)), 1);
  ach::RngStream z_rng(81), len_rng(82);
  ach::LengthSelectConfig sel;
  const std::vector<double> obs = {0.4, 0.6};
  for (auto _ : state) {
    ach::ChunkBuffer buf;  // empty: every call commits a fresh chunk
    auto r = ach::act(buf, f.policy, f.critic, f.pol, f.cri, obs, sel, z_rng, len_rng);
    benchmark::DoNotOptimize(r.action.data());
  }
}

}  // namespace

BENCHMARK(BM_MatmulNN)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_CriticLoss)->Args({2, 16})->Args({3, 16})->Args({4, 32});
BENCHMARK(BM_FlowLoss)->Args({2, 16})->Args({3, 16})->Args({4, 32});
BENCHMARK(BM_PolicyLoss)->Args({2, 16})->Args({3, 16})->Args({4, 32});
BENCHMARK(BM_TrainIteration)->Args({2, 16})->Args({3, 16})->Args({4, 32});
BENCHMARK(BM_ActCommit)->Arg(2)->Arg(3)->Arg(4);

BENCHMARK_MAIN();

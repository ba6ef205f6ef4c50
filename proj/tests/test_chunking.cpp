#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ach/chunking.hpp"
#include "ach/critic.hpp"
#include "ach/error.hpp"
#include "ach/policy.hpp"

using namespace ach;

TEST_CASE("soft distribution matches high-precision references") {
  const std::vector<double> q = {1.0, 2.0, 3.5};

  LengthDistribution d1 = length_distribution(q, 1.0, LengthMode::kSoft);
  // References computed with 30-digit arithmetic.
  CHECK(d1.probs[0] == doctest::Approx(0.062890013245867497).epsilon(1e-14));
  CHECK(d1.probs[1] == doctest::Approx(0.17095278019779027).epsilon(1e-14));
  CHECK(d1.probs[2] == doctest::Approx(0.76615720655634223).epsilon(1e-14));
  CHECK(expected_q(q, d1) == doctest::Approx(3.0863457965886458).epsilon(1e-14));
  CHECK(distribution_entropy(d1.probs) == doctest::Approx(0.68002210321848783).epsilon(1e-13));

  LengthDistribution d2 = length_distribution(q, 2.5, LengthMode::kSoft);
  CHECK(d2.probs[0] == doctest::Approx(0.001882546711030673).epsilon(1e-13));
  CHECK(d2.probs[1] == doctest::Approx(0.022934113937873361).epsilon(1e-13));
  CHECK(d2.probs[2] == doctest::Approx(0.97518333935109597).epsilon(1e-14));
  CHECK(distribution_entropy(d2.probs) == doctest::Approx(0.12289862951253077).epsilon(1e-12));
}

TEST_CASE("soft distribution edge behavior") {
  // beta = 0 flattens regardless of q
  LengthDistribution flat = length_distribution({5.0, -3.0, 100.0}, 0.0, LengthMode::kSoft);
  for (double p : flat.probs) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  // shift invariance via max subtraction
  std::vector<double> qa = {0.4, -1.2, 2.0, 0.0};
  std::vector<double> qb = qa;
  for (double& x : qb) x += 1234.5;
  LengthDistribution da = length_distribution(qa, 1.7, LengthMode::kSoft);
  LengthDistribution db = length_distribution(qb, 1.7, LengthMode::kSoft);
  for (std::size_t i = 0; i < qa.size(); ++i) {
    CHECK(da.probs[i] == doctest::Approx(db.probs[i]).epsilon(1e-12));
  }

  // huge spreads survive the max subtraction
  LengthDistribution ext = length_distribution({-1e6, 0.0, 1e6}, 1.0, LengthMode::kSoft);
  CHECK(ext.probs[2] == doctest::Approx(1.0));
  CHECK(std::isfinite(ext.probs[0]));

  double sum = 0.0;
  for (double p : ext.probs) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(length_distribution({1.0, 2.0}, -0.5, LengthMode::kSoft), AchError);
  CHECK_THROWS_AS(length_distribution({}, 1.0, LengthMode::kSoft), AchError);
  CHECK_THROWS_AS(
      length_distribution({1.0, std::numeric_limits<double>::quiet_NaN()}, 1.0,
                          LengthMode::kSoft),
      AchError);
  CHECK_THROWS_AS(length_distribution({1.0}, 1.0, LengthMode::kFixed), AchError);
}

TEST_CASE("greedy is a one-hot with ties toward shorter lengths") {
  LengthDistribution d = length_distribution({1.0, 7.0, 7.0, 2.0}, 1.0, LengthMode::kGreedy);
  CHECK(d.probs == std::vector<double>{0.0, 1.0, 0.0, 0.0});
  LengthDistribution all_tie = length_distribution({3.0, 3.0, 3.0}, 1.0, LengthMode::kGreedy);
  CHECK(all_tie.probs[0] == 1.0);
}

TEST_CASE("random mode ignores the values") {
  LengthDistribution d = length_distribution({-50.0, 0.0, 50.0, 1.0}, 2.0, LengthMode::kRandom);
  for (double p : d.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("training weights: uniform ablation vs soft default") {
  const std::vector<double> q = {0.3, -0.7, 1.1};
  std::vector<double> wu = length_weights_train(q, 2.0, LengthMode::kUniform);
  for (double w : wu) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // every non-uniform mode trains with the soft weights
  std::vector<double> soft = length_distribution(q, 2.0, LengthMode::kSoft).probs;
  for (LengthMode m :
       {LengthMode::kSoft, LengthMode::kGreedy, LengthMode::kRandom, LengthMode::kFixed}) {
    std::vector<double> w = length_weights_train(q, 2.0, m);
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(w[i] == soft[i]);
  }
}

TEST_CASE("sampling follows the distribution (3-sigma)") {
  // p = [0.25, 0.25, 0.5] exactly up to rounding: q = [0, 0, ln 2]
  const std::vector<double> q = {0.0, 0.0, 0.69314718055994531};
  LengthDistribution d = length_distribution(q, 1.0, LengthMode::kSoft);
  CHECK(d.probs[2] == doctest::Approx(0.5).epsilon(1e-15));

  const std::size_t N = 20000;
  RngStream rng(4242);
  std::vector<std::size_t> counts(3, 0);
  for (std::size_t i = 0; i < N; ++i) ++counts[sample_length(d, rng)];
  for (std::size_t i = 0; i < 3; ++i) {
    const double p = d.probs[i];
    const double freq = static_cast<double>(counts[i]) / static_cast<double>(N);
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(N));
    CHECK(std::fabs(freq - p) < 3.0 * sigma);
  }

  // determinism
  RngStream a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(sample_length(d, a) == sample_length(d, b));

  // degenerate one-hots never mis-assign
  LengthDistribution hot;
  hot.probs = {0.0, 1.0, 0.0};
  RngStream c(1);
  for (int i = 0; i < 50; ++i) CHECK(sample_length(hot, c) == 1);
}

TEST_CASE("chunk buffer is strict about counts and tracks discards") {
  ChunkBuffer buf;
  Array chunk({3, 2});
  for (std::size_t i = 0; i < 6; ++i) chunk.data[i] = static_cast<double>(i);

  buf.push_chunk(chunk, 2, 2);
  CHECK(buf.size() == 2);
  CHECK(buf.pop() == std::vector<double>{0.0, 1.0});
  CHECK(buf.pop() == std::vector<double>{2.0, 3.0});
  CHECK(buf.empty());
  CHECK_THROWS_AS(buf.pop(), AchError);

  buf.push_chunk(chunk, 3, 2);
  buf.pop();
  buf.on_episode_end();  // two pending actions dropped
  CHECK(buf.empty());
  CHECK(buf.discarded_total() == 2);
  buf.push_chunk(chunk, 1, 2);
  buf.on_episode_end();
  CHECK(buf.discarded_total() == 3);

  CHECK_THROWS_AS(buf.push_chunk(chunk, 4, 2), AchError);  // beyond the chunk
  CHECK_THROWS_AS(buf.push_chunk(chunk, 0, 2), AchError);
  CHECK_THROWS_AS(buf.push_chunk(chunk, 1, 4), AchError);  // bad layout
}

namespace {

struct ActFixture {
  PolicyConfig pol;
  CriticConfig cri;
  ParamStore policy, critic;

  ActFixture() {
    pol.obs_dim = 2;
    pol.act_dim = 1;
    pol.h = 2;
    pol.hidden = {8};
    cri.obs_dim = 2;
    cri.act_dim = 1;
    cri.h = 2;
    cri.d = 8;
    cri.heads = 2;
    cri.blocks = 1;
    cri.ff = 16;
    RngStream r1(11), r2(12);
    onestep_init(policy, pol, r1);
    critic_init(critic, cri, r2);
  }
};

}  // namespace

TEST_CASE("act: commit/pop cycle, fixed mode, and stream isolation") {
  ActFixture f;
  const std::vector<double> obs = {0.3, 0.6};

  SUBCASE("greedy commits the argmax prefix of the actual sampled chunk") {
    // Replicate the draw with a cloned stream, then ask the critic directly.
    RngStream z_probe(300);
    Array chunk = onestep_sample(f.policy, f.pol, Array::row(obs), z_probe);
    PrefixValues pv = critic_values(f.critic, f.cri, obs, chunk);
    std::size_t best = 0;
    for (std::size_t i = 1; i < pv.q.size(); ++i) {
      if (pv.q[i] > pv.q[best]) best = i;
    }

    ChunkBuffer buf;
    LengthSelectConfig sel;
    sel.mode = LengthMode::kGreedy;
    RngStream z_rng(300), len_rng(301);
    ActResult r = act(buf, f.policy, f.critic, f.pol, f.cri, obs, sel, z_rng, len_rng);
    CHECK(r.committed_len == best + 1);
    CHECK(r.action.size() == 1);
    CHECK(r.action[0] == chunk.data[0]);
    CHECK(r.entropy == doctest::Approx(0.0));

    // subsequent steps pop without re-committing until the buffer drains
    for (std::size_t step = 1; step < r.committed_len; ++step) {
      ActResult rr = act(buf, f.policy, f.critic, f.pol, f.cri, obs, sel, z_rng, len_rng);
      CHECK(rr.committed_len == 0);
      CHECK(rr.action[0] == chunk.data[step]);
    }
    CHECK(buf.empty());
  }

  SUBCASE("fixed mode commits exactly fixed_len and skips the critic") {
    ChunkBuffer buf;
    LengthSelectConfig sel;
    sel.mode = LengthMode::kFixed;
    sel.fixed_len = 3;
    RngStream z_rng(300), len_rng(301);
    ActResult r = act(buf, f.policy, f.critic, f.pol, f.cri, obs, sel, z_rng, len_rng);
    CHECK(r.committed_len == 3);
    CHECK(r.entropy == 0.0);
    // len stream untouched in fixed mode
    RngStream fresh(301);
    CHECK(len_rng.state().counter == fresh.state().counter);

    sel.fixed_len = 4;  // h+1 = 3, out of range
    ChunkBuffer buf2;
    CHECK_THROWS_AS(act(buf2, f.policy, f.critic, f.pol, f.cri, obs, sel, z_rng, len_rng),
                    AchError);
  }

  SUBCASE("z draws are identical across modes (isolated length stream)") {
    LengthSelectConfig soft;
    soft.mode = LengthMode::kSoft;
    LengthSelectConfig fixed;
    fixed.mode = LengthMode::kFixed;
    fixed.fixed_len = f.pol.h + 1;

    ChunkBuffer b1, b2;
    RngStream z1(555), l1(556), z2(555), l2(556);
    ActResult r1 = act(b1, f.policy, f.critic, f.pol, f.cri, obs, soft, z1, l1);
    ActResult r2 = act(b2, f.policy, f.critic, f.pol, f.cri, obs, fixed, z2, l2);
    CHECK(r1.action == r2.action);  // same chunk, bitwise
    CHECK(z1.state().counter == z2.state().counter);
  }

  SUBCASE("soft commit length is reproducible per seed") {
    LengthSelectConfig sel;
    sel.mode = LengthMode::kSoft;
    sel.beta = 1.0;
    ChunkBuffer b1, b2;
    RngStream z1(900), l1(901), z2(900), l2(901);
    ActResult r1 = act(b1, f.policy, f.critic, f.pol, f.cri, obs, sel, z1, l1);
    ActResult r2 = act(b2, f.policy, f.critic, f.pol, f.cri, obs, sel, z2, l2);
    CHECK(r1.committed_len == r2.committed_len);
    CHECK(r1.entropy == r2.entropy);
    CHECK(r1.entropy > 0.0);
  }
}

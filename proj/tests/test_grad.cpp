#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ach/array.hpp"
#include "ach/error.hpp"
#include "ach/graph.hpp"
#include "ach/mlp.hpp"
#include "ach/param_store.hpp"
#include "ach/rng.hpp"
#include "doctest.h"
#include "support/composite_graph.hpp"
#include "support/fd_check.hpp"

using namespace ach;

TEST_CASE("gelu matches the exact Gaussian-CDF form") {
  // Reference values computed from the N(0,1) CDF at high precision.
  CHECK(gelu_scalar(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(gelu_scalar(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));
  CHECK(gelu_scalar(-1.0) == doctest::Approx(-0.15865525393145707).epsilon(1e-12));
  CHECK(gelu_scalar(3.0) == doctest::Approx(2.9959503059051097).epsilon(1e-12));
  // Derivative at 0 is exactly 1/2 (CDF at 0) since the pdf term vanishes.
  CHECK(gelu_grad_scalar(0.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("softmax of [0, ln 2] is [1/3, 2/3]") {
  const double in[2] = {0.0, std::log(2.0)};
  double out[2];
  softmax_rows(in, out, 1, 2, kLogitClampLo, kLogitClampHi);
  CHECK(out[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax clamps huge logits instead of overflowing") {
  const double in[3] = {1e6, 0.0, -1e6};
  double out[3];
  softmax_rows(in, out, 1, 3, kLogitClampLo, kLogitClampHi);
  CHECK(std::isfinite(out[0]));
  CHECK(out[0] > 0.999);
  CHECK(out[0] + out[1] + out[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("causal softmax rows sum to one and future weights are exactly zero") {
  RngStream rng(7);
  const std::size_t t = 5;
  Array s({2 * t, t});
  for (double& x : s.data) x = rng.normal();
  Array p({2 * t, t});
  causal_softmax_blocks(s.data.data(), p.data.data(), 2, t, kLogitClampLo, kLogitClampHi);
  for (std::size_t blk = 0; blk < 2; ++blk) {
    for (std::size_t i = 0; i < t; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < t; ++j) {
        const double w = p.data[(blk * t + i) * t + j];
        if (j > i) {
          CHECK(w == 0.0);  // bitwise zero, not just small
        }
        sum += w;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("matmul kernels agree with hand-computed products") {
  // A = [[1,2],[3,4]], B = [[5,6],[7,8]] -> AB = [[19,22],[43,50]]
  const double A[4] = {1, 2, 3, 4};
  const double B[4] = {5, 6, 7, 8};
  double C[4];
  mm_nn(A, B, C, 2, 2, 2, false);
  CHECK(C[0] == 19.0);
  CHECK(C[1] == 22.0);
  CHECK(C[2] == 43.0);
  CHECK(C[3] == 50.0);
  // A * B^T = [[17,23],[39,53]]
  mm_nt(A, B, C, 2, 2, 2, false);
  CHECK(C[0] == 17.0);
  CHECK(C[1] == 23.0);
  CHECK(C[2] == 39.0);
  CHECK(C[3] == 53.0);
  // A^T * B = [[26,30],[38,44]]
  mm_tn(A, B, C, 2, 2, 2, false);
  CHECK(C[0] == 26.0);
  CHECK(C[1] == 30.0);
  CHECK(C[2] == 38.0);
  CHECK(C[3] == 44.0);
}

TEST_CASE("layer_norm normalizes rows against an independent computation") {
  ParamStore st;
  st.create_const("g", {1, 3}, 1.0);
  st.create("b", {1, 3});
  Graph g;
  Array x({1, 3});
  x.data = {1.0, 2.0, 3.0};
  NodeId out = g.layer_norm(g.constant(x), g.param(st.get("g")), g.param(st.get("b")));
  // mean 2, biased variance 2/3; x_hat computed directly here.
  const double rstd = 1.0 / std::sqrt(2.0 / 3.0 + 1e-5);
  CHECK(g.value(out).data[0] == doctest::Approx(-rstd).epsilon(1e-14));
  CHECK(g.value(out).data[1] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(g.value(out).data[2] == doctest::Approx(rstd).epsilon(1e-14));
}

TEST_CASE("composite graph gradients match central finite differences") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    auto cs = ach::testing::make_composite(seed);
    auto rep = ach::testing::fd_check(
        cs.store, [&] { return ach::testing::composite_loss(cs); },
        [&] { ach::testing::composite_backprop(cs); });
    INFO("seed ", seed, " worst rel err ", rep.worst, " at ", rep.worst_name);
    CHECK(rep.coords > 100);
    CHECK(rep.worst < 1e-5);
  }
}

TEST_CASE("backward accumulates across repeated calls") {
  auto cs = ach::testing::make_composite(42);
  cs.store.zero_grads();
  ach::testing::composite_eval(cs, true);
  std::vector<double> once = cs.store.get("attn.wq").grad.data;
  ach::testing::composite_eval(cs, true);
  const auto& twice = cs.store.get("attn.wq").grad.data;
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(twice[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));
  }
}

TEST_CASE("frozen parameters receive no gradient") {
  ParamStore st;
  RngStream rng(3);
  st.create_xavier("w_live", 2, 2, rng);
  st.create_xavier("w_frozen", 2, 2, rng);
  Graph g;
  Array x({1, 2});
  x.data = {0.3, -0.7};
  NodeId h = g.matmul(g.constant(x), g.param(st.get("w_live"), true));
  NodeId y = g.matmul(h, g.param(st.get("w_frozen"), false));
  Array target({1, 2}, 0.0);
  Array w({1, 2}, 1.0);
  NodeId loss = g.weighted_sse(y, target, w);
  st.zero_grads();
  g.backward(loss);
  double live = 0.0, frozen = 0.0;
  for (double v : st.get("w_live").grad.data) live += std::fabs(v);
  for (double v : st.get("w_frozen").grad.data) frozen += std::fabs(v);
  CHECK(live > 0.0);
  CHECK(frozen == 0.0);
}

TEST_CASE("adam first step moves a zero parameter by -lr * sign(grad)") {
  ParamStore st;
  st.create("p", {1});
  st.get("p").grad.data[0] = 0.5;
  AdamConfig cfg;
  st.adam_step(cfg, 1);
  CHECK(st.get("p").value.data[0] == doctest::Approx(-cfg.lr).epsilon(1e-6));

  st.get("p").grad.data[0] = -0.25;
  ParamStore st2;
  st2.create("p", {1});
  st2.get("p").grad.data[0] = -0.25;
  st2.adam_step(cfg, 1);
  CHECK(st2.get("p").value.data[0] == doctest::Approx(cfg.lr).epsilon(1e-6));
}

TEST_CASE("adam rejects non-positive learning rates") {
  ParamStore st;
  st.create("p", {1});
  AdamConfig cfg;
  cfg.lr = 0.0;
  CHECK_THROWS_AS(st.adam_step(cfg, 1), AchError);
}

TEST_CASE("xavier init stays inside the fan bound") {
  ParamStore st;
  RngStream rng(99);
  st.create_xavier("w", 30, 50, rng);
  const double bound = std::sqrt(6.0 / 80.0);
  for (double v : st.get("w").value.data) {
    CHECK(std::fabs(v) <= bound);
  }
}

TEST_CASE("parameter serialization round-trips bit-exactly") {
  ParamStore st;
  RngStream rng(5);
  st.create_xavier("net.w0", 4, 3, rng);
  st.create("net.b0", {1, 3});
  st.get("net.b0").value.data = {1e-300, -0.1, 3.141592653589793};
  auto& odd = st.create("odd", {2, 2, 2});
  for (std::size_t i = 0; i < odd.value.size(); ++i) odd.value.data[i] = rng.normal();

  const auto dir = std::filesystem::temp_directory_path() / "ach_test_params";
  std::filesystem::create_directories(dir);
  const std::string manifest = (dir / "p.manifest").string();
  const std::string blob = (dir / "p.blob").string();
  st.save(manifest, blob);
  ParamStore back = ParamStore::load(manifest, blob);

  REQUIRE(back.count() == st.count());
  for (const auto& name : st.names()) {
    const auto& a = st.get(name).value;
    const auto& b = back.get(name).value;
    REQUIRE(a.shape == b.shape);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.data[i] == b.data[i]);  // exact, not approximate
    }
  }
}

TEST_CASE("polyak blend mixes target toward online") {
  ParamStore online, target;
  online.create_const("w", {2}, 1.0);
  target.create_const("w", {2}, 0.0);
  ParamStore::polyak_blend(online, target, 0.005);
  CHECK(target.get("w").value.data[0] == doctest::Approx(0.005).epsilon(1e-15));
  ParamStore::polyak_blend(online, target, 1.0);
  CHECK(target.get("w").value.data[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("rng streams are deterministic and name-separated") {
  RngHub h1(1234), h2(1234);
  auto& a1 = h1.stream("env");
  auto& a2 = h2.stream("env");
  for (int i = 0; i < 16; ++i) CHECK(a1.next_u64() == a2.next_u64());

  RngHub h3(1234);
  auto& env = h3.stream("env");
  auto& eval = h3.stream("eval");
  bool all_equal = true;
  for (int i = 0; i < 16; ++i) {
    if (env.next_u64() != eval.next_u64()) all_equal = false;
  }
  CHECK(!all_equal);
}

TEST_CASE("normal draws have sane moments and restorable state") {
  RngStream rng(2024);
  const int n = 20000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.05);
  CHECK(std::fabs(var - 1.0) < 0.1);

  auto st = rng.state();
  std::vector<double> expected;
  for (int i = 0; i < 9; ++i) expected.push_back(rng.normal());
  rng.restore(st);
  for (int i = 0; i < 9; ++i) CHECK(rng.normal() == expected[i]);
}

TEST_CASE("uniform_index covers its range without bias toward a value") {
  RngStream rng(77);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 10000; ++i) ++counts[rng.uniform_index(10)];
  for (int c : counts) {
    CHECK(c > 800);
    CHECK(c < 1200);
  }
}

TEST_CASE("graph rejects non-finite values as soon as they appear") {
  Graph g;
  Array bad({1, 2});
  bad.data = {1.0, std::nan("")};
  CHECK_THROWS_AS(g.constant(bad), AchError);
}

TEST_CASE("mlp forward shape and frozen-vs-live gradients") {
  ParamStore st;
  RngStream rng(8);
  MlpSpec spec{3, {5, 5}, 2};
  mlp_init(st, "net", spec, rng);
  Array x({4, 3});
  for (double& v : x.data) v = rng.normal();
  Array y = mlp_apply(st, "net", spec, x);
  CHECK(y.rows() == 4);
  CHECK(y.cols() == 2);

  // FD check the MLP through a scalar loss.
  Array target({4, 2}, 0.3);
  Array w({4, 2}, 1.0);
  auto loss = [&] {
    Graph g;
    NodeId out = mlp_forward(g, st, "net", spec, g.constant(x), true);
    return g.scalar_value(g.weighted_sse(out, target, w));
  };
  auto backprop = [&] {
    st.zero_grads();
    Graph g;
    NodeId out = mlp_forward(g, st, "net", spec, g.constant(x), true);
    g.backward(g.weighted_sse(out, target, w));
  };
  auto rep = ach::testing::fd_check(st, loss, backprop);
  INFO("worst rel err ", rep.worst, " at ", rep.worst_name);
  CHECK(rep.worst < 1e-5);
}

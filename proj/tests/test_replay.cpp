#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "ach/replay.hpp"
#include "ach/rng.hpp"
#include "ach/segment.hpp"

namespace {

ach::Transition make_tr(double tag, bool terminal = false, bool truncated = false) {
  ach::Transition t;
  t.obs = {tag, 0.5};
  t.action = {0.25, -0.25};
  t.reward = -1.0;
  t.next_obs = {tag + 1.0, 0.5};
  t.terminal = terminal;
  t.truncated = truncated;
  return t;
}

}  // namespace

TEST_CASE("replay: construction and bounds checks") {
  CHECK_THROWS_AS(ach::ReplayBuffer(0), std::runtime_error);

  ach::ReplayBuffer buf(4);
  CHECK(buf.capacity() == 4);
  CHECK(buf.size() == 0);
  CHECK(buf.inserted_total() == 0);
  CHECK(!buf.evicting());
  CHECK_THROWS_AS(buf.get(0), std::runtime_error);
  CHECK_THROWS_AS(buf.linked(0), std::runtime_error);
  buf.mark_episode_break();  // no-op on empty
  CHECK(buf.size() == 0);
}

TEST_CASE("replay: FIFO eviction keeps the newest transitions in order") {
  ach::ReplayBuffer buf(3);
  for (int i = 0; i < 4; ++i) buf.insert(make_tr(static_cast<double>(i)));

  CHECK(buf.size() == 3);
  CHECK(buf.inserted_total() == 4);
  CHECK(buf.evicting());
  // Oldest (tag 0) was evicted; logical order is temporal.
  CHECK(buf.get(0).obs[0] == 1.0);
  CHECK(buf.get(1).obs[0] == 2.0);
  CHECK(buf.get(2).obs[0] == 3.0);
  CHECK_THROWS_AS(buf.get(3), std::runtime_error);
}

TEST_CASE("replay: logical order stays temporal across many wraps") {
  ach::ReplayBuffer buf(4);
  for (int i = 0; i < 10; ++i) buf.insert(make_tr(static_cast<double>(i)));

  CHECK(buf.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(buf.get(i).obs[0] == static_cast<double>(6 + i));
  // One long episode: every adjacent pair is linked, the newest is not.
  CHECK(buf.linked(0));
  CHECK(buf.linked(1));
  CHECK(buf.linked(2));
  CHECK(!buf.linked(3));
}

TEST_CASE("replay: terminal and truncated flags break links") {
  ach::ReplayBuffer buf(8);
  buf.insert(make_tr(0.0));
  buf.insert(make_tr(1.0, /*terminal=*/true));
  buf.insert(make_tr(2.0));
  buf.insert(make_tr(3.0, /*terminal=*/false, /*truncated=*/true));
  buf.insert(make_tr(4.0));

  CHECK(buf.linked(0));
  CHECK(!buf.linked(1));  // terminal
  CHECK(buf.linked(2));
  CHECK(!buf.linked(3));  // truncated
  CHECK(!buf.linked(4));  // no successor yet
}

TEST_CASE("replay: forced episode break splices streams") {
  ach::ReplayBuffer buf(8);
  buf.insert(make_tr(0.0));
  buf.insert(make_tr(1.0));
  buf.mark_episode_break();
  buf.insert(make_tr(2.0));
  buf.insert(make_tr(3.0));

  CHECK(buf.linked(0));
  CHECK(!buf.linked(1));  // forced break, flags untouched
  CHECK(!buf.get(1).terminal);
  CHECK(!buf.get(1).truncated);
  CHECK(buf.linked(2));
}

TEST_CASE("replay: forced break is dropped with its slot on eviction") {
  ach::ReplayBuffer buf(3);
  buf.insert(make_tr(0.0));
  buf.insert(make_tr(1.0));
  buf.mark_episode_break();  // after tag 1
  buf.insert(make_tr(2.0));
  buf.insert(make_tr(3.0));  // evicts tag 0; tag 1 keeps its break

  CHECK(buf.get(0).obs[0] == 1.0);
  CHECK(!buf.linked(0));
  CHECK(buf.linked(1));

  buf.insert(make_tr(4.0));  // evicts tag 1 and its break with it
  CHECK(buf.get(0).obs[0] == 2.0);
  CHECK(buf.linked(0));
  CHECK(buf.linked(1));
}

TEST_CASE("replay: segments cut at a forced seam but keep the bootstrap flag") {
  ach::ReplayBuffer buf(16);
  for (int i = 0; i < 5; ++i) buf.insert(make_tr(static_cast<double>(i)));
  // Pretend indices 0..2 and 3..4 came from different streams.
  ach::ReplayBuffer two(16);
  two.insert(make_tr(0.0));
  two.insert(make_tr(1.0));
  two.insert(make_tr(2.0));
  two.mark_episode_break();
  two.insert(make_tr(3.0));
  two.insert(make_tr(4.0));

  const ach::TransitionSegment seg = ach::build_segment(two, /*h=*/4, /*t=*/0);
  CHECK(seg.valid_count() == 3);
  CHECK(seg.bootstrap_valid);  // a seam is a data edge, not a terminal
  // The window-ending state is next_obs of the last valid transition.
  CHECK(seg.obs_seq.data[3 * 2 + 0] == 3.0);

  // Without the seam the same data yields a full window.
  const ach::TransitionSegment full = ach::build_segment(buf, /*h=*/4, /*t=*/0);
  CHECK(full.valid_count() == 5);
}

TEST_CASE("replay: segment starts are sampled uniformly") {
  const std::size_t n = 100;
  ach::ReplayBuffer buf(n);
  for (std::size_t i = 0; i < n; ++i) buf.insert(make_tr(static_cast<double>(i)));

  ach::RngStream rng(20240811u);
  std::map<double, std::size_t> counts;
  const std::size_t draws = 100000;
  for (std::size_t rep = 0; rep < 100; ++rep) {
    const auto segs = ach::sample_segments(buf, /*h=*/3, /*batch=*/1000, rng);
    for (const auto& s : segs) counts[s.obs_seq.data[0]] += 1;
  }
  CHECK(counts.size() == n);
  // Binomial per index: mean 1000, sigma = sqrt(1e5 * 0.01 * 0.99) ~= 31.5.
  const double mean = static_cast<double>(draws) / static_cast<double>(n);
  const double sigma = std::sqrt(static_cast<double>(draws) * 0.01 * 0.99);
  for (const auto& [tag, c] : counts) {
    CHECK(std::abs(static_cast<double>(c) - mean) <= 4.0 * sigma);
  }
}

TEST_CASE("replay: subrange view exposes a slice with edge-clipped links") {
  ach::ReplayBuffer buf(16);
  for (int i = 0; i < 10; ++i) buf.insert(make_tr(static_cast<double>(i), /*terminal=*/i == 4));

  ach::SubrangeSource sub(buf, 3, 7);
  CHECK(sub.size() == 4);
  CHECK(sub.get(0).obs[0] == 3.0);
  CHECK(sub.get(3).obs[0] == 6.0);
  CHECK(sub.linked(0));   // 3 -> 4 intact
  CHECK(!sub.linked(1));  // 4 is terminal
  CHECK(sub.linked(2));   // 5 -> 6 intact
  CHECK(!sub.linked(3));  // clipped at the view edge even though 6 -> 7 exists
  CHECK_THROWS_AS(sub.get(4), std::runtime_error);

  CHECK_THROWS_AS(ach::SubrangeSource(buf, 5, 3), std::runtime_error);
  CHECK_THROWS_AS(ach::SubrangeSource(buf, 0, 11), std::runtime_error);
}

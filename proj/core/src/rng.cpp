#include "ach/rng.hpp"

#include <cmath>

#include "ach/error.hpp"

namespace ach {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t derive_stream_seed(std::uint64_t base_seed, const std::string& name) {
  std::uint64_t s = base_seed ^ fnv1a64(name);
  // One scramble round so adjacent base seeds do not give adjacent streams.
  return splitmix64(s);
}

std::uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::uniform() {
  // 53 random bits into [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  require(hi >= lo, "RngStream::uniform: hi < lo");
  return lo + (hi - lo) * uniform();
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  require(n > 0, "RngStream::uniform_index: n must be > 0");
  // Rejection sampling for an unbiased draw.
  const std::uint64_t limit = n * (UINT64_MAX / n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double mul = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * mul;
  has_spare_ = true;
  return u * mul;
}

void RngStream::fill_normal(std::vector<double>& out) {
  for (double& x : out) x = normal();
}

RngStream& RngHub::stream(const std::string& name) {
  for (auto& kv : streams_) {
    if (kv.first == name) return kv.second;
  }
  streams_.emplace_back(name, RngStream(derive_stream_seed(base_seed_, name)));
  return streams_.back().second;
}

bool RngHub::has_stream(const std::string& name) const {
  for (const auto& kv : streams_) {
    if (kv.first == name) return true;
  }
  return false;
}

std::vector<std::string> RngHub::stream_names() const {
  std::vector<std::string> names;
  names.reserve(streams_.size());
  for (const auto& kv : streams_) names.push_back(kv.first);
  return names;
}

RngStream::State RngHub::stream_state(const std::string& name) const {
  for (const auto& kv : streams_) {
    if (kv.first == name) return kv.second.state();
  }
  fail("RngHub::stream_state: unknown stream '" + name + "'");
}

void RngHub::restore_stream(const std::string& name, const RngStream::State& s) {
  stream(name).restore(s);
}

}  // namespace ach

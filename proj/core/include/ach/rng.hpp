#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ach {

// Deterministic pseudo-random stream. Every consumer of randomness owns a
// named stream derived from the run seed, so reordering one consumer's draws
// never perturbs another's. The generator is splitmix64; normal deviates come
// from the polar Box-Muller transform (one cached spare), so results are
// identical across platforms and compilers.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed) : state_(seed), spare_(0.0), has_spare_(false) {}

  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Integer uniform on [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via polar Box-Muller.
  double normal();

  void fill_normal(std::vector<double>& out);

  // Serializable state: (counter, spare, has_spare).
  struct State {
    std::uint64_t counter = 0;
    double spare = 0.0;
    bool has_spare = false;
  };
  State state() const { return {state_, spare_, has_spare_}; }
  void restore(const State& s) {
    state_ = s.counter;
    spare_ = s.spare;
    has_spare_ = s.has_spare;
  }

 private:
  std::uint64_t state_;
  double spare_;
  bool has_spare_;
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t fnv1a64(const std::string& text);

// Derives the seed for a named stream from the base run seed. Distinct names
// give statistically independent streams; the mapping is stable across runs.
std::uint64_t derive_stream_seed(std::uint64_t base_seed, const std::string& name);

// A bundle of named streams with lazily created members.
class RngHub {
 public:
  explicit RngHub(std::uint64_t base_seed = 0) : base_seed_(base_seed) {}

  std::uint64_t base_seed() const { return base_seed_; }

  // Returns the stream for `name`, creating it deterministically on first use.
  RngStream& stream(const std::string& name);
  bool has_stream(const std::string& name) const;

  std::vector<std::string> stream_names() const;
  RngStream::State stream_state(const std::string& name) const;
  void restore_stream(const std::string& name, const RngStream::State& s);

 private:
  std::uint64_t base_seed_;
  std::vector<std::pair<std::string, RngStream>> streams_;  // insertion order
};

}  // namespace ach

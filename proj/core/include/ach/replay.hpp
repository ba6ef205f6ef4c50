#pragma once

#include <cstddef>
#include <vector>

#include "ach/segment.hpp"

namespace ach {

// Fixed-capacity FIFO transition ring. Logical index 0 is always the oldest
// surviving transition, so consecutive logical indices are consecutive in
// time and the wrap point is invisible to samplers. Episode boundaries come
// from the transitions' own terminal/truncated flags plus explicit breaks
// (used when splicing independently collected data streams together).
class ReplayBuffer : public TransitionSource {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const override { return count_; }
  // Total insertions ever; exceeds size() once eviction starts.
  std::size_t inserted_total() const { return inserted_; }
  bool evicting() const { return inserted_ > capacity_; }

  const Transition& get(std::size_t i) const override;
  bool linked(std::size_t i) const override;

  // Appends, evicting the oldest transition when full.
  void insert(Transition tr);
  // Forces an episode boundary after the newest transition, regardless of
  // its flags. No-op on an empty buffer.
  void mark_episode_break();

 private:
  std::size_t physical(std::size_t i) const { return (head_ + i) % capacity_; }

  std::vector<Transition> items_;
  std::vector<unsigned char> forced_break_;
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  std::size_t inserted_ = 0;
};

// A contiguous logical slice [lo, hi) of another source, used for the
// optional symmetric offline/online replay sampling.
class SubrangeSource : public TransitionSource {
 public:
  SubrangeSource(const TransitionSource& base, std::size_t lo, std::size_t hi);
  std::size_t size() const override { return hi_ - lo_; }
  const Transition& get(std::size_t i) const override;
  bool linked(std::size_t i) const override;

 private:
  const TransitionSource& base_;
  std::size_t lo_;
  std::size_t hi_;
};

}  // namespace ach

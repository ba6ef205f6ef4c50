#include "ach/replay.hpp"

#include <stdexcept>
#include <string>
#include <utility>

namespace ach {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::runtime_error("replay: capacity must be positive");
  items_.reserve(capacity);
  forced_break_.reserve(capacity);
}

const Transition& ReplayBuffer::get(std::size_t i) const {
  if (i >= count_) throw std::runtime_error("replay: index " + std::to_string(i) + " out of range");
  return items_[physical(i)];
}

bool ReplayBuffer::linked(std::size_t i) const {
  if (i >= count_) throw std::runtime_error("replay: index " + std::to_string(i) + " out of range");
  if (i + 1 >= count_) return false;
  const std::size_t p = physical(i);
  return !items_[p].ends_episode() && !forced_break_[p];
}

void ReplayBuffer::insert(Transition tr) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(tr));
    forced_break_.push_back(0);
    ++count_;
  } else {
    items_[head_] = std::move(tr);
    forced_break_[head_] = 0;
    head_ = (head_ + 1) % capacity_;
    // count_ stays at capacity_; the slot just written is the newest, which
    // the rotated head keeps at logical index count_ - 1.
  }
  ++inserted_;
}

void ReplayBuffer::mark_episode_break() {
  if (count_ == 0) return;
  forced_break_[physical(count_ - 1)] = 1;
}

SubrangeSource::SubrangeSource(const TransitionSource& base, std::size_t lo, std::size_t hi)
    : base_(base), lo_(lo), hi_(hi) {
  if (lo > hi || hi > base.size())
    throw std::runtime_error("replay: subrange [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + ") out of bounds for size " +
                             std::to_string(base.size()));
}

const Transition& SubrangeSource::get(std::size_t i) const {
  if (i >= size()) throw std::runtime_error("replay: subrange index out of range");
  return base_.get(lo_ + i);
}

bool SubrangeSource::linked(std::size_t i) const {
  return i + 1 < size() && base_.linked(lo_ + i);
}

}  // namespace ach

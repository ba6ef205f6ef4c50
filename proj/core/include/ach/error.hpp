#pragma once

#include <stdexcept>
#include <string>

namespace ach {

// All recoverable failures in this library throw AchError with a message that
// names the offending operation and the values involved.
class AchError : public std::runtime_error {
 public:
  explicit AchError(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw AchError(msg); }

inline void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

}  // namespace ach

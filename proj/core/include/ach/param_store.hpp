#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ach/array.hpp"
#include "ach/rng.hpp"

namespace ach {

// Named parameter collection. Iteration order is the lexicographic name
// order of std::map, which fixes initialization, update, and serialization
// order once and for all — a prerequisite for bitwise-reproducible runs.
struct Param {
  Array value;
  Array grad;       // same shape as value, accumulated
  Array adam_m;     // first-moment estimate
  Array adam_v;     // second-moment estimate
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class ParamStore {
 public:
  // Creates a parameter initialized to zeros. Errors on duplicate names.
  Param& create(const std::string& name, const std::vector<std::size_t>& shape);
  // Xavier-uniform init on ±sqrt(6/(fan_in+fan_out)) for a (fan_in, fan_out)
  // weight matrix.
  Param& create_xavier(const std::string& name, std::size_t fan_in, std::size_t fan_out,
                       RngStream& rng);
  Param& create_const(const std::string& name, const std::vector<std::size_t>& shape,
                      double fill);

  bool has(const std::string& name) const { return params_.count(name) != 0; }
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  const Array& value(const std::string& name) const { return get(name).value; }

  std::size_t count() const { return params_.size(); }
  std::size_t total_elements() const;
  std::vector<std::string> names() const;

  void zero_grads();

  // One bias-corrected Adam update over every parameter, in name order.
  // step_index is 1-based. Errors if lr <= 0.
  void adam_step(const AdamConfig& cfg, std::uint64_t step_index);

  // target <- (1 - tau) * target + tau * online, matched by name. The two
  // stores must have identical names and shapes.
  static void polyak_blend(const ParamStore& online, ParamStore& target, double tau);

  // Hard copy of values (used to initialize a target network). Adam state and
  // grads in `dst` are reset to zero.
  static void copy_values(const ParamStore& src, ParamStore& dst);

  // Serialization: a UTF-8 manifest (one record per parameter: name, shape,
  // byte offset into the blob) plus a little-endian float64 blob. Round-trips
  // are bit-exact.
  void save(const std::string& manifest_path, const std::string& blob_path) const;
  static ParamStore load(const std::string& manifest_path, const std::string& blob_path);

  // Grand total of |grad| over all parameters (L2 norm), for diagnostics.
  double grad_l2_norm() const;

  std::map<std::string, Param>& raw() { return params_; }
  const std::map<std::string, Param>& raw() const { return params_; }

 private:
  std::map<std::string, Param> params_;
};

}  // namespace ach

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ach/param_store.hpp"

namespace ach::testing {

struct FdReport {
  std::size_t coords = 0;
  std::size_t within_tight = 0;  // rel err < tight
  double worst = 0.0;
  std::string worst_name;
};

// Central-difference gradient check over every coordinate of every parameter
// in `store`. `loss` must evaluate the objective at the store's current
// values without touching gradients; `backprop` must zero grads, rebuild the
// graph, and run backward once. Relative error uses
// |a - n| / max(1, |a|, |n|).
inline FdReport fd_check(ParamStore& store, const std::function<double()>& loss,
                         const std::function<void()>& backprop, double eps = 1e-4) {
  backprop();
  FdReport rep;
  for (auto& kv : store.raw()) {
    Param& p = kv.second;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value.data[i];
      p.value.data[i] = saved + eps;
      const double up = loss();
      p.value.data[i] = saved - eps;
      const double dn = loss();
      p.value.data[i] = saved;
      const double numeric = (up - dn) / (2.0 * eps);
      const double analytic = p.grad.data[i];
      const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
      const double rel = std::fabs(analytic - numeric) / denom;
      ++rep.coords;
      if (rel < 1e-3) ++rep.within_tight;
      if (rel > rep.worst) {
        rep.worst = rel;
        rep.worst_name = kv.first + "[" + std::to_string(i) + "]";
      }
    }
  }
  return rep;
}

}  // namespace ach::testing

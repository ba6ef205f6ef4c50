#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ach/graph.hpp"
#include "ach/param_store.hpp"
#include "ach/rng.hpp"

namespace ach {

// Fully connected network with GELU hidden activations and a linear output
// layer. Parameters live in a ParamStore under `prefix`.
struct MlpSpec {
  std::size_t in = 0;
  std::vector<std::size_t> hidden;
  std::size_t out = 0;
};

// Creates `prefix.w<i>` / `prefix.b<i>` parameters (Xavier-uniform weights,
// zero biases) for each layer.
void mlp_init(ParamStore& store, const std::string& prefix, const MlpSpec& spec, RngStream& rng);

// Appends the forward pass to `g`. `input` must have spec.in columns.
// With trainable=false the parameters enter as frozen constants.
NodeId mlp_forward(Graph& g, ParamStore& store, const std::string& prefix, const MlpSpec& spec,
                   NodeId input, bool trainable);

// Convenience inference path: builds a throwaway graph and returns the
// output value.
Array mlp_apply(ParamStore& store, const std::string& prefix, const MlpSpec& spec,
                const Array& input);

}  // namespace ach

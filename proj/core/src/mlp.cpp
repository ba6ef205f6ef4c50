#include "ach/mlp.hpp"

#include "ach/error.hpp"

namespace ach {

void mlp_init(ParamStore& store, const std::string& prefix, const MlpSpec& spec,
              RngStream& rng) {
  require(spec.in > 0 && spec.out > 0, "mlp_init: zero-width layer in spec");
  std::size_t prev = spec.in;
  std::size_t layer = 0;
  for (std::size_t hdim : spec.hidden) {
    require(hdim > 0, "mlp_init: zero-width hidden layer");
    store.create_xavier(prefix + ".w" + std::to_string(layer), prev, hdim, rng);
    store.create(prefix + ".b" + std::to_string(layer), {1, hdim});
    prev = hdim;
    ++layer;
  }
  store.create_xavier(prefix + ".w" + std::to_string(layer), prev, spec.out, rng);
  store.create(prefix + ".b" + std::to_string(layer), {1, spec.out});
}

NodeId mlp_forward(Graph& g, ParamStore& store, const std::string& prefix, const MlpSpec& spec,
                   NodeId input, bool trainable) {
  require(g.value(input).cols() == spec.in,
          "mlp_forward: input has " + std::to_string(g.value(input).cols()) +
              " columns, spec expects " + std::to_string(spec.in));
  NodeId x = input;
  const std::size_t n_layers = spec.hidden.size() + 1;
  for (std::size_t layer = 0; layer < n_layers; ++layer) {
    NodeId w = g.param(store.get(prefix + ".w" + std::to_string(layer)), trainable);
    NodeId b = g.param(store.get(prefix + ".b" + std::to_string(layer)), trainable);
    x = g.add(g.matmul(x, w), b);
    if (layer + 1 < n_layers) x = g.gelu(x);
  }
  return x;
}

Array mlp_apply(ParamStore& store, const std::string& prefix, const MlpSpec& spec,
                const Array& input) {
  Graph g;
  NodeId in = g.constant(input);
  NodeId out = mlp_forward(g, store, prefix, spec, in, false);
  return g.value(out);
}

}  // namespace ach

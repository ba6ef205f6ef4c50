#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ach/array.hpp"
#include "ach/param_store.hpp"

namespace ach {

using NodeId = std::size_t;

// Reverse-mode autodiff over a linear tape. Forward values are computed
// eagerly as nodes are appended; backward() replays the tape in reverse and
// accumulates parameter gradients into the owning ParamStore.
//
// A graph is built for one loss evaluation and then discarded. Parameter
// nodes reference the store's value buffers directly, so the store must not
// be updated while the graph is alive.
class Graph {
 public:
  explicit Graph(bool finite_checks = true) : finite_checks_(finite_checks) { nodes_.reserve(256); }

  // Leaves -------------------------------------------------------------
  NodeId constant(Array v);
  NodeId constant(const std::vector<double>& v, const std::vector<std::size_t>& shape);
  // trainable=false enters the parameter as a frozen constant; no gradient
  // flows into it (used for target networks and distillation anchors).
  NodeId param(Param& p, bool trainable = true);

  // Ops ------------------------------------------------------------------
  // C (m,n) = A (m,k) · B (k,n), on the (rows, cols) flattening.
  NodeId matmul(NodeId a, NodeId b);
  // Per-block A (t,c) · B (t,c)^T → (t,t); a and b hold `blocks` stacked blocks.
  NodeId bmm_nt(NodeId a, NodeId b, std::size_t blocks, std::size_t t);
  // Per-block W (t,t) · V (t,c) → (t,c).
  NodeId bmm_nn(NodeId w, NodeId v, std::size_t blocks, std::size_t t);
  // out[r, c] = a[r, c] + b[r % rows_b, c]; rows_b must divide rows_a and the
  // column counts must match. Covers equal-shape adds, bias rows, and
  // positional tables.
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId a, double s);
  // Elementwise product; shapes must match exactly.
  NodeId mul(NodeId a, NodeId b);
  NodeId gelu(NodeId a);
  NodeId tanh_act(NodeId a);
  // Row-wise layer norm with learned gain/bias of shape (1, cols), eps fixed.
  NodeId layer_norm(NodeId x, NodeId gain, NodeId bias);
  // Lower-triangular softmax over `blocks` stacked (t, t) score blocks with
  // logit clamping; above-diagonal weights are exactly zero.
  NodeId causal_softmax(NodeId scores, std::size_t blocks, std::size_t t);
  NodeId reshape(NodeId a, const std::vector<std::size_t>& shape);
  // Contiguous row slice [row0, row0 + nrows) of a (rows, cols) node.
  NodeId row_slice(NodeId a, std::size_t row0, std::size_t nrows);
  // Interleave per-sample state rows with their action rows:
  // s (B,d), a (B*n_act,d) → (B*(1+n_act), d).
  NodeId token_stack(NodeId s, NodeId a, std::size_t n_act);
  // Inverse selections on a (B*t, d) token matrix.
  NodeId take_state_rows(NodeId x, std::size_t t);
  NodeId take_action_rows(NodeId x, std::size_t t);
  // (B*t, h*c) → h heads stacked: ((b*h + i)*t + r, c).
  NodeId split_heads(NodeId x, std::size_t b, std::size_t t, std::size_t heads);
  NodeId merge_heads(NodeId x, std::size_t b, std::size_t t, std::size_t heads);
  // Scalar reductions; target/weights are plain arrays (no gradient).
  // weighted_sse = sum_i w_i (x_i - target_i)^2, matched by flat index.
  NodeId weighted_sse(NodeId x, const Array& target, const Array& weights);
  NodeId weighted_sum(NodeId x, const Array& weights);

  const Array& value(NodeId id) const;
  double scalar_value(NodeId id) const;
  std::size_t node_count() const { return nodes_.size(); }

  // Accumulates d(root)/d(param) into each trainable parameter's grad field.
  // root must be a single-element node. May be called repeatedly; each call
  // adds a full gradient.
  void backward(NodeId root);

 private:
  enum class Op {
    kConstant,
    kParam,
    kMatMul,
    kBmmNT,
    kBmmNN,
    kAdd,
    kScale,
    kMul,
    kGelu,
    kTanh,
    kLayerNorm,
    kCausalSoftmax,
    kReshape,
    kRowSlice,
    kTokenStack,
    kTakeStateRows,
    kTakeActionRows,
    kSplitHeads,
    kMergeHeads,
    kWeightedSSE,
    kWeightedSum,
  };

  struct Node {
    Op op = Op::kConstant;
    Array value;                      // owned output (unused for param leaves)
    const Array* extern_value = nullptr;  // param leaves point at the store
    bool needs_grad = false;
    NodeId in0 = 0, in1 = 0, in2 = 0;
    std::size_t n_inputs = 0;
    Param* param = nullptr;
    Array aux;    // op-specific saved forward state
    Array aux2;   // op-specific saved forward state
    double s0 = 0.0;
    std::size_t i0 = 0, i1 = 0, i2 = 0;
  };

  const Array& val(NodeId id) const {
    const Node& n = nodes_[id];
    return n.extern_value ? *n.extern_value : n.value;
  }
  Array& grad_buf(NodeId id);

  bool finite_checks_;
  std::vector<Node> nodes_;
  std::vector<Array> grads_;
};

}  // namespace ach

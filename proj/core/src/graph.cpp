#include "ach/graph.hpp"

#include <cmath>

#include "ach/error.hpp"

namespace ach {

NodeId Graph::constant(Array v) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(v);
  n.needs_grad = false;
  nodes_.push_back(std::move(n));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "constant");
  return id;
}

NodeId Graph::constant(const std::vector<double>& v, const std::vector<std::size_t>& shape) {
  require(shape_product(shape) == v.size(), "Graph::constant: shape/data mismatch");
  Array a;
  a.shape = shape;
  a.data = v;
  return constant(std::move(a));
}

NodeId Graph::param(Param& p, bool trainable) {
  Node n;
  n.op = Op::kParam;
  n.extern_value = &p.value;
  n.param = trainable ? &p : nullptr;
  n.needs_grad = trainable;
  nodes_.push_back(std::move(n));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "param");
  return id;
}

const Array& Graph::value(NodeId id) const {
  require(id < nodes_.size(), "Graph::value: bad node id");
  return val(id);
}

double Graph::scalar_value(NodeId id) const {
  const Array& a = value(id);
  require(a.size() == 1, "Graph::scalar_value: node is not a scalar");
  return a.data[0];
}

Array& Graph::grad_buf(NodeId id) {
  if (grads_[id].size() == 0) grads_[id] = Array(val(id).shape);
  return grads_[id];
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Array& A = val(a);
  const Array& B = val(b);
  const std::size_t m = A.rows(), k = A.cols();
  require(B.rows() == k, "matmul: inner dims disagree, " + A.shape_str() + " vs " + B.shape_str());
  const std::size_t n = B.cols();
  Node nd;
  nd.op = Op::kMatMul;
  nd.in0 = a;
  nd.in1 = b;
  nd.n_inputs = 2;
  nd.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  nd.value = Array({m, n});
  mm_nn(A.data.data(), B.data.data(), nd.value.data.data(), m, k, n, false);
  nodes_.push_back(std::move(nd));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "matmul");
  return id;
}

NodeId Graph::bmm_nt(NodeId a, NodeId b, std::size_t blocks, std::size_t t) {
  const Array& A = val(a);
  const Array& B = val(b);
  require(A.rows() == blocks * t && B.rows() == blocks * t && A.cols() == B.cols(),
          "bmm_nt: bad block shapes " + A.shape_str() + " vs " + B.shape_str());
  const std::size_t c = A.cols();
  Node nd;
  nd.op = Op::kBmmNT;
  nd.in0 = a;
  nd.in1 = b;
  nd.n_inputs = 2;
  nd.i0 = blocks;
  nd.i1 = t;
  nd.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  nd.value = Array({blocks * t, t});
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    mm_nt(A.data.data() + blk * t * c, B.data.data() + blk * t * c,
          nd.value.data.data() + blk * t * t, t, c, t, false);
  }
  nodes_.push_back(std::move(nd));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "bmm_nt");
  return id;
}

NodeId Graph::bmm_nn(NodeId w, NodeId v, std::size_t blocks, std::size_t t) {
  const Array& W = val(w);
  const Array& V = val(v);
  require(W.rows() == blocks * t && W.cols() == t, "bmm_nn: weight blocks must be (t,t)");
  require(V.rows() == blocks * t, "bmm_nn: value blocks must have t rows each");
  const std::size_t c = V.cols();
  Node nd;
  nd.op = Op::kBmmNN;
  nd.in0 = w;
  nd.in1 = v;
  nd.n_inputs = 2;
  nd.i0 = blocks;
  nd.i1 = t;
  nd.needs_grad = nodes_[w].needs_grad || nodes_[v].needs_grad;
  nd.value = Array({blocks * t, c});
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    mm_nn(W.data.data() + blk * t * t, V.data.data() + blk * t * c,
          nd.value.data.data() + blk * t * c, t, t, c, false);
  }
  nodes_.push_back(std::move(nd));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "bmm_nn");
  return id;
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Array& A = val(a);
  const Array& B = val(b);
  const std::size_t ra = A.rows(), ca = A.cols();
  const std::size_t rb = B.rows(), cb = B.cols();
  require(ca == cb && rb > 0 && ra % rb == 0,
          "add: shape " + B.shape_str() + " does not tile " + A.shape_str());
  Node nd;
  nd.op = Op::kAdd;
  nd.in0 = a;
  nd.in1 = b;
  nd.n_inputs = 2;
  nd.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  nd.value = Array(A.shape);
  for (std::size_t r = 0; r < ra; ++r) {
    const double* xa = A.data.data() + r * ca;
    const double* xb = B.data.data() + (r % rb) * ca;
    double* y = nd.value.data.data() + r * ca;
    for (std::size_t cidx = 0; cidx < ca; ++cidx) y[cidx] = xa[cidx] + xb[cidx];
  }
  nodes_.push_back(std::move(nd));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "add");
  return id;
}

NodeId Graph::scale(NodeId a, double s) {
  const Array& A = val(a);
  Node nd;
  nd.op = Op::kScale;
  nd.in0 = a;
  nd.n_inputs = 1;
  nd.s0 = s;
  nd.needs_grad = nodes_[a].needs_grad;
  nd.value = Array(A.shape);
  for (std::size_t i = 0; i < A.size(); ++i) nd.value.data[i] = s * A.data[i];
  nodes_.push_back(std::move(nd));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "scale");
  return id;
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Array& A = val(a);
  const Array& B = val(b);
  require(A.same_shape(B), "mul: shape mismatch " + A.shape_str() + " vs " + B.shape_str());
  Node nd;
  nd.op = Op::kMul;
  nd.in0 = a;
  nd.in1 = b;
  nd.n_inputs = 2;
  nd.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  nd.value = Array(A.shape);
  for (std::size_t i = 0; i < A.size(); ++i) nd.value.data[i] = A.data[i] * B.data[i];
  nodes_.push_back(std::move(nd));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "mul");
  return id;
}

NodeId Graph::gelu(NodeId a) {
  const Array& A = val(a);
  Node nd;
  nd.op = Op::kGelu;
  nd.in0 = a;
  nd.n_inputs = 1;
  nd.needs_grad = nodes_[a].needs_grad;
  nd.value = Array(A.shape);
  for (std::size_t i = 0; i < A.size(); ++i) nd.value.data[i] = gelu_scalar(A.data[i]);
  nodes_.push_back(std::move(nd));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "gelu");
  return id;
}

NodeId Graph::tanh_act(NodeId a) {
  const Array& A = val(a);
  Node nd;
  nd.op = Op::kTanh;
  nd.in0 = a;
  nd.n_inputs = 1;
  nd.needs_grad = nodes_[a].needs_grad;
  nd.value = Array(A.shape);
  for (std::size_t i = 0; i < A.size(); ++i) nd.value.data[i] = std::tanh(A.data[i]);
  nodes_.push_back(std::move(nd));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "tanh");
  return id;
}

NodeId Graph::layer_norm(NodeId x, NodeId gain, NodeId bias) {
  const Array& X = val(x);
  const Array& G = val(gain);
  const Array& Bv = val(bias);
  const std::size_t r = X.rows(), c = X.cols();
  require(G.size() == c && Bv.size() == c, "layer_norm: gain/bias must have `cols` elements");
  Node nd;
  nd.op = Op::kLayerNorm;
  nd.in0 = x;
  nd.in1 = gain;
  nd.in2 = bias;
  nd.n_inputs = 3;
  nd.needs_grad = nodes_[x].needs_grad || nodes_[gain].needs_grad || nodes_[bias].needs_grad;
  nd.value = Array(X.shape);
  nd.aux = Array(X.shape);      // normalized rows x_hat
  nd.aux2 = Array({r});         // reciprocal std per row
  for (std::size_t i = 0; i < r; ++i) {
    const double* xi = X.data.data() + i * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += xi[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = xi[j] - mu;
      var += d * d;
    }
    var /= static_cast<double>(c);
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    nd.aux2.data[i] = rstd;
    double* xh = nd.aux.data.data() + i * c;
    double* y = nd.value.data.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) {
      xh[j] = (xi[j] - mu) * rstd;
      y[j] = G.data[j] * xh[j] + Bv.data[j];
    }
  }
  nodes_.push_back(std::move(nd));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "layer_norm");
  return id;
}

NodeId Graph::causal_softmax(NodeId scores, std::size_t blocks, std::size_t t) {
  const Array& S = val(scores);
  require(S.rows() == blocks * t && S.cols() == t, "causal_softmax: expected stacked (t,t) blocks");
  Node nd;
  nd.op = Op::kCausalSoftmax;
  nd.in0 = scores;
  nd.n_inputs = 1;
  nd.i0 = blocks;
  nd.i1 = t;
  nd.needs_grad = nodes_[scores].needs_grad;
  nd.value = Array(S.shape);
  causal_softmax_blocks(S.data.data(), nd.value.data.data(), blocks, t, kLogitClampLo,
                        kLogitClampHi);
  nodes_.push_back(std::move(nd));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "causal_softmax");
  return id;
}

NodeId Graph::reshape(NodeId a, const std::vector<std::size_t>& shape) {
  const Array& A = val(a);
  require(shape_product(shape) == A.size(),
          "reshape: element count mismatch from " + A.shape_str());
  Node nd;
  nd.op = Op::kReshape;
  nd.in0 = a;
  nd.n_inputs = 1;
  nd.needs_grad = nodes_[a].needs_grad;
  nd.value = A;
  nd.value.shape = shape;
  nodes_.push_back(std::move(nd));
  return nodes_.size() - 1;
}

NodeId Graph::row_slice(NodeId a, std::size_t row0, std::size_t nrows) {
  const Array& A = val(a);
  require(nrows > 0 && row0 + nrows <= A.rows(),
          "row_slice: [" + std::to_string(row0) + ", " + std::to_string(row0 + nrows) +
              ") out of range for " + A.shape_str());
  const std::size_t c = A.cols();
  Node nd;
  nd.op = Op::kRowSlice;
  nd.in0 = a;
  nd.n_inputs = 1;
  nd.i0 = row0;
  nd.i1 = nrows;
  nd.needs_grad = nodes_[a].needs_grad;
  nd.value = Array({nrows, c});
  for (std::size_t i = 0; i < nrows * c; ++i) nd.value.data[i] = A.data[row0 * c + i];
  nodes_.push_back(std::move(nd));
  return nodes_.size() - 1;
}

NodeId Graph::token_stack(NodeId s, NodeId a, std::size_t n_act) {
  const Array& S = val(s);
  const Array& A = val(a);
  const std::size_t b = S.rows(), d = S.cols();
  require(n_act > 0, "token_stack: need at least one action token");
  require(A.cols() == d && A.rows() == b * n_act,
          "token_stack: actions " + A.shape_str() + " do not match states " + S.shape_str());
  const std::size_t t = 1 + n_act;
  Node nd;
  nd.op = Op::kTokenStack;
  nd.in0 = s;
  nd.in1 = a;
  nd.n_inputs = 2;
  nd.i0 = b;
  nd.i1 = n_act;
  nd.needs_grad = nodes_[s].needs_grad || nodes_[a].needs_grad;
  nd.value = Array({b * t, d});
  for (std::size_t bi = 0; bi < b; ++bi) {
    double* out = nd.value.data.data() + bi * t * d;
    const double* srow = S.data.data() + bi * d;
    for (std::size_t j = 0; j < d; ++j) out[j] = srow[j];
    const double* arows = A.data.data() + bi * n_act * d;
    for (std::size_t k = 0; k < n_act * d; ++k) out[d + k] = arows[k];
  }
  nodes_.push_back(std::move(nd));
  return nodes_.size() - 1;
}

NodeId Graph::take_state_rows(NodeId x, std::size_t t) {
  const Array& X = val(x);
  require(t > 0 && X.rows() % t == 0, "take_state_rows: row count not divisible by t");
  const std::size_t b = X.rows() / t, d = X.cols();
  Node nd;
  nd.op = Op::kTakeStateRows;
  nd.in0 = x;
  nd.n_inputs = 1;
  nd.i0 = b;
  nd.i1 = t;
  nd.needs_grad = nodes_[x].needs_grad;
  nd.value = Array({b, d});
  for (std::size_t bi = 0; bi < b; ++bi) {
    const double* src = X.data.data() + bi * t * d;
    double* dst = nd.value.data.data() + bi * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
  }
  nodes_.push_back(std::move(nd));
  return nodes_.size() - 1;
}

NodeId Graph::take_action_rows(NodeId x, std::size_t t) {
  const Array& X = val(x);
  require(t > 1 && X.rows() % t == 0, "take_action_rows: row count not divisible by t");
  const std::size_t b = X.rows() / t, d = X.cols();
  Node nd;
  nd.op = Op::kTakeActionRows;
  nd.in0 = x;
  nd.n_inputs = 1;
  nd.i0 = b;
  nd.i1 = t;
  nd.needs_grad = nodes_[x].needs_grad;
  nd.value = Array({b * (t - 1), d});
  for (std::size_t bi = 0; bi < b; ++bi) {
    const double* src = X.data.data() + (bi * t + 1) * d;
    double* dst = nd.value.data.data() + bi * (t - 1) * d;
    for (std::size_t k = 0; k < (t - 1) * d; ++k) dst[k] = src[k];
  }
  nodes_.push_back(std::move(nd));
  return nodes_.size() - 1;
}

NodeId Graph::split_heads(NodeId x, std::size_t b, std::size_t t, std::size_t heads) {
  const Array& X = val(x);
  const std::size_t d = X.cols();
  require(X.rows() == b * t, "split_heads: row count mismatch");
  require(heads > 0 && d % heads == 0, "split_heads: head count must divide model dim");
  const std::size_t dh = d / heads;
  Node nd;
  nd.op = Op::kSplitHeads;
  nd.in0 = x;
  nd.n_inputs = 1;
  nd.i0 = b;
  nd.i1 = t;
  nd.i2 = heads;
  nd.needs_grad = nodes_[x].needs_grad;
  nd.value = Array({b * heads * t, dh});
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t r = 0; r < t; ++r) {
        const double* src = X.data.data() + (bi * t + r) * d + h * dh;
        double* dst = nd.value.data.data() + ((bi * heads + h) * t + r) * dh;
        for (std::size_t j = 0; j < dh; ++j) dst[j] = src[j];
      }
    }
  }
  nodes_.push_back(std::move(nd));
  return nodes_.size() - 1;
}

NodeId Graph::merge_heads(NodeId x, std::size_t b, std::size_t t, std::size_t heads) {
  const Array& X = val(x);
  const std::size_t dh = X.cols();
  require(X.rows() == b * heads * t, "merge_heads: row count mismatch");
  const std::size_t d = dh * heads;
  Node nd;
  nd.op = Op::kMergeHeads;
  nd.in0 = x;
  nd.n_inputs = 1;
  nd.i0 = b;
  nd.i1 = t;
  nd.i2 = heads;
  nd.needs_grad = nodes_[x].needs_grad;
  nd.value = Array({b * t, d});
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t r = 0; r < t; ++r) {
        const double* src = X.data.data() + ((bi * heads + h) * t + r) * dh;
        double* dst = nd.value.data.data() + (bi * t + r) * d + h * dh;
        for (std::size_t j = 0; j < dh; ++j) dst[j] = src[j];
      }
    }
  }
  nodes_.push_back(std::move(nd));
  return nodes_.size() - 1;
}

NodeId Graph::weighted_sse(NodeId x, const Array& target, const Array& weights) {
  const Array& X = val(x);
  require(target.size() == X.size(), "weighted_sse: target size mismatch");
  require(weights.size() == X.size(), "weighted_sse: weights size mismatch");
  Node nd;
  nd.op = Op::kWeightedSSE;
  nd.in0 = x;
  nd.n_inputs = 1;
  nd.needs_grad = nodes_[x].needs_grad;
  nd.aux = target;
  nd.aux2 = weights;
  double s = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double d = X.data[i] - target.data[i];
    s += weights.data[i] * d * d;
  }
  nd.value = Array::scalar(s);
  nodes_.push_back(std::move(nd));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "weighted_sse");
  return id;
}

NodeId Graph::weighted_sum(NodeId x, const Array& weights) {
  const Array& X = val(x);
  require(weights.size() == X.size(), "weighted_sum: weights size mismatch");
  Node nd;
  nd.op = Op::kWeightedSum;
  nd.in0 = x;
  nd.n_inputs = 1;
  nd.needs_grad = nodes_[x].needs_grad;
  nd.aux2 = weights;
  double s = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) s += weights.data[i] * X.data[i];
  nd.value = Array::scalar(s);
  nodes_.push_back(std::move(nd));
  const NodeId id = nodes_.size() - 1;
  if (finite_checks_) check_finite(val(id), "weighted_sum");
  return id;
}

void Graph::backward(NodeId root) {
  require(root < nodes_.size(), "backward: bad root id");
  require(val(root).size() == 1, "backward: root must be a scalar");
  grads_.assign(nodes_.size(), Array());
  if (!nodes_[root].needs_grad) return;
  grad_buf(root).data[0] = 1.0;

  for (std::size_t idx = nodes_.size(); idx-- > 0;) {
    Node& n = nodes_[idx];
    if (!n.needs_grad || grads_[idx].size() == 0) continue;
    const Array& g = grads_[idx];
    switch (n.op) {
      case Op::kConstant:
        break;
      case Op::kParam:
        if (n.param) {
          for (std::size_t i = 0; i < g.size(); ++i) n.param->grad.data[i] += g.data[i];
        }
        break;
      case Op::kMatMul: {
        const Array& A = val(n.in0);
        const Array& B = val(n.in1);
        const std::size_t m = A.rows(), k = A.cols(), c = B.cols();
        if (nodes_[n.in0].needs_grad) {
          mm_nt(g.data.data(), B.data.data(), grad_buf(n.in0).data.data(), m, c, k, true);
        }
        if (nodes_[n.in1].needs_grad) {
          mm_tn(A.data.data(), g.data.data(), grad_buf(n.in1).data.data(), k, m, c, true);
        }
        break;
      }
      case Op::kBmmNT: {
        const Array& A = val(n.in0);
        const Array& B = val(n.in1);
        const std::size_t blocks = n.i0, t = n.i1, c = A.cols();
        for (std::size_t blk = 0; blk < blocks; ++blk) {
          const double* gb = g.data.data() + blk * t * t;
          if (nodes_[n.in0].needs_grad) {
            mm_nn(gb, B.data.data() + blk * t * c, grad_buf(n.in0).data.data() + blk * t * c, t,
                  t, c, true);
          }
          if (nodes_[n.in1].needs_grad) {
            mm_tn(gb, A.data.data() + blk * t * c, grad_buf(n.in1).data.data() + blk * t * c, t,
                  t, c, true);
          }
        }
        break;
      }
      case Op::kBmmNN: {
        const Array& W = val(n.in0);
        const Array& V = val(n.in1);
        const std::size_t blocks = n.i0, t = n.i1, c = V.cols();
        for (std::size_t blk = 0; blk < blocks; ++blk) {
          const double* gb = g.data.data() + blk * t * c;
          if (nodes_[n.in0].needs_grad) {
            mm_nt(gb, V.data.data() + blk * t * c, grad_buf(n.in0).data.data() + blk * t * t, t,
                  c, t, true);
          }
          if (nodes_[n.in1].needs_grad) {
            mm_tn(W.data.data() + blk * t * t, gb, grad_buf(n.in1).data.data() + blk * t * c, t,
                  t, c, true);
          }
        }
        break;
      }
      case Op::kAdd: {
        const std::size_t ra = val(n.in0).rows(), ca = val(n.in0).cols();
        const std::size_t rb = val(n.in1).rows();
        if (nodes_[n.in0].needs_grad) {
          Array& ga = grad_buf(n.in0);
          for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
        }
        if (nodes_[n.in1].needs_grad) {
          Array& gb = grad_buf(n.in1);
          for (std::size_t r = 0; r < ra; ++r) {
            const double* gr = g.data.data() + r * ca;
            double* dst = gb.data.data() + (r % rb) * ca;
            for (std::size_t j = 0; j < ca; ++j) dst[j] += gr[j];
          }
        }
        break;
      }
      case Op::kScale: {
        if (nodes_[n.in0].needs_grad) {
          Array& ga = grad_buf(n.in0);
          for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += n.s0 * g.data[i];
        }
        break;
      }
      case Op::kMul: {
        const Array& A = val(n.in0);
        const Array& B = val(n.in1);
        if (nodes_[n.in0].needs_grad) {
          Array& ga = grad_buf(n.in0);
          for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * B.data[i];
        }
        if (nodes_[n.in1].needs_grad) {
          Array& gb = grad_buf(n.in1);
          for (std::size_t i = 0; i < g.size(); ++i) gb.data[i] += g.data[i] * A.data[i];
        }
        break;
      }
      case Op::kGelu: {
        if (nodes_[n.in0].needs_grad) {
          const Array& X = val(n.in0);
          Array& ga = grad_buf(n.in0);
          for (std::size_t i = 0; i < g.size(); ++i) {
            ga.data[i] += g.data[i] * gelu_grad_scalar(X.data[i]);
          }
        }
        break;
      }
      case Op::kTanh: {
        if (nodes_[n.in0].needs_grad) {
          Array& ga = grad_buf(n.in0);
          for (std::size_t i = 0; i < g.size(); ++i) {
            const double y = n.value.data[i];
            ga.data[i] += g.data[i] * (1.0 - y * y);
          }
        }
        break;
      }
      case Op::kLayerNorm: {
        const Array& G = val(n.in1);
        const std::size_t r = n.value.rows(), c = n.value.cols();
        const bool need_x = nodes_[n.in0].needs_grad;
        const bool need_gain = nodes_[n.in1].needs_grad;
        const bool need_bias = nodes_[n.in2].needs_grad;
        Array* gx = need_x ? &grad_buf(n.in0) : nullptr;
        Array* gg = need_gain ? &grad_buf(n.in1) : nullptr;
        Array* gb = need_bias ? &grad_buf(n.in2) : nullptr;
        for (std::size_t i = 0; i < r; ++i) {
          const double* go = g.data.data() + i * c;
          const double* xh = n.aux.data.data() + i * c;
          if (need_gain) {
            for (std::size_t j = 0; j < c; ++j) gg->data[j] += go[j] * xh[j];
          }
          if (need_bias) {
            for (std::size_t j = 0; j < c; ++j) gb->data[j] += go[j];
          }
          if (need_x) {
            const double rstd = n.aux2.data[i];
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
              const double t = go[j] * G.data[j];
              m1 += t;
              m2 += t * xh[j];
            }
            m1 /= static_cast<double>(c);
            m2 /= static_cast<double>(c);
            double* dst = gx->data.data() + i * c;
            for (std::size_t j = 0; j < c; ++j) {
              const double t = go[j] * G.data[j];
              dst[j] += rstd * (t - m1 - xh[j] * m2);
            }
          }
        }
        break;
      }
      case Op::kCausalSoftmax: {
        if (!nodes_[n.in0].needs_grad) break;
        const Array& S = val(n.in0);
        const std::size_t blocks = n.i0, t = n.i1;
        Array& gs = grad_buf(n.in0);
        for (std::size_t blk = 0; blk < blocks; ++blk) {
          for (std::size_t i = 0; i < t; ++i) {
            const std::size_t off = (blk * t + i) * t;
            const double* p = n.value.data.data() + off;
            const double* gp = g.data.data() + off;
            double dot = 0.0;
            for (std::size_t j = 0; j <= i; ++j) dot += p[j] * gp[j];
            for (std::size_t j = 0; j <= i; ++j) {
              const double s = S.data[off + j];
              // Clamped logits sit on a flat of the clamp; pass zero gradient.
              if (s <= kLogitClampLo || s >= kLogitClampHi) continue;
              gs.data[off + j] += p[j] * (gp[j] - dot);
            }
          }
        }
        break;
      }
      case Op::kReshape: {
        if (nodes_[n.in0].needs_grad) {
          Array& ga = grad_buf(n.in0);
          for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i];
        }
        break;
      }
      case Op::kRowSlice: {
        if (!nodes_[n.in0].needs_grad) break;
        const std::size_t c = n.value.cols();
        Array& ga = grad_buf(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data[n.i0 * c + i] += g.data[i];
        break;
      }
      case Op::kTokenStack: {
        const std::size_t b = n.i0, n_act = n.i1, t = 1 + n_act;
        const std::size_t d = n.value.cols();
        if (nodes_[n.in0].needs_grad) {
          Array& gs = grad_buf(n.in0);
          for (std::size_t bi = 0; bi < b; ++bi) {
            const double* src = g.data.data() + bi * t * d;
            double* dst = gs.data.data() + bi * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
          }
        }
        if (nodes_[n.in1].needs_grad) {
          Array& ga = grad_buf(n.in1);
          for (std::size_t bi = 0; bi < b; ++bi) {
            const double* src = g.data.data() + bi * t * d + d;
            double* dst = ga.data.data() + bi * n_act * d;
            for (std::size_t k = 0; k < n_act * d; ++k) dst[k] += src[k];
          }
        }
        break;
      }
      case Op::kTakeStateRows: {
        if (!nodes_[n.in0].needs_grad) break;
        const std::size_t b = n.i0, t = n.i1, d = n.value.cols();
        Array& gx = grad_buf(n.in0);
        for (std::size_t bi = 0; bi < b; ++bi) {
          const double* src = g.data.data() + bi * d;
          double* dst = gx.data.data() + bi * t * d;
          for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
        break;
      }
      case Op::kTakeActionRows: {
        if (!nodes_[n.in0].needs_grad) break;
        const std::size_t b = n.i0, t = n.i1, d = n.value.cols();
        Array& gx = grad_buf(n.in0);
        for (std::size_t bi = 0; bi < b; ++bi) {
          const double* src = g.data.data() + bi * (t - 1) * d;
          double* dst = gx.data.data() + (bi * t + 1) * d;
          for (std::size_t k = 0; k < (t - 1) * d; ++k) dst[k] += src[k];
        }
        break;
      }
      case Op::kSplitHeads: {
        if (!nodes_[n.in0].needs_grad) break;
        const std::size_t b = n.i0, t = n.i1, heads = n.i2;
        const std::size_t dh = n.value.cols(), d = dh * heads;
        Array& gx = grad_buf(n.in0);
        for (std::size_t bi = 0; bi < b; ++bi) {
          for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t r = 0; r < t; ++r) {
              const double* src = g.data.data() + ((bi * heads + h) * t + r) * dh;
              double* dst = gx.data.data() + (bi * t + r) * d + h * dh;
              for (std::size_t j = 0; j < dh; ++j) dst[j] += src[j];
            }
          }
        }
        break;
      }
      case Op::kMergeHeads: {
        if (!nodes_[n.in0].needs_grad) break;
        const std::size_t b = n.i0, t = n.i1, heads = n.i2;
        const std::size_t d = n.value.cols(), dh = d / heads;
        Array& gx = grad_buf(n.in0);
        for (std::size_t bi = 0; bi < b; ++bi) {
          for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t r = 0; r < t; ++r) {
              const double* src = g.data.data() + (bi * t + r) * d + h * dh;
              double* dst = gx.data.data() + ((bi * heads + h) * t + r) * dh;
              for (std::size_t j = 0; j < dh; ++j) dst[j] += src[j];
            }
          }
        }
        break;
      }
      case Op::kWeightedSSE: {
        if (!nodes_[n.in0].needs_grad) break;
        const Array& X = val(n.in0);
        Array& gx = grad_buf(n.in0);
        const double go = g.data[0];
        for (std::size_t i = 0; i < X.size(); ++i) {
          gx.data[i] += go * 2.0 * n.aux2.data[i] * (X.data[i] - n.aux.data[i]);
        }
        break;
      }
      case Op::kWeightedSum: {
        if (!nodes_[n.in0].needs_grad) break;
        Array& gx = grad_buf(n.in0);
        const double go = g.data[0];
        for (std::size_t i = 0; i < gx.size(); ++i) gx.data[i] += go * n.aux2.data[i];
        break;
      }
    }
  }
}

}  // namespace ach

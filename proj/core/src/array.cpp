#include "ach/array.hpp"

#include <cmath>
#include <sstream>

#include "ach/error.hpp"

namespace ach {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Array::Array(std::initializer_list<std::size_t> s, double fill)
    : shape(s), data(shape_product(shape), fill) {}

Array::Array(const std::vector<std::size_t>& s, double fill)
    : shape(s), data(shape_product(shape), fill) {}

Array Array::scalar(double v) {
  Array a{{1}};
  a.data[0] = v;
  return a;
}

Array Array::row(const std::vector<double>& v) {
  Array a{{1, v.size()}};
  a.data = v;
  a.shape = {1, v.size()};
  return a;
}

std::size_t Array::dim(std::size_t i) const {
  require(i < shape.size(), "Array::dim: axis out of range");
  return shape[i];
}

std::size_t Array::rows() const {
  require(!shape.empty(), "Array::rows: empty shape");
  return shape[0];
}

std::size_t Array::cols() const {
  require(!shape.empty(), "Array::cols: empty shape");
  return shape[0] == 0 ? 0 : data.size() / shape[0];
}

std::string Array::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

Array Array::reshaped(const std::vector<std::size_t>& new_shape) const {
  require(shape_product(new_shape) == data.size(),
          "Array::reshaped: element count mismatch, have " + shape_str());
  Array out;
  out.shape = new_shape;
  out.data = data;
  return out;
}

void check_finite(const double* p, std::size_t n, const std::string& what) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) {
      fail("non-finite value in " + what + " at flat index " + std::to_string(i));
    }
  }
}

void check_finite(const Array& a, const std::string& what) {
  check_finite(a.data.data(), a.data.size(), what);
}

void mm_nn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
           std::size_t n, bool acc) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = C + i * n;
    if (!acc) {
      for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    }
    const double* ai = A + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double a = ai[p];
      const double* bp = B + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += a * bp[j];
    }
  }
}

void mm_nt(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
           std::size_t n, bool acc) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = A + i * k;
    double* ci = C + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = B + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      if (acc) {
        ci[j] += s;
      } else {
        ci[j] = s;
      }
    }
  }
}

void mm_tn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
           std::size_t n, bool acc) {
  if (!acc) {
    for (std::size_t i = 0; i < m * n; ++i) C[i] = 0.0;
  }
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = A + p * m;
    const double* bp = B + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double a = ap[i];
      double* ci = C + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += a * bp[j];
    }
  }
}

double gelu_scalar(double x) {
  return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

double gelu_grad_scalar(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014327;  // 1/sqrt(2*pi)
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

void softmax_rows(const double* in, double* out, std::size_t rows, std::size_t cols,
                  double lo, double hi) {
  require(cols > 0, "softmax_rows: zero-length axis");
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = in + r * cols;
    double* y = out + r * cols;
    double m = lo;
    for (std::size_t j = 0; j < cols; ++j) {
      double c = x[j] < lo ? lo : (x[j] > hi ? hi : x[j]);
      if (c > m) m = c;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      double c = x[j] < lo ? lo : (x[j] > hi ? hi : x[j]);
      double e = std::exp(c - m);
      y[j] = e;
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < cols; ++j) y[j] *= inv;
  }
}

void causal_softmax_blocks(const double* in, double* out, std::size_t batch, std::size_t t,
                           double lo, double hi) {
  require(t > 0, "causal_softmax_blocks: zero-length block");
  for (std::size_t b = 0; b < batch; ++b) {
    const double* blk_in = in + b * t * t;
    double* blk_out = out + b * t * t;
    for (std::size_t i = 0; i < t; ++i) {
      const double* x = blk_in + i * t;
      double* y = blk_out + i * t;
      double m = lo;
      for (std::size_t j = 0; j <= i; ++j) {
        double c = x[j] < lo ? lo : (x[j] > hi ? hi : x[j]);
        if (c > m) m = c;
      }
      double sum = 0.0;
      for (std::size_t j = 0; j <= i; ++j) {
        double c = x[j] < lo ? lo : (x[j] > hi ? hi : x[j]);
        double e = std::exp(c - m);
        y[j] = e;
        sum += e;
      }
      const double inv = 1.0 / sum;
      for (std::size_t j = 0; j <= i; ++j) y[j] *= inv;
      // Future positions receive exactly zero weight; this is what makes the
      // per-prefix values independent of later actions bit for bit.
      for (std::size_t j = i + 1; j < t; ++j) y[j] = 0.0;
    }
  }
}

}  // namespace ach

#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace ach {

// Dense row-major tensor of doubles. Shapes are explicit; there is no
// broadcasting beyond what individual kernels document.
struct Array {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Array() = default;
  Array(std::initializer_list<std::size_t> s, double fill = 0.0);
  explicit Array(const std::vector<std::size_t>& s, double fill = 0.0);

  static Array scalar(double v);
  static Array row(const std::vector<double>& v);  // shape (1, n)

  std::size_t size() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }
  std::size_t dim(std::size_t i) const;
  // Leading dimension and the product of the remaining ones. Many kernels
  // treat an array as a (rows, cols) matrix under this flattening.
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }

  bool same_shape(const Array& o) const { return shape == o.shape; }
  std::string shape_str() const;

  Array reshaped(const std::vector<std::size_t>& new_shape) const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

// Throws AchError naming `what` if any element is NaN or infinite.
void check_finite(const Array& a, const std::string& what);
void check_finite(const double* p, std::size_t n, const std::string& what);

// ---------------------------------------------------------------------------
// Raw matrix kernels. All operate on row-major buffers. The `acc` flag
// selects between overwriting C and accumulating into it.
// ---------------------------------------------------------------------------

// C (m,n) = A (m,k) * B (k,n)
void mm_nn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
           std::size_t n, bool acc);
// C (m,n) = A (m,k) * B^T where B is (n,k)
void mm_nt(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
           std::size_t n, bool acc);
// C (m,n) = A^T * B where A is (k,m), B is (k,n)
void mm_tn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
           std::size_t n, bool acc);

// Numerically safe scalar helpers shared by forward and backward passes.
double gelu_scalar(double x);
double gelu_grad_scalar(double x);

// Row-wise softmax over the last axis with logits clamped to [lo, hi] before
// exponentiation. `out` may alias `in`. Rows of length zero are an error.
void softmax_rows(const double* in, double* out, std::size_t rows, std::size_t cols,
                  double lo, double hi);

// Stable lower-triangular (causal) softmax on square score blocks:
// for each of `batch` blocks of size (t, t), row i attends to columns 0..i.
// Entries above the diagonal are written as exactly 0.
void causal_softmax_blocks(const double* in, double* out, std::size_t batch, std::size_t t,
                           double lo, double hi);

constexpr double kLogitClampLo = -80.0;
constexpr double kLogitClampHi = 80.0;
constexpr double kLayerNormEps = 1e-5;

}  // namespace ach

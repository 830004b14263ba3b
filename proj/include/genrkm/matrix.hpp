#pragma once

// Dense row-major double-precision matrices and the symmetric eigensolver
// used everywhere else. Cyclic Jacobi: deterministic, dependency-free,
// adequate for the dense sizes this library targets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "genrkm/error.hpp"

namespace genrkm {

using Vec = std::vector<double>;

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, "matmul: inner dimensions differ");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = &b.data[k * b.cols];
      double* orow = &out.data[i * out.cols];
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

inline Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

inline double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

inline Vec matvec(const Matrix& a, const Vec& x) {
  require(a.cols == x.size(), "matvec: dimension mismatch");
  Vec out(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
  require(a.rows == b.rows && a.cols == b.cols, "add: shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

inline Matrix sub(const Matrix& a, const Matrix& b) {
  require(a.rows == b.rows && a.cols == b.cols, "sub: shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

inline Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.data) v *= s;
  return out;
}

inline double dot(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition
// ---------------------------------------------------------------------------

struct SymEigResult {
  Vec eigenvalues;      // top-k, sorted descending
  Matrix eigenvectors;  // n x k, column i pairs with eigenvalues[i]
};

namespace detail {

// Flip the column so its first entry with |value| > 1e-12 is positive.
inline void fix_sign(Matrix& v, std::size_t col) {
  for (std::size_t i = 0; i < v.rows; ++i) {
    const double x = v(i, col);
    if (std::fabs(x) > 1e-12) {
      if (x < 0.0)
        for (std::size_t r = 0; r < v.rows; ++r) v(r, col) = -v(r, col);
      return;
    }
  }
}

inline bool lex_less(const Matrix& v, std::size_t a, std::size_t b) {
  for (std::size_t i = 0; i < v.rows; ++i) {
    if (v(i, a) < v(i, b)) return true;
    if (v(i, a) > v(i, b)) return false;
  }
  return false;
}

}  // namespace detail

// Top-k eigenpairs of a symmetric matrix by cyclic Jacobi sweeps.
// Sign convention: first eigenvector component with magnitude > 1e-12 is
// positive. Equal eigenvalues are ordered by the sign-fixed eigenvectors'
// lexicographic order, so identical input bits give identical output bits.
inline SymEigResult sym_eig(const Matrix& a_in, std::size_t k, int max_sweeps = 60) {
  const std::size_t n = a_in.rows;
  if (a_in.rows != a_in.cols) throw ShapeError("sym_eig: matrix not square");
  if (k < 1 || k > n) throw ShapeError("sym_eig: k out of range");
  double maxabs = 0.0;
  for (double v : a_in.data) {
    if (!std::isfinite(v)) throw NumericError("sym_eig: non-finite entry");
    maxabs = std::max(maxabs, std::fabs(v));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::fabs(a_in(i, j) - a_in(j, i)) > 1e-12 * std::max(maxabs, 1.0))
        throw ShapeError("sym_eig: matrix not symmetric");

  Matrix a = a_in;
  // Symmetrize exactly so rotations preserve symmetry bit-for-bit.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = m;
      a(j, i) = m;
    }
  Matrix v = Matrix::identity(n);

  const double norm = frobenius_norm(a);
  const double off_tol = (norm > 0.0) ? 1e-14 * norm : 0.0;

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  bool converged = off_norm() <= off_tol;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0)
                             ? 1.0 / (theta + std::sqrt(theta * theta + 1.0))
                             : -1.0 / (-theta + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p);
          const double aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double apj = a(p, j);
          const double aqj = a(q, j);
          a(p, j) = c * apj - s * aqj;
          a(q, j) = s * apj + c * aqj;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
    converged = off_norm() <= off_tol;
  }
  if (!converged) throw ConvergenceError("sym_eig: Jacobi sweep cap exceeded");

  for (std::size_t j = 0; j < n; ++j) detail::fix_sign(v, j);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (a(x, x) != a(y, y)) return a(x, x) > a(y, y);
    return detail::lex_less(v, x, y);
  });

  SymEigResult out;
  out.eigenvalues.resize(k);
  out.eigenvectors = Matrix(n, k);
  for (std::size_t j = 0; j < k; ++j) {
    out.eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
  }
  return out;
}

}  // namespace genrkm

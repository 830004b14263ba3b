#pragma once

// Implicit feature maps: kernel evaluation, Gram assembly, centering.
// Centering follows the feature-space mean-subtraction identity
//   K_c = K - N^-1 11'K - N^-1 K11' + N^-2 11'K11'
// and the matching one-sided correction for out-of-sample columns, so
// train and test similarities live in the same centered feature space.

#include <cmath>
#include <cstddef>
#include <string>

#include "genrkm/error.hpp"
#include "genrkm/matrix.hpp"

namespace genrkm {

enum class KernelKind { gaussian, laplace, linear };

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double sigma = 1.0;  // bandwidth; ignored for linear

  void validate() const {
    if (kind != KernelKind::linear && !(sigma > 0.0))
      throw ConfigError("kernel: sigma must be positive");
  }
};

struct KernelMatrix {
  Matrix gram;
  bool centered = false;
};

inline const char* kernel_kind_name(KernelKind k) {
  switch (k) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::laplace: return "laplace";
    case KernelKind::linear: return "linear";
  }
  return "?";
}

inline KernelKind kernel_kind_from_name(const std::string& s) {
  if (s == "gaussian") return KernelKind::gaussian;
  if (s == "laplace") return KernelKind::laplace;
  if (s == "linear") return KernelKind::linear;
  throw ConfigError("unknown kernel kind: " + s);
}

// a and b are rows of a view matrix (one sample each).
inline double kernel_eval(const KernelSpec& spec, const double* a, const double* b,
                          std::size_t d) {
  spec.validate();
  switch (spec.kind) {
    case KernelKind::gaussian: {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double t = a[i] - b[i];
        s += t * t;
      }
      return std::exp(-s / (2.0 * spec.sigma * spec.sigma));
    }
    case KernelKind::laplace: {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double t = a[i] - b[i];
        s += t * t;
      }
      return std::exp(-std::sqrt(s) / spec.sigma);
    }
    case KernelKind::linear: {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) s += a[i] * b[i];
      return s;
    }
  }
  throw UsageError("kernel_eval: unreachable kind");
}

inline double kernel_eval(const KernelSpec& spec, const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ShapeError("kernel_eval: dimension mismatch");
  return kernel_eval(spec, a.data(), b.data(), a.size());
}

// X holds one sample per row (N x d).
inline KernelMatrix kernel_matrix(const KernelSpec& spec, const Matrix& x) {
  if (x.rows == 0) throw ShapeError("kernel_matrix: empty dataset");
  const std::size_t n = x.rows, d = x.cols;
  KernelMatrix out;
  out.gram = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = kernel_eval(spec, &x.data[i * d], &x.data[j * d], d);
      out.gram(i, j) = v;
      out.gram(j, i) = v;
    }
  }
  return out;
}

inline KernelMatrix center_kernel(const KernelMatrix& k) {
  if (k.centered) throw UsageError("center_kernel: matrix already centered");
  if (k.gram.rows != k.gram.cols) throw ShapeError("center_kernel: not square");
  const std::size_t n = k.gram.rows;
  Vec col_mean(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += k.gram(j, i);
    col_mean[i] = s / static_cast<double>(n);
    grand += s;
  }
  grand /= static_cast<double>(n * n);
  KernelMatrix out;
  out.gram = Matrix(n, n);
  out.centered = true;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.gram(i, j) = k.gram(i, j) - col_mean[j] - col_mean[i] + grand;
  return out;
}

// Kernel values of one candidate point against every training row.
inline Vec cross_kernel_vector(const KernelSpec& spec, const Matrix& x_train,
                               const Vec& x_star) {
  if (x_train.cols != x_star.size())
    throw ShapeError("cross_kernel_vector: dimension mismatch");
  Vec out(x_train.rows, 0.0);
  for (std::size_t i = 0; i < x_train.rows; ++i)
    out[i] = kernel_eval(spec, &x_train.data[i * x_train.cols], x_star.data(),
                         x_star.size());
  return out;
}

// One-sided centering of a cross-kernel vector against a training Gram whose
// row means and grand mean were taken before centering:
//   k_c = k - row_means - mean(k)*1 + grand_mean*1
inline Vec center_cross_vector(const Vec& k, const Vec& row_means, double grand_mean) {
  if (k.size() != row_means.size())
    throw ShapeError("center_cross_vector: length mismatch");
  double m = 0.0;
  for (double v : k) m += v;
  m /= static_cast<double>(k.size());
  Vec out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i)
    out[i] = k[i] - row_means[i] - m + grand_mean;
  return out;
}

inline Vec kernel_row_means(const KernelMatrix& k) {
  if (k.centered) throw UsageError("kernel_row_means: expected raw Gram");
  const std::size_t n = k.gram.rows;
  Vec mu(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += k.gram(i, j);
    mu[i] = s / static_cast<double>(n);
  }
  return mu;
}

inline double kernel_grand_mean(const KernelMatrix& k) {
  if (k.centered) throw UsageError("kernel_grand_mean: expected raw Gram");
  double s = 0.0;
  for (double v : k.gram.data) s += v;
  return s / static_cast<double>(k.gram.data.size());
}

}  // namespace genrkm

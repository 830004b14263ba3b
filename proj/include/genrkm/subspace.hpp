#pragma once

// Joint multi-view latent subspace. The dual path eigendecomposes the
// centered kernel sum  sum_l K_l/eta_l; the primal path eigendecomposes the
// stacked feature covariance block matrix. Both produce latent codes H
// (rows orthonormal, unit norm; Lambda carries all scale) linked to the
// interconnection matrices by the stationarity conditions
//   U_l = (1/eta_l) Phi_l H',   h_i = Lambda^-1 sum_l U_l' phi_l(x_i).

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "genrkm/error.hpp"
#include "genrkm/feature_map.hpp"
#include "genrkm/kernels.hpp"
#include "genrkm/matrix.hpp"

namespace genrkm {

struct ImplicitViewState {
  KernelSpec spec;
  Matrix train;  // N x d training rows, referenced by encoding and generation
  Vec row_means;          // raw-Gram row means
  double grand_mean = 0.0;
};

struct ExplicitViewState {
  FeatureMapParams fmap;   // feature map phi
  FeatureMapParams pmap;   // pre-image map psi
  Matrix interconnection;  // U: d_f x s
  Vec feature_mean;        // feature-space mean used for centering
};

struct ModelView {
  std::string name;
  double eta = 1.0;
  std::variant<ImplicitViewState, ExplicitViewState> state;

  bool implicit() const { return std::holds_alternative<ImplicitViewState>(state); }
  const ImplicitViewState& imp() const { return std::get<ImplicitViewState>(state); }
  const ExplicitViewState& exp() const { return std::get<ExplicitViewState>(state); }
};

struct LatentModel {
  Matrix h;    // s x N latent codes, one column per training sample
  Vec lambda;  // length s, strictly descending
  std::vector<ModelView> views;

  std::size_t s() const { return h.rows; }
  std::size_t n() const { return h.cols; }
};

struct DualResult {
  Matrix h;
  Vec lambda;
};

inline DualResult solve_dual(const std::vector<KernelMatrix>& kernels,
                             const std::vector<double>& etas, std::size_t s) {
  if (kernels.empty()) throw ShapeError("solve_dual: no views");
  if (kernels.size() != etas.size())
    throw ShapeError("solve_dual: kernels/etas length mismatch");
  const std::size_t n = kernels.front().gram.rows;
  if (s < 1 || s > n) throw ShapeError("solve_dual: s out of range");
  for (const auto& k : kernels) {
    if (!k.centered) throw UsageError("solve_dual: kernels must be centered");
    if (k.gram.rows != n || k.gram.cols != n)
      throw ShapeError("solve_dual: mismatched kernel sizes");
  }
  for (double e : etas)
    if (!(e > 0.0)) throw ConfigError("solve_dual: eta must be positive");

  Matrix sum(n, n);
  for (std::size_t v = 0; v < kernels.size(); ++v) {
    const double inv = 1.0 / etas[v];
    for (std::size_t i = 0; i < sum.data.size(); ++i)
      sum.data[i] += inv * kernels[v].gram.data[i];
  }
  const SymEigResult e = sym_eig(sum, s);
  DualResult out;
  out.lambda = e.eigenvalues;
  out.h = transpose(e.eigenvectors);  // rows are eigenvectors
  return out;
}

// U = (1/eta) Phi H'; Phi is d_f x N with columns phi(x_i).
inline Matrix compute_interconnections(const Matrix& phi, const Matrix& h, double eta) {
  if (phi.cols != h.cols) throw ShapeError("compute_interconnections: N mismatch");
  if (!(eta > 0.0)) throw ConfigError("compute_interconnections: eta must be positive");
  return scale(matmul(phi, transpose(h)), 1.0 / eta);
}

struct PrimalResult {
  std::vector<Matrix> interconnections;  // per view, d_l x s
  Vec lambda;
  Matrix h;  // s x N recovered through the stationarity conditions
};

// Phis: per view d_l x N, centered (zero row means). The stacked covariance
// matrix is symmetrized by scaling view blocks with 1/sqrt(eta_l); unit
// eigenvectors are rescaled so the interconnections satisfy U_l=(1/eta_l)Phi_l H'
// exactly, which makes the recovered H rows unit-norm like the dual's.
inline PrimalResult solve_primal(const std::vector<Matrix>& phis,
                                 const std::vector<double>& etas, std::size_t s) {
  if (phis.empty()) throw ShapeError("solve_primal: no views");
  if (phis.size() != etas.size())
    throw ShapeError("solve_primal: phis/etas length mismatch");
  const std::size_t n = phis.front().cols;
  std::size_t total_d = 0;
  for (const auto& p : phis) {
    if (p.cols != n) throw ShapeError("solve_primal: sample counts differ");
    total_d += p.rows;
  }
  if (s < 1 || s > total_d) throw ShapeError("solve_primal: s out of range");
  for (double e : etas)
    if (!(e > 0.0)) throw ConfigError("solve_primal: eta must be positive");

  Matrix psi(total_d, n);
  {
    std::size_t row = 0;
    for (std::size_t v = 0; v < phis.size(); ++v) {
      const double inv_sqrt = 1.0 / std::sqrt(etas[v]);
      for (std::size_t i = 0; i < phis[v].rows; ++i, ++row)
        for (std::size_t j = 0; j < n; ++j)
          psi(row, j) = inv_sqrt * phis[v](i, j);
    }
  }
  const SymEigResult e = sym_eig(matmul(psi, transpose(psi)), s);
  for (double l : e.eigenvalues)
    if (l < 1e-12)
      throw RankError("solve_primal: eigenvalue below 1e-12, latent recovery singular");

  PrimalResult out;
  out.lambda = e.eigenvalues;
  std::size_t row = 0;
  for (std::size_t v = 0; v < phis.size(); ++v) {
    Matrix u(phis[v].rows, s);
    const double inv_sqrt = 1.0 / std::sqrt(etas[v]);
    for (std::size_t i = 0; i < phis[v].rows; ++i)
      for (std::size_t j = 0; j < s; ++j)
        u(i, j) = e.eigenvectors(row + i, j) * std::sqrt(e.eigenvalues[j]) * inv_sqrt;
    out.interconnections.push_back(std::move(u));
    row += phis[v].rows;
  }
  // h_i = Lambda^-1 sum_l U_l' phi_l(x_i)
  Matrix acc(s, n);
  for (std::size_t v = 0; v < phis.size(); ++v) {
    const Matrix t = matmul(transpose(out.interconnections[v]), phis[v]);
    for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += t.data[i];
  }
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < n; ++j) acc(i, j) /= out.lambda[i];
  out.h = std::move(acc);
  return out;
}

// Components with eigenvalues this far below the leading one are treated as
// numerically absent ("the rest is noise") and refused rather than inverted.
inline void require_usable_spectrum(const Vec& lambda) {
  if (lambda.empty()) throw RankError("empty spectrum");
  const double lmax = lambda.front();
  for (double l : lambda)
    if (!(l > 1e-10 * lmax))
      throw RankError("spectrum component below 1e-10 of the leading eigenvalue");
}

// Out-of-sample latent code via the stationarity conditions. Implicit views
// use the kernel expansion with the train-time centering correction.
inline Vec encode(const LatentModel& model, const std::vector<Vec>& sample) {
  if (sample.size() != model.views.size())
    throw ShapeError("encode: wrong number of views");
  require_usable_spectrum(model.lambda);
  const std::size_t s = model.s();
  Vec h(s, 0.0);
  for (std::size_t v = 0; v < model.views.size(); ++v) {
    const ModelView& view = model.views[v];
    if (view.implicit()) {
      const ImplicitViewState& st = view.imp();
      const Vec k = cross_kernel_vector(st.spec, st.train, sample[v]);
      const Vec kc = center_cross_vector(k, st.row_means, st.grand_mean);
      const Vec hk = matvec(model.h, kc);
      const double inv = 1.0 / view.eta;
      for (std::size_t i = 0; i < s; ++i) h[i] += inv * hk[i];
    } else {
      const ExplicitViewState& st = view.exp();
      Vec f = forward(st.fmap, sample[v]);
      for (std::size_t i = 0; i < f.size(); ++i) f[i] -= st.feature_mean[i];
      const Vec uf = matvec(transpose(st.interconnection), f);
      for (std::size_t i = 0; i < s; ++i) h[i] += uf[i];
    }
  }
  for (std::size_t i = 0; i < s; ++i) h[i] /= model.lambda[i];
  return h;
}

}  // namespace genrkm

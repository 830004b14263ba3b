#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "genrkm/error.hpp"
#include "genrkm/feature_map.hpp"
#include "genrkm/kernels.hpp"
#include "genrkm/matrix.hpp"
#include "genrkm/subspace.hpp"

namespace genrkm {

struct ObjectiveConfig {
  double c_stab = 1.0;
  double gamma = 1.0;
  std::vector<double> etas;

  void validate() const {
    if (c_stab < 0.0) throw ConfigError("c_stab must be nonnegative");
    if (gamma < 0.0) throw ConfigError("gamma must be nonnegative");
    if (etas.empty()) throw ConfigError("at least one view weight required");
    for (double e : etas)
      if (!(e > 0.0)) throw ConfigError("view weights must be positive");
  }
};

struct EnergyBreakdown {
  double j_t = 0.0;
  double j_stab = 0.0;
  Vec recon_losses;
  double j_c = 0.0;
};

// Feature map and pre-image map pair for one view.
struct ViewMaps {
  FeatureMapParams fmap;
  FeatureMapParams pmap;
};

struct ViewGrads {
  MapGrads fmap;
  MapGrads pmap;
};

// Training energy, direct form: per-sample coupling terms plus the
// regularizers on the interconnection matrices.
inline double compute_Jt(const std::vector<Matrix>& features,
                         const std::vector<Matrix>& interconnections,
                         const Matrix& h, const Vec& lambda,
                         const std::vector<double>& etas) {
  const std::size_t v = features.size();
  if (v == 0) throw ShapeError("no views");
  if (interconnections.size() != v || etas.size() != v)
    throw ShapeError("per-view argument counts differ");
  const std::size_t n = h.cols;
  const std::size_t s = h.rows;
  if (lambda.size() != s) throw ShapeError("lambda length != latent dimension");
  for (std::size_t l = 0; l < v; ++l) {
    if (features[l].cols != n) throw ShapeError("feature batch size mismatch");
    if (interconnections[l].rows != features[l].rows ||
        interconnections[l].cols != s)
      throw ShapeError("interconnection shape mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < v; ++l) {
      const Matrix& phi = features[l];
      const Matrix& u = interconnections[l];
      double coupling = 0.0;
      for (std::size_t a = 0; a < phi.rows; ++a) {
        double uh = 0.0;
        for (std::size_t c = 0; c < s; ++c) uh += u(a, c) * h(c, i);
        coupling += phi(a, i) * uh;
      }
      total -= coupling;
    }
    double quad = 0.0;
    for (std::size_t c = 0; c < s; ++c) quad += lambda[c] * h(c, i) * h(c, i);
    total += 0.5 * quad;
  }
  for (std::size_t l = 0; l < v; ++l) {
    double tr = 0.0;
    for (double w : interconnections[l].data) tr += w * w;
    total += 0.5 * etas[l] * tr;
  }
  return total;
}

// Same energy with the interconnections eliminated at their stationary
// values: J_t = 1/2 tr(Lambda H H') - sum_l 1/(2 eta_l) tr(H K_l H').
inline double compute_Jt_dual(const Matrix& h, const Vec& lambda,
                              const std::vector<Matrix>& grams,
                              const std::vector<double>& etas) {
  if (grams.empty() || grams.size() != etas.size())
    throw ShapeError("per-view argument counts differ");
  const std::size_t n = h.cols;
  const std::size_t s = h.rows;
  if (lambda.size() != s) throw ShapeError("lambda length != latent dimension");
  double quad = 0.0;
  for (std::size_t c = 0; c < s; ++c) {
    double rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) rr += h(c, i) * h(c, i);
    quad += lambda[c] * rr;
  }
  double total = 0.5 * quad;
  for (std::size_t l = 0; l < grams.size(); ++l) {
    const Matrix& k = grams[l];
    if (k.rows != n || k.cols != n) throw ShapeError("gram size mismatch");
    const Matrix kh = matmul(k, transpose(h));
    double tr = 0.0;
    for (std::size_t c = 0; c < s; ++c)
      for (std::size_t i = 0; i < n; ++i) tr += h(c, i) * kh(i, c);
    total -= tr / (2.0 * etas[l]);
  }
  return total;
}

inline double compute_Jstab(double j_t, double c_stab) {
  return j_t + 0.5 * c_stab * j_t * j_t;
}

// Mean over the batch of squared Euclidean reconstruction error.
inline double reconstruction_loss(const Matrix& originals,
                                  const Matrix& reconstructions) {
  if (originals.rows != reconstructions.rows ||
      originals.cols != reconstructions.cols)
    throw ShapeError("reconstruction shape mismatch");
  if (originals.cols == 0) throw ShapeError("empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < originals.data.size(); ++i) {
    const double d = reconstructions.data[i] - originals.data[i];
    total += d * d;
  }
  return total / static_cast<double>(originals.cols);
}

struct JcEvaluation {
  EnergyBreakdown energy;
  Matrix h;
  Vec lambda;
  std::vector<Vec> feature_means;
  std::vector<ViewGrads> grads;
};

namespace detail {

inline void center_columns(Matrix& phi, Vec& mean) {
  mean.assign(phi.rows, 0.0);
  const double n = static_cast<double>(phi.cols);
  for (std::size_t a = 0; a < phi.rows; ++a) {
    double m = 0.0;
    for (std::size_t j = 0; j < phi.cols; ++j) m += phi(a, j);
    mean[a] = m / n;
    for (std::size_t j = 0; j < phi.cols; ++j) phi(a, j) -= mean[a];
  }
}

// Adjoint of center_columns: subtract each row's mean from its entries.
inline void center_adjoint(Matrix& g) {
  const double n = static_cast<double>(g.cols);
  for (std::size_t a = 0; a < g.rows; ++a) {
    double m = 0.0;
    for (std::size_t j = 0; j < g.cols; ++j) m += g(a, j);
    m /= n;
    for (std::size_t j = 0; j < g.cols; ++j) g(a, j) -= m;
  }
}

}  // namespace detail

// Combined objective at a fixed eigen-solution (h, lambda): feature maps are
// re-evaluated at the current parameters while the latent codes stay frozen,
// which is exactly the quantity the alternating optimizer differentiates.
inline JcEvaluation evaluate_Jc_frozen(const std::vector<Matrix>& batch,
                                       const std::vector<ViewMaps>& maps,
                                       const Matrix& h, const Vec& lambda,
                                       const ObjectiveConfig& cfg,
                                       bool want_grads) {
  cfg.validate();
  const std::size_t v = batch.size();
  if (v == 0) throw ShapeError("no views");
  if (maps.size() != v || cfg.etas.size() != v)
    throw ShapeError("per-view argument counts differ");
  const std::size_t n = batch[0].cols;
  if (n == 0) throw ShapeError("empty batch");
  if (h.cols != n) throw ShapeError("latent code batch size mismatch");
  for (std::size_t l = 0; l < v; ++l) {
    if (batch[l].cols != n) throw ShapeError("view batch sizes differ");
    if (maps[l].fmap.in_dim() != batch[l].rows)
      throw ShapeError("feature map input dimension mismatch");
    if (maps[l].pmap.in_dim() != maps[l].fmap.out_dim())
      throw ShapeError("pre-image map input dimension mismatch");
    if (maps[l].pmap.out_dim() != batch[l].rows)
      throw ShapeError("pre-image map output dimension mismatch");
  }

  JcEvaluation out;
  out.h = h;
  out.lambda = lambda;
  out.feature_means.resize(v);

  std::vector<ForwardCache> fcaches(v);
  std::vector<Matrix> centered(v);
  std::vector<Matrix> grams(v);
  for (std::size_t l = 0; l < v; ++l) {
    centered[l] = forward_batch(maps[l].fmap, batch[l], &fcaches[l]);
    detail::center_columns(centered[l], out.feature_means[l]);
    grams[l] = matmul(transpose(centered[l]), centered[l]);
  }

  const double j_t = compute_Jt_dual(h, lambda, grams, cfg.etas);
  out.energy.j_t = j_t;
  out.energy.j_stab = compute_Jstab(j_t, cfg.c_stab);

  const Matrix code_proj = matmul(transpose(h), h);  // n x n
  if (want_grads) out.grads.resize(v);
  double recon_sum = 0.0;
  out.energy.recon_losses.resize(v);
  for (std::size_t l = 0; l < v; ++l) {
    const double eta = cfg.etas[l];
    const Matrix synth = scale(matmul(centered[l], code_proj), 1.0 / eta);
    ForwardCache pcache;
    const Matrix xhat =
        forward_batch(maps[l].pmap, synth, want_grads ? &pcache : nullptr);
    const double recon = reconstruction_loss(batch[l], xhat);
    out.energy.recon_losses[l] = recon;
    recon_sum += recon;
    if (!want_grads) continue;

    const double nn = static_cast<double>(n);
    Matrix dxhat = sub(xhat, batch[l]);
    dxhat = scale(dxhat, cfg.gamma / (nn * nn));
    ViewGrads& g = out.grads[l];
    g.pmap = backward_batch(maps[l].pmap, pcache, dxhat);
    // reconstruction path into the centered features
    Matrix dcentered = scale(matmul(g.pmap.dx, code_proj), 1.0 / eta);
    // J_stab path: d j_t / d centered = -(1/eta) centered H'H
    const double stab_scale = 1.0 + cfg.c_stab * j_t;
    const Matrix jt_term =
        scale(matmul(centered[l], code_proj), -stab_scale / eta);
    dcentered = add(dcentered, jt_term);
    detail::center_adjoint(dcentered);
    g.fmap = backward_batch(maps[l].fmap, fcaches[l], dcentered);
  }
  out.energy.j_c =
      out.energy.j_stab + cfg.gamma / (2.0 * static_cast<double>(n)) * recon_sum;
  return out;
}

// One alternating step's evaluation: forward the feature maps, center, solve
// the batch eigenproblem, then score and differentiate at that frozen
// solution.
inline JcEvaluation compute_Jc_and_grads(const std::vector<Matrix>& batch,
                                         const std::vector<ViewMaps>& maps,
                                         const ObjectiveConfig& cfg,
                                         std::size_t s,
                                         bool use_primal = false,
                                         bool want_grads = true) {
  cfg.validate();
  const std::size_t v = batch.size();
  if (v == 0) throw ShapeError("no views");
  if (maps.size() != v || cfg.etas.size() != v)
    throw ShapeError("per-view argument counts differ");

  std::vector<Matrix> centered(v);
  for (std::size_t l = 0; l < v; ++l) {
    centered[l] = forward_batch(maps[l].fmap, batch[l]);
    Vec mean;
    detail::center_columns(centered[l], mean);
  }

  Matrix h;
  Vec lambda;
  if (use_primal) {
    const PrimalResult p = solve_primal(centered, cfg.etas, s);
    h = p.h;
    lambda = p.lambda;
  } else {
    std::vector<KernelMatrix> kerns(v);
    for (std::size_t l = 0; l < v; ++l) {
      kerns[l].gram = matmul(transpose(centered[l]), centered[l]);
      kerns[l].centered = true;
    }
    const DualResult d = solve_dual(kerns, cfg.etas, s);
    h = d.h;
    lambda = d.lambda;
  }
  return evaluate_Jc_frozen(batch, maps, h, lambda, cfg, want_grads);
}

}  // namespace genrkm

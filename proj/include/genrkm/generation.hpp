#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "genrkm/error.hpp"
#include "genrkm/feature_map.hpp"
#include "genrkm/kernels.hpp"
#include "genrkm/matrix.hpp"
#include "genrkm/rng.hpp"
#include "genrkm/subspace.hpp"

namespace genrkm {

struct GmmModel {
  Vec weights;
  Matrix means;      // l x s
  Matrix variances;  // l x s, diagonal covariances with floor applied
  std::size_t components() const { return weights.size(); }
};

inline constexpr double kGmmVarianceFloor = 1e-6;

struct GenerationConfig {
  std::size_t n_r = 1;
  std::uint64_t seed = 0;

  void validate(std::size_t n) const {
    if (n_r == 0 || n_r > n)
      throw ConfigError("neighbor count must be in [1, N]");
  }
};

namespace detail {

inline void require_code_dim(const LatentModel& model, const Vec& h_star) {
  if (h_star.size() != model.s())
    throw ShapeError("latent vector length != model latent dimension");
}

}  // namespace detail

// Generated feature vector per view: interconnection times the latent code.
inline std::vector<Vec> synthesize_features(const LatentModel& model,
                                            const Vec& h_star) {
  detail::require_code_dim(model, h_star);
  std::vector<Vec> out;
  out.reserve(model.views.size());
  for (const ModelView& v : model.views) {
    if (v.implicit())
      throw UsageError("view '" + v.name +
                       "' has no explicit feature map to synthesize into");
    out.push_back(matvec(v.exp().interconnection, h_star));
  }
  return out;
}

// Precomputed kernel-space operators for generating from an implicit model.
// sim_ops give centered similarities; corrections restore the per-point raw
// kernel offsets so that smoothing weights rank by the raw kernel column.
struct ImplicitGenerator {
  const LatentModel* model = nullptr;
  std::vector<Matrix> sim_ops;   // per view: (1/eta) K_c H', N x s
  std::vector<Vec> corrections;  // per view: row_means / eta
};

inline ImplicitGenerator make_implicit_generator(const LatentModel& model) {
  ImplicitGenerator g;
  g.model = &model;
  const Matrix ht = transpose(model.h);
  for (const ModelView& v : model.views) {
    if (!v.implicit())
      throw UsageError("view '" + v.name + "' is explicit; similarities need "
                       "a kernel view");
    const ImplicitViewState& st = v.imp();
    KernelMatrix raw = kernel_matrix(st.spec, st.train);
    const KernelMatrix centered = center_kernel(raw);
    g.sim_ops.push_back(scale(matmul(centered.gram, ht), 1.0 / v.eta));
    Vec corr = st.row_means;
    for (double& c : corr) c /= v.eta;
    g.corrections.push_back(std::move(corr));
  }
  return g;
}

// Centered kernel similarities between a latent point and every training
// sample, one vector per view.
inline std::vector<Vec> latent_similarities(const LatentModel& model,
                                            const Vec& h_star) {
  detail::require_code_dim(model, h_star);
  const ImplicitGenerator g = make_implicit_generator(model);
  std::vector<Vec> out;
  out.reserve(g.sim_ops.size());
  for (const Matrix& op : g.sim_ops) out.push_back(matvec(op, h_star));
  return out;
}

struct PreimageResult {
  Vec x;
  bool degenerate = false;  // all similarities equal; uniform weights used
};

// Weighted average of the n_r training points with the largest min-max
// scaled similarities.
inline PreimageResult kernel_smoother_preimage(const Vec& similarities,
                                               const Matrix& train_points,
                                               std::size_t n_r) {
  const std::size_t n = train_points.rows;
  if (similarities.size() != n)
    throw ShapeError("similarity count != training point count");
  if (n_r == 0 || n_r > n) throw ConfigError("neighbor count must be in [1, N]");
  double lo = similarities[0], hi = similarities[0];
  for (double s : similarities) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return similarities[a] > similarities[b];
                   });
  PreimageResult out;
  out.x.assign(train_points.cols, 0.0);
  if (hi == lo) {
    out.degenerate = true;
    for (std::size_t r = 0; r < n_r; ++r)
      for (std::size_t c = 0; c < train_points.cols; ++c)
        out.x[c] += train_points(order[r], c) / static_cast<double>(n_r);
    return out;
  }
  double total = 0.0;
  for (std::size_t r = 0; r < n_r; ++r) {
    const double w = (similarities[order[r]] - lo) / (hi - lo);
    total += w;
    for (std::size_t c = 0; c < train_points.cols; ++c)
      out.x[c] += w * train_points(order[r], c);
  }
  for (double& c : out.x) c /= total;
  return out;
}

// Full implicit generation step: corrected similarities, then one smoothed
// pre-image per view from the shared latent point.
inline std::vector<PreimageResult> smoother_reconstruct(
    const ImplicitGenerator& g, const Vec& h_star, std::size_t n_r) {
  detail::require_code_dim(*g.model, h_star);
  std::vector<PreimageResult> out;
  out.reserve(g.sim_ops.size());
  for (std::size_t l = 0; l < g.sim_ops.size(); ++l) {
    Vec sims = matvec(g.sim_ops[l], h_star);
    for (std::size_t i = 0; i < sims.size(); ++i) sims[i] += g.corrections[l][i];
    out.push_back(kernel_smoother_preimage(
        sims, g.model->views[l].imp().train, n_r));
  }
  return out;
}

// Pre-image network forward pass per view.
inline std::vector<Vec> explicit_preimage(const LatentModel& model,
                                          const std::vector<Vec>& features) {
  if (features.size() != model.views.size())
    throw ShapeError("feature vector count != view count");
  std::vector<Vec> out;
  out.reserve(features.size());
  for (std::size_t l = 0; l < features.size(); ++l) {
    const ModelView& v = model.views[l];
    if (v.implicit())
      throw UsageError("view '" + v.name + "' has no pre-image map");
    out.push_back(forward(v.exp().pmap, features[l]));
  }
  return out;
}

// Synthesis followed by the pre-image networks.
inline std::vector<Vec> decode(const LatentModel& model, const Vec& h_star) {
  return explicit_preimage(model, synthesize_features(model, h_star));
}

namespace detail {

// Row i holds log(w_k) + log N(code_i; mu_k, diag v_k).
inline Matrix gmm_log_densities(const GmmModel& g, const Matrix& codes) {
  const std::size_t n = codes.cols;
  const std::size_t s = codes.rows;
  const std::size_t l = g.components();
  constexpr double two_pi = 6.283185307179586;
  Matrix lp(n, l);
  for (std::size_t k = 0; k < l; ++k) {
    const double logw = std::log(g.weights[k]);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = logw;
      for (std::size_t d = 0; d < s; ++d) {
        const double v = g.variances(k, d);
        const double diff = codes(d, i) - g.means(k, d);
        acc -= 0.5 * (diff * diff / v + std::log(two_pi * v));
      }
      lp(i, k) = acc;
    }
  }
  return lp;
}

// Responsibilities (rows sum to one) and the data log-likelihood.
inline Matrix gmm_responsibilities(const GmmModel& g, const Matrix& codes,
                                   double* loglik = nullptr) {
  Matrix r = gmm_log_densities(g, codes);
  double total = 0.0;
  for (std::size_t i = 0; i < r.rows; ++i) {
    double mx = r(i, 0);
    for (std::size_t k = 1; k < r.cols; ++k) mx = std::max(mx, r(i, k));
    double sum = 0.0;
    for (std::size_t k = 0; k < r.cols; ++k) sum += std::exp(r(i, k) - mx);
    const double lse = mx + std::log(sum);
    total += lse;
    for (std::size_t k = 0; k < r.cols; ++k) r(i, k) = std::exp(r(i, k) - lse);
  }
  if (loglik) *loglik = total;
  return r;
}

}  // namespace detail

// Diagonal-covariance EM fit to the latent codes (columns of the code
// matrix), seeded with distance-weighted center picks.
inline GmmModel fit_gmm(const Matrix& codes, std::size_t l, std::uint64_t seed,
                        Vec* loglik_trace = nullptr) {
  const std::size_t n = codes.cols;
  const std::size_t s = codes.rows;
  if (l == 0 || l > n) throw ConfigError("component count must be in [1, N]");
  Rng rng(seed);
  GmmModel g;
  g.weights.assign(l, 1.0 / static_cast<double>(l));
  g.means = Matrix(l, s);
  g.variances = Matrix(l, s);

  std::vector<std::size_t> centers = {rng.below(n)};
  while (centers.size() < l) {
    Vec d2(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = 0.0;
      for (std::size_t c = 0; c < centers.size(); ++c) {
        double dist = 0.0;
        for (std::size_t d = 0; d < s; ++d) {
          const double diff = codes(d, i) - codes(d, centers[c]);
          dist += diff * diff;
        }
        best = c == 0 ? dist : std::min(best, dist);
      }
      d2[i] = best;
      total += best;
    }
    if (total == 0.0) {
      centers.push_back(rng.below(n));
      continue;
    }
    const double u = rng.uniform01() * total;
    double cum = 0.0;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      cum += d2[i];
      if (u < cum) {
        pick = i;
        break;
      }
    }
    centers.push_back(pick);
  }
  for (std::size_t k = 0; k < l; ++k)
    for (std::size_t d = 0; d < s; ++d) g.means(k, d) = codes(d, centers[k]);
  // shared global variance as the starting spread
  for (std::size_t d = 0; d < s; ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += codes(d, i);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = codes(d, i) - mean;
      var += diff * diff;
    }
    var = std::max(var / static_cast<double>(n), kGmmVarianceFloor);
    for (std::size_t k = 0; k < l; ++k) g.variances(k, d) = var;
  }

  double prev = 0.0;
  for (int iter = 0; iter < 500; ++iter) {
    double loglik = 0.0;
    const Matrix r = detail::gmm_responsibilities(g, codes, &loglik);
    if (loglik_trace) loglik_trace->push_back(loglik);
    if (iter > 0 && loglik - prev < 1e-8) break;
    prev = loglik;
    for (std::size_t k = 0; k < l; ++k) {
      double nk = 0.0;
      for (std::size_t i = 0; i < n; ++i) nk += r(i, k);
      g.weights[k] = nk / static_cast<double>(n);
      if (nk < 1e-12) continue;  // starved component keeps its parameters
      for (std::size_t d = 0; d < s; ++d) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += r(i, k) * codes(d, i);
        mu /= nk;
        g.means(k, d) = mu;
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double diff = codes(d, i) - mu;
          var += r(i, k) * diff * diff;
        }
        g.variances(k, d) = std::max(var / nk, kGmmVarianceFloor);
      }
    }
  }
  return g;
}

// Columns are independent draws: component by weight, then a diagonal
// Gaussian sample.
inline Matrix sample_gmm(const GmmModel& g, std::uint64_t seed,
                         std::size_t count) {
  const std::size_t l = g.components();
  const std::size_t s = g.means.cols;
  Rng rng(seed);
  Matrix out(s, count);
  for (std::size_t j = 0; j < count; ++j) {
    const double u = rng.uniform01();
    std::size_t k = l - 1;
    double cum = 0.0;
    for (std::size_t c = 0; c < l; ++c) {
      cum += g.weights[c];
      if (u < cum) {
        k = c;
        break;
      }
    }
    for (std::size_t d = 0; d < s; ++d)
      out(d, j) = g.means(k, d) + std::sqrt(g.variances(k, d)) * rng.normal();
  }
  return out;
}

inline Vec bilinear_interpolate(const Vec& h1, const Vec& h2, const Vec& h3,
                                const Vec& h4, double alpha,
                                double gamma_coef) {
  if (h2.size() != h1.size() || h3.size() != h1.size() ||
      h4.size() != h1.size())
    throw ShapeError("interpolation corners disagree on dimension");
  if (!(alpha >= 0.0 && alpha <= 1.0 && gamma_coef >= 0.0 && gamma_coef <= 1.0))
    throw UsageError("interpolation coefficients must lie in [0, 1]");
  Vec out(h1.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (1.0 - alpha) * (1.0 - gamma_coef) * h1[i] +
             alpha * (1.0 - gamma_coef) * h2[i] +
             gamma_coef * (1.0 - alpha) * h3[i] + gamma_coef * alpha * h4[i];
  return out;
}

inline std::vector<Vec> traverse_component(const LatentModel& model,
                                           const Vec& base,
                                           std::size_t component,
                                           const Vec& offsets) {
  detail::require_code_dim(model, base);
  if (component >= model.s())
    throw UsageError("component index out of range");
  std::vector<Vec> out;
  out.reserve(offsets.size());
  for (double off : offsets) {
    Vec h = base;
    h[component] = base[component] + off;
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace genrkm

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "genrkm/error.hpp"
#include "genrkm/kernels.hpp"
#include "genrkm/matrix.hpp"
#include "genrkm/objective.hpp"
#include "genrkm/rng.hpp"
#include "genrkm/subspace.hpp"
#include "genrkm/text.hpp"

namespace genrkm {

struct TrainConfig {
  std::size_t s = 2;
  std::size_t m = 1;  // number of mini-batches per epoch
  std::size_t epochs = 1;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  ObjectiveConfig objective;
  bool use_primal = false;
  // The final model is rebuilt on one deterministic pass over at most this
  // many samples with frozen parameters.
  std::size_t final_pass_cap = 2000;

  void validate() const {
    if (s == 0) throw ConfigError("latent dimension must be positive");
    if (epochs == 0) throw ConfigError("epochs must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (m == 0) throw ConfigError("mini-batch count must be positive");
    if (final_pass_cap == 0) throw ConfigError("final pass cap must be positive");
    objective.validate();
  }
};

struct TrainReport {
  std::vector<EnergyBreakdown> trace;
  std::vector<double> epoch_seconds;
};

struct TrainResult {
  LatentModel model;
  TrainReport report;
};

// Deterministic shuffled partition of 0..n-1 into m near-equal parts.
inline std::vector<std::vector<std::size_t>> minibatch_split(std::size_t n,
                                                             std::size_t m,
                                                             std::uint64_t seed) {
  if (m == 0) throw ConfigError("mini-batch count must be positive");
  if (m > n) throw ConfigError("more mini-batches than samples");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(idx[i - 1], idx[j]);
  }
  std::vector<std::vector<std::size_t>> parts(m);
  const std::size_t base = n / m;
  const std::size_t extra = n % m;
  std::size_t at = 0;
  for (std::size_t b = 0; b < m; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    parts[b].assign(idx.begin() + at, idx.begin() + at + len);
    at += len;
  }
  return parts;
}

namespace detail {

inline void check_views(const std::vector<Matrix>& views) {
  if (views.empty()) throw ShapeError("no views");
  const std::size_t n = views[0].rows;
  if (n == 0) throw ShapeError("empty dataset");
  for (const Matrix& v : views) {
    if (v.rows != n) throw ShapeError("views disagree on sample count");
    if (v.cols == 0) throw ShapeError("zero-dimensional view");
  }
}

inline std::string view_name(const std::vector<std::string>& names,
                             std::size_t l) {
  if (l < names.size() && !names[l].empty()) return names[l];
  return "view" + std::to_string(l);
}

// Gather the indexed samples of one view as a columns-are-samples matrix.
inline Matrix gather_columns(const Matrix& view,
                             const std::vector<std::size_t>& indices) {
  Matrix out(view.cols, indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j)
    for (std::size_t a = 0; a < view.cols; ++a)
      out(a, j) = view(indices[j], a);
  return out;
}

}  // namespace detail

// Implicit branch: one kernel eigendecomposition over the full dataset.
inline LatentModel train_implicit(const std::vector<Matrix>& views,
                                  const std::vector<KernelSpec>& specs,
                                  const std::vector<double>& etas,
                                  std::size_t s,
                                  const std::vector<std::string>& names = {}) {
  detail::check_views(views);
  const std::size_t v = views.size();
  if (specs.size() != v || etas.size() != v)
    throw ShapeError("per-view argument counts differ");
  std::vector<KernelMatrix> raw(v);
  std::vector<KernelMatrix> centered(v);
  for (std::size_t l = 0; l < v; ++l) {
    raw[l] = kernel_matrix(specs[l], views[l]);
    centered[l] = center_kernel(raw[l]);
  }
  const DualResult d = solve_dual(centered, etas, s);
  require_usable_spectrum(d.lambda);
  LatentModel model;
  model.h = d.h;
  model.lambda = d.lambda;
  for (std::size_t l = 0; l < v; ++l) {
    ModelView mv;
    mv.name = detail::view_name(names, l);
    mv.eta = etas[l];
    mv.state = ImplicitViewState{specs[l], views[l], kernel_row_means(raw[l]),
                                 kernel_grand_mean(raw[l])};
    model.views.push_back(std::move(mv));
  }
  return model;
}

// Explicit branch: mini-batch alternation between the batch eigenproblem and
// an Adam step on the combined objective.
inline TrainResult train_explicit(const std::vector<Matrix>& views,
                                  std::vector<ViewMaps> maps,
                                  const TrainConfig& cfg,
                                  std::ostream* progress = nullptr,
                                  const std::vector<std::string>& names = {}) {
  cfg.validate();
  detail::check_views(views);
  const std::size_t v = views.size();
  const std::size_t n = views[0].rows;
  if (maps.size() != v) throw ShapeError("map count != view count");
  if (cfg.objective.etas.size() != v)
    throw ShapeError("eta count != view count");
  for (std::size_t l = 0; l < v; ++l) {
    maps[l].fmap.validate();
    maps[l].pmap.validate();
    if (maps[l].fmap.in_dim() != views[l].cols)
      throw ConfigError("feature map input dimension mismatch");
    if (maps[l].pmap.out_dim() != views[l].cols)
      throw ConfigError("pre-image map output dimension mismatch");
    if (maps[l].pmap.in_dim() != maps[l].fmap.out_dim())
      throw ConfigError("pre-image map input dimension mismatch");
  }
  if (cfg.m > n) throw ConfigError("more mini-batches than samples");
  if (cfg.s > n / cfg.m)
    throw ConfigError("latent dimension exceeds mini-batch size");

  std::vector<AdamState> fstate(v), pstate(v);
  for (std::size_t l = 0; l < v; ++l) {
    fstate[l] = AdamState::for_params(maps[l].fmap);
    pstate[l] = AdamState::for_params(maps[l].pmap);
  }

  TrainReport report;
  report.trace.reserve(cfg.epochs * cfg.m);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto parts = minibatch_split(n, cfg.m, cfg.seed + e);
    for (std::size_t b = 0; b < parts.size(); ++b) {
      std::vector<Matrix> batch(v);
      for (std::size_t l = 0; l < v; ++l)
        batch[l] = detail::gather_columns(views[l], parts[b]);
      const JcEvaluation ev = compute_Jc_and_grads(
          batch, maps, cfg.objective, cfg.s, cfg.use_primal, true);
      if (!std::isfinite(ev.energy.j_c))
        throw NumericError("training diverged at epoch " +
                           std::to_string(e + 1) + " batch " +
                           std::to_string(b + 1));
      if (progress) {
        std::string line = "epoch=" + std::to_string(e + 1) +
                           " batch=" + std::to_string(b + 1) +
                           " Jt=" + to_g17(ev.energy.j_t) +
                           " Jc=" + to_g17(ev.energy.j_c) + " recon=";
        for (std::size_t l = 0; l < v; ++l) {
          if (l) line += ',';
          line += to_g17(ev.energy.recon_losses[l]);
        }
        (*progress) << line << '\n';
      }
      report.trace.push_back(ev.energy);
      for (std::size_t l = 0; l < v; ++l) {
        adam_step(fstate[l], maps[l].fmap, ev.grads[l].fmap, cfg.learning_rate);
        adam_step(pstate[l], maps[l].pmap, ev.grads[l].pmap, cfg.learning_rate);
      }
    }
    const auto t1 = std::chrono::steady_clock::now();
    report.epoch_seconds.push_back(
        std::chrono::duration<double>(t1 - t0).count());
  }

  // Deterministic full pass (capped) with frozen parameters: one consistent
  // eigen-solution for generation.
  const std::size_t nf = std::min(n, cfg.final_pass_cap);
  std::vector<std::size_t> order(nf);
  for (std::size_t i = 0; i < nf; ++i) order[i] = i;
  std::vector<Matrix> final_batch(v);
  for (std::size_t l = 0; l < v; ++l)
    final_batch[l] = detail::gather_columns(views[l], order);
  const JcEvaluation fin = compute_Jc_and_grads(
      final_batch, maps, cfg.objective, cfg.s, cfg.use_primal, false);
  require_usable_spectrum(fin.lambda);

  TrainResult out;
  out.model.h = fin.h;
  out.model.lambda = fin.lambda;
  for (std::size_t l = 0; l < v; ++l) {
    Matrix phi = forward_batch(maps[l].fmap, final_batch[l]);
    for (std::size_t a = 0; a < phi.rows; ++a)
      for (std::size_t j = 0; j < phi.cols; ++j)
        phi(a, j) -= fin.feature_means[l][a];
    ModelView mv;
    mv.name = detail::view_name(names, l);
    mv.eta = cfg.objective.etas[l];
    ExplicitViewState st;
    st.fmap = std::move(maps[l].fmap);
    st.pmap = std::move(maps[l].pmap);
    st.interconnection =
        compute_interconnections(phi, fin.h, cfg.objective.etas[l]);
    st.feature_mean = fin.feature_means[l];
    mv.state = std::move(st);
    out.model.views.push_back(std::move(mv));
  }
  out.report = std::move(report);
  return out;
}

}  // namespace genrkm

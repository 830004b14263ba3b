#pragma once

// Explicit parametric feature maps and pre-image maps: fully-connected
// networks with exact reverse-mode gradients and an Adam optimizer.
// Columns are samples throughout the batch interfaces.

#include <cmath>
#include <cstddef>
#include <vector>

#include "genrkm/error.hpp"
#include "genrkm/matrix.hpp"
#include "genrkm/rng.hpp"

namespace genrkm {

enum class Activation { prelu, sigmoid, linear };

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation act = Activation::linear;
  double alpha = 0.2;  // prelu slope for negative inputs
};

struct FeatureMapParams {
  std::vector<LayerSpec> layers;
  std::vector<Matrix> weights;  // per layer, out_dim x in_dim
  std::vector<Vec> biases;      // per layer, out_dim

  std::size_t in_dim() const { return layers.front().in_dim; }
  std::size_t out_dim() const { return layers.back().out_dim; }

  void validate() const {
    if (layers.empty()) throw ConfigError("feature map: no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].in_dim < 1 || layers[l].out_dim < 1)
        throw ConfigError("feature map: layer dims must be >= 1");
      if (l > 0 && layers[l].in_dim != layers[l - 1].out_dim)
        throw ConfigError("feature map: layer dims do not chain");
    }
  }
};

// Glorot-style uniform init: W ~ U(-a, a) with a = sqrt(6/(in+out)), zero biases.
inline FeatureMapParams init_params(const std::vector<LayerSpec>& layers,
                                    std::uint64_t seed) {
  FeatureMapParams p;
  p.layers = layers;
  p.validate();
  Rng rng(seed);
  for (const auto& l : layers) {
    const double a = std::sqrt(6.0 / static_cast<double>(l.in_dim + l.out_dim));
    Matrix w(l.out_dim, l.in_dim);
    for (double& v : w.data) v = rng.uniform(-a, a);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(l.out_dim, 0.0);
  }
  return p;
}

// Layer dims reversed end to end; the final activation is the caller's
// choice (sigmoid for image-range outputs, linear for unbounded data).
inline std::vector<LayerSpec> reversed_layers(const std::vector<LayerSpec>& layers,
                                              Activation out_act, double alpha = 0.2) {
  std::vector<LayerSpec> rev;
  for (std::size_t l = layers.size(); l > 0; --l) {
    LayerSpec s;
    s.in_dim = layers[l - 1].out_dim;
    s.out_dim = layers[l - 1].in_dim;
    s.act = Activation::prelu;
    s.alpha = alpha;
    rev.push_back(s);
  }
  rev.back().act = out_act;
  return rev;
}

namespace detail {

inline double act_eval(Activation a, double alpha, double z) {
  switch (a) {
    case Activation::prelu: return z > 0.0 ? z : alpha * z;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::linear: return z;
  }
  return z;
}

// Derivative in terms of pre-activation z and activation value y.
inline double act_grad(Activation a, double alpha, double z, double y) {
  switch (a) {
    case Activation::prelu: return z > 0.0 ? 1.0 : alpha;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::linear: return 1.0;
  }
  return 1.0;
}

}  // namespace detail

struct ForwardCache {
  Matrix input;             // in_dim x N
  std::vector<Matrix> pre;  // per layer, out_dim x N
  std::vector<Matrix> act;  // per layer, out_dim x N
};

// x: in_dim x N, one sample per column.
inline Matrix forward_batch(const FeatureMapParams& p, const Matrix& x,
                            ForwardCache* cache = nullptr) {
  p.validate();
  if (x.rows != p.in_dim()) throw ShapeError("forward: input dim mismatch");
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->act.clear();
  }
  Matrix cur = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    Matrix z = matmul(p.weights[l], cur);
    for (std::size_t i = 0; i < z.rows; ++i)
      for (std::size_t j = 0; j < z.cols; ++j) z(i, j) += p.biases[l][i];
    Matrix y(z.rows, z.cols);
    const auto& spec = p.layers[l];
    for (std::size_t i = 0; i < z.data.size(); ++i) {
      y.data[i] = detail::act_eval(spec.act, spec.alpha, z.data[i]);
      if (!std::isfinite(y.data[i]))
        throw NumericError("forward: non-finite intermediate");
    }
    if (cache) {
      cache->pre.push_back(z);
      cache->act.push_back(y);
    }
    cur = std::move(y);
  }
  return cur;
}

inline Vec forward(const FeatureMapParams& p, const Vec& x) {
  Matrix xm(x.size(), 1);
  xm.data = x;
  const Matrix out = forward_batch(p, xm);
  return out.data;
}

struct MapGrads {
  std::vector<Matrix> dw;
  std::vector<Vec> db;
  Matrix dx;  // gradient w.r.t. the input batch

  void add(const MapGrads& o) {
    for (std::size_t l = 0; l < dw.size(); ++l) {
      for (std::size_t i = 0; i < dw[l].data.size(); ++i)
        dw[l].data[i] += o.dw[l].data[i];
      for (std::size_t i = 0; i < db[l].size(); ++i) db[l][i] += o.db[l][i];
    }
  }
};

inline MapGrads zero_grads(const FeatureMapParams& p) {
  MapGrads g;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    g.dw.emplace_back(p.layers[l].out_dim, p.layers[l].in_dim);
    g.db.emplace_back(p.layers[l].out_dim, 0.0);
  }
  return g;
}

// upstream: dL/d(output), out_dim x N, for the batch recorded in cache.
inline MapGrads backward_batch(const FeatureMapParams& p, const ForwardCache& cache,
                               const Matrix& upstream) {
  if (upstream.rows != p.out_dim() || upstream.cols != cache.input.cols)
    throw ShapeError("backward: upstream shape mismatch");
  MapGrads g = zero_grads(p);
  Matrix delta = upstream;
  for (std::size_t li = p.layers.size(); li > 0; --li) {
    const std::size_t l = li - 1;
    const auto& spec = p.layers[l];
    const Matrix& z = cache.pre[l];
    const Matrix& y = cache.act[l];
    for (std::size_t i = 0; i < delta.data.size(); ++i)
      delta.data[i] *= detail::act_grad(spec.act, spec.alpha, z.data[i], y.data[i]);
    const Matrix& below = (l == 0) ? cache.input : cache.act[l - 1];
    g.dw[l] = matmul(delta, transpose(below));
    for (std::size_t i = 0; i < delta.rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < delta.cols; ++j) s += delta(i, j);
      g.db[l][i] = s;
    }
    if (l > 0) delta = matmul(transpose(p.weights[l]), delta);
    else g.dx = matmul(transpose(p.weights[l]), delta);
  }
  return g;
}

// Single-sample wrapper: returns parameter gradients and the input gradient.
inline MapGrads backward(const FeatureMapParams& p, const Vec& x, const Vec& upstream) {
  ForwardCache cache;
  Matrix xm(x.size(), 1);
  xm.data = x;
  forward_batch(p, xm, &cache);
  Matrix um(upstream.size(), 1);
  um.data = upstream;
  return backward_batch(p, cache, um);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<Matrix> mw, vw;
  std::vector<Vec> mb, vb;

  static AdamState for_params(const FeatureMapParams& p) {
    AdamState s;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      s.mw.emplace_back(p.layers[l].out_dim, p.layers[l].in_dim);
      s.vw.emplace_back(p.layers[l].out_dim, p.layers[l].in_dim);
      s.mb.emplace_back(p.layers[l].out_dim, 0.0);
      s.vb.emplace_back(p.layers[l].out_dim, 0.0);
    }
    return s;
  }
};

namespace detail {

inline void adam_update(double& p, double& m, double& v, double g, long t,
                        const AdamState& s, double lr) {
  m = s.beta1 * m + (1.0 - s.beta1) * g;
  v = s.beta2 * v + (1.0 - s.beta2) * g * g;
  const double mh = m / (1.0 - std::pow(s.beta1, static_cast<double>(t)));
  const double vh = v / (1.0 - std::pow(s.beta2, static_cast<double>(t)));
  p -= lr * mh / (std::sqrt(vh) + s.eps);
}

}  // namespace detail

inline void adam_step(AdamState& s, FeatureMapParams& p, const MapGrads& g, double lr) {
  if (s.mw.size() != p.weights.size()) throw ShapeError("adam: state/param mismatch");
  ++s.step;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    for (std::size_t i = 0; i < p.weights[l].data.size(); ++i)
      detail::adam_update(p.weights[l].data[i], s.mw[l].data[i], s.vw[l].data[i],
                          g.dw[l].data[i], s.step, s, lr);
    for (std::size_t i = 0; i < p.biases[l].size(); ++i)
      detail::adam_update(p.biases[l][i], s.mb[l][i], s.vb[l][i], g.db[l][i],
                          s.step, s, lr);
  }
}

}  // namespace genrkm

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "genrkm/error.hpp"
#include "genrkm/generation.hpp"
#include "genrkm/matrix.hpp"
#include "genrkm/rng.hpp"
#include "genrkm/subspace.hpp"
#include "genrkm/text.hpp"
#include "genrkm/training.hpp"

namespace genrkm {

struct DatasetView {
  std::string name;
  Matrix data;  // N x d, rows are samples
};

struct Dataset {
  std::vector<DatasetView> views;

  std::size_t n() const { return views.empty() ? 0 : views[0].data.rows; }

  void validate() const {
    if (views.empty()) throw ShapeError("dataset has no views");
    const std::size_t rows = views[0].data.rows;
    if (rows == 0) throw ShapeError("dataset is empty");
    for (const DatasetView& v : views) {
      if (v.data.rows != rows) throw ShapeError("views disagree on sample count");
      for (double x : v.data.data)
        if (!std::isfinite(x)) throw IoError("non-finite value in view '" + v.name + "'");
    }
  }
};

// Seeded isotropic Gaussian blobs plus a one-hot mode-label view.
inline Dataset generate_toy_gaussians(const std::vector<Vec>& mode_means,
                                      std::size_t per_mode, double stddev,
                                      std::uint64_t seed) {
  if (mode_means.empty()) throw ConfigError("at least one mode required");
  if (per_mode == 0) throw ConfigError("per-mode count must be positive");
  const std::size_t d = mode_means[0].size();
  for (const Vec& m : mode_means)
    if (m.size() != d) throw ShapeError("mode means disagree on dimension");
  const std::size_t modes = mode_means.size();
  Rng rng(seed);
  Dataset ds;
  DatasetView points{"x", Matrix(modes * per_mode, d)};
  DatasetView labels{"labels", Matrix(modes * per_mode, modes)};
  for (std::size_t m = 0; m < modes; ++m)
    for (std::size_t i = 0; i < per_mode; ++i) {
      const std::size_t row = m * per_mode + i;
      for (std::size_t c = 0; c < d; ++c)
        points.data(row, c) = mode_means[m][c] + stddev * rng.normal();
      labels.data(row, m) = 1.0;
    }
  ds.views.push_back(std::move(points));
  ds.views.push_back(std::move(labels));
  return ds;
}

inline Matrix load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<Vec> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && has_header) {
      first = false;
      continue;
    }
    first = false;
    if (trim(line).empty()) continue;
    Vec row;
    for (const std::string& cell : split(line, ',')) {
      double v = 0.0;
      if (!try_parse_double(trim(cell), v))
        throw IoError("non-numeric cell '" + trim(cell) + "' in '" + path + "'");
      if (!std::isfinite(v))
        throw IoError("non-finite value in '" + path + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows[0].size())
      throw IoError("ragged rows in '" + path + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("no data rows in '" + path + "'");
  Matrix out(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[0].size(); ++j) out(i, j) = rows[i][j];
  return out;
}

inline void save_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      if (j) out << ',';
      out << to_g17(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

namespace detail {

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

inline std::uint32_t read_be_u32(const std::string& bytes, std::size_t at) {
  if (at + 4 > bytes.size()) throw IoError("truncated payload");
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + 3]));
}

}  // namespace detail

// IDX image (magic 0x00000803) or label (0x00000801) file. Images arrive
// flattened row-major and scaled into [0, 1]; labels arrive as one column.
inline Matrix load_idx(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  const std::uint32_t magic = detail::read_be_u32(bytes, 0);
  if (magic == 0x00000803u) {
    const std::uint32_t n = detail::read_be_u32(bytes, 4);
    const std::uint32_t r = detail::read_be_u32(bytes, 8);
    const std::uint32_t c = detail::read_be_u32(bytes, 12);
    const std::size_t need = 16 + static_cast<std::size_t>(n) * r * c;
    if (bytes.size() != need) throw IoError("truncated payload in '" + path + "'");
    Matrix out(n, static_cast<std::size_t>(r) * c);
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data[i] =
          static_cast<double>(static_cast<unsigned char>(bytes[16 + i])) / 255.0;
    return out;
  }
  if (magic == 0x00000801u) {
    const std::uint32_t n = detail::read_be_u32(bytes, 4);
    if (bytes.size() != 8 + static_cast<std::size_t>(n))
      throw IoError("truncated payload in '" + path + "'");
    Matrix out(n, 1);
    for (std::size_t i = 0; i < n; ++i)
      out(i, 0) = static_cast<double>(static_cast<unsigned char>(bytes[8 + i]));
    return out;
  }
  throw IoError("bad IDX magic in '" + path + "'");
}

inline Matrix one_hot(const Vec& labels, std::size_t num_classes) {
  if (num_classes == 0) throw ConfigError("need at least one class");
  Matrix out(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double l = labels[i];
    if (!(l >= 0.0) || l != std::floor(l) ||
        l >= static_cast<double>(num_classes))
      throw UsageError("label " + to_g17(l) + " outside [0, " +
                       std::to_string(num_classes) + ")");
    out(i, static_cast<std::size_t>(l)) = 1.0;
  }
  return out;
}

struct ModelFile {
  std::uint32_t version = 1;
  TrainConfig config;
  LatentModel model;
  bool has_gmm = false;
  GmmModel gmm;
};

namespace detail {

inline constexpr std::uint32_t kModelVersion = 1;

inline std::uint32_t crc32(const std::string& bytes) {
  static const auto table = [] {
    std::vector<std::uint32_t> t(256);
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (char ch : bytes)
    crc = table[(crc ^ static_cast<unsigned char>(ch)) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_array(std::string& out, const Vec& v) {
  put_u64(out, v.size());
  for (double x : v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &x, 8);
    put_u64(out, bits);
  }
}

struct ByteReader {
  const std::string& bytes;
  std::size_t at = 0;

  std::uint32_t u32() {
    if (at + 4 > bytes.size()) throw IoError("truncated model file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
    at += 4;
    return v;
  }

  std::uint64_t u64() {
    if (at + 8 > bytes.size()) throw IoError("truncated model file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
    at += 8;
    return v;
  }

  Vec array(std::size_t expect) {
    const std::uint64_t len = u64();
    if (len != expect) throw IoError("array length mismatch in model file");
    Vec out(len);
    for (std::uint64_t i = 0; i < len; ++i) {
      const std::uint64_t bits = u64();
      double x = 0.0;
      std::memcpy(&x, &bits, 8);
      if (!std::isfinite(x)) throw IoError("non-finite value in model file");
      out[i] = x;
    }
    return out;
  }
};

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::prelu: return "prelu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
  }
  throw IoError("unknown activation");
}

inline Activation activation_from_name(const std::string& n) {
  if (n == "prelu") return Activation::prelu;
  if (n == "sigmoid") return Activation::sigmoid;
  if (n == "linear") return Activation::linear;
  throw IoError("unknown activation '" + n + "'");
}

inline void describe_map(std::string& meta, const std::string& prefix,
                         const FeatureMapParams& p) {
  meta += prefix + "=" + std::to_string(p.layers.size()) + "\n";
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const LayerSpec& l = p.layers[k];
    meta += prefix + std::to_string(k) + "=" + std::to_string(l.in_dim) + ":" +
            std::to_string(l.out_dim) + ":" + activation_name(l.act) + ":" +
            to_g17(l.alpha) + "\n";
  }
}

inline std::map<std::string, std::string> parse_meta(const std::string& text) {
  std::map<std::string, std::string> kv;
  for (const std::string& line : split(text, '\n')) {
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed model metadata");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline const std::string& meta_get(const std::map<std::string, std::string>& kv,
                                   const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw IoError("missing model metadata key '" + key + "'");
  return it->second;
}

inline std::size_t meta_size(const std::map<std::string, std::string>& kv,
                             const std::string& key) {
  unsigned long long v = 0;
  if (!try_parse_u64(meta_get(kv, key), v))
    throw IoError("bad integer for metadata key '" + key + "'");
  return static_cast<std::size_t>(v);
}

inline double meta_double(const std::map<std::string, std::string>& kv,
                          const std::string& key) {
  double v = 0.0;
  if (!try_parse_double(meta_get(kv, key), v))
    throw IoError("bad number for metadata key '" + key + "'");
  return v;
}

inline FeatureMapParams read_map(const std::map<std::string, std::string>& kv,
                                 const std::string& prefix, ByteReader& r) {
  FeatureMapParams p;
  const std::size_t layers = meta_size(kv, prefix);
  for (std::size_t k = 0; k < layers; ++k) {
    const auto parts = split(meta_get(kv, prefix + std::to_string(k)), ':');
    if (parts.size() != 4) throw IoError("malformed layer description");
    unsigned long long in = 0, out = 0;
    double alpha = 0.0;
    if (!try_parse_u64(parts[0], in) || !try_parse_u64(parts[1], out) ||
        !try_parse_double(parts[3], alpha))
      throw IoError("malformed layer description");
    p.layers.push_back({static_cast<std::size_t>(in),
                        static_cast<std::size_t>(out),
                        activation_from_name(parts[2]), alpha});
  }
  for (const LayerSpec& l : p.layers) {
    Matrix w(l.out_dim, l.in_dim);
    w.data = r.array(l.out_dim * l.in_dim);
    p.weights.push_back(std::move(w));
    p.biases.push_back(r.array(l.out_dim));
  }
  p.validate();
  return p;
}

}  // namespace detail

inline void save_model(const std::string& path, const ModelFile& mf) {
  const LatentModel& m = mf.model;
  if (m.views.empty()) throw ShapeError("model has no views");
  std::string meta;
  meta += "s=" + std::to_string(m.s()) + "\n";
  meta += "n=" + std::to_string(m.n()) + "\n";
  meta += "views=" + std::to_string(m.views.size()) + "\n";
  for (std::size_t l = 0; l < m.views.size(); ++l) {
    const ModelView& v = m.views[l];
    const std::string p = "view" + std::to_string(l) + ".";
    if (v.name.find('\n') != std::string::npos || v.name.find('=') != std::string::npos)
      throw IoError("view name contains reserved characters");
    meta += p + "name=" + v.name + "\n";
    meta += p + "eta=" + to_g17(v.eta) + "\n";
    if (v.implicit()) {
      const ImplicitViewState& st = v.imp();
      meta += p + "kind=implicit\n";
      meta += p + "kernel=" + std::string(kernel_kind_name(st.spec.kind)) + "\n";
      meta += p + "sigma=" + to_g17(st.spec.sigma) + "\n";
      meta += p + "rows=" + std::to_string(st.train.rows) + "\n";
      meta += p + "cols=" + std::to_string(st.train.cols) + "\n";
    } else {
      const ExplicitViewState& st = v.exp();
      meta += p + "kind=explicit\n";
      detail::describe_map(meta, p + "fmap", st.fmap);
      detail::describe_map(meta, p + "pmap", st.pmap);
      meta += p + "dfeat=" + std::to_string(st.interconnection.rows) + "\n";
    }
  }
  const TrainConfig& c = mf.config;
  meta += "config.s=" + std::to_string(c.s) + "\n";
  meta += "config.m=" + std::to_string(c.m) + "\n";
  meta += "config.epochs=" + std::to_string(c.epochs) + "\n";
  meta += "config.learning_rate=" + to_g17(c.learning_rate) + "\n";
  meta += "config.seed=" + std::to_string(c.seed) + "\n";
  meta += "config.use_primal=" + std::string(c.use_primal ? "1" : "0") + "\n";
  meta += "config.final_pass_cap=" + std::to_string(c.final_pass_cap) + "\n";
  meta += "config.c_stab=" + to_g17(c.objective.c_stab) + "\n";
  meta += "config.gamma=" + to_g17(c.objective.gamma) + "\n";
  std::string etas;
  for (std::size_t l = 0; l < c.objective.etas.size(); ++l) {
    if (l) etas += ',';
    etas += to_g17(c.objective.etas[l]);
  }
  meta += "config.etas=" + etas + "\n";
  meta += "gmm=" + std::string(mf.has_gmm ? "1" : "0") + "\n";
  if (mf.has_gmm)
    meta += "gmm.l=" + std::to_string(mf.gmm.components()) + "\n";

  std::string bytes = "GRKM";
  detail::put_u32(bytes, detail::kModelVersion);
  detail::put_u64(bytes, meta.size());
  bytes += meta;
  detail::put_array(bytes, m.h.data);
  detail::put_array(bytes, m.lambda);
  for (const ModelView& v : m.views) {
    if (v.implicit()) {
      const ImplicitViewState& st = v.imp();
      detail::put_array(bytes, st.train.data);
      detail::put_array(bytes, st.row_means);
      detail::put_array(bytes, {st.grand_mean});
    } else {
      const ExplicitViewState& st = v.exp();
      for (const FeatureMapParams* p : {&st.fmap, &st.pmap})
        for (std::size_t k = 0; k < p->layers.size(); ++k) {
          detail::put_array(bytes, p->weights[k].data);
          detail::put_array(bytes, p->biases[k]);
        }
      detail::put_array(bytes, st.interconnection.data);
      detail::put_array(bytes, st.feature_mean);
    }
  }
  if (mf.has_gmm) {
    detail::put_array(bytes, mf.gmm.weights);
    detail::put_array(bytes, mf.gmm.means.data);
    detail::put_array(bytes, mf.gmm.variances.data);
  }
  detail::put_u32(bytes, detail::crc32(bytes));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline ModelFile load_model(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  if (bytes.size() < 12 || bytes.compare(0, 4, "GRKM") != 0)
    throw IoError("bad magic in '" + path + "'");
  const std::uint32_t stored_crc = [&] {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(bytes[bytes.size() - 4 + i]))
           << (8 * i);
    return v;
  }();
  if (detail::crc32(bytes.substr(0, bytes.size() - 4)) != stored_crc)
    throw IoError("checksum failure in '" + path + "'");
  detail::ByteReader r{bytes, 4};
  const std::uint32_t version = r.u32();
  if (version != detail::kModelVersion)
    throw IoError("unsupported model format version " + std::to_string(version));
  const std::uint64_t meta_len = r.u64();
  if (r.at + meta_len > bytes.size()) throw IoError("truncated model file");
  const auto kv = detail::parse_meta(bytes.substr(r.at, meta_len));
  r.at += meta_len;

  ModelFile mf;
  mf.version = version;
  const std::size_t s = detail::meta_size(kv, "s");
  const std::size_t n = detail::meta_size(kv, "n");
  const std::size_t views = detail::meta_size(kv, "views");
  mf.model.h = Matrix(s, n);
  mf.model.h.data = r.array(s * n);
  mf.model.lambda = r.array(s);
  for (std::size_t l = 0; l < views; ++l) {
    const std::string p = "view" + std::to_string(l) + ".";
    ModelView v;
    v.name = detail::meta_get(kv, p + "name");
    v.eta = detail::meta_double(kv, p + "eta");
    const std::string& kind = detail::meta_get(kv, p + "kind");
    if (kind == "implicit") {
      ImplicitViewState st;
      st.spec.kind = kernel_kind_from_name(detail::meta_get(kv, p + "kernel"));
      st.spec.sigma = detail::meta_double(kv, p + "sigma");
      const std::size_t rows = detail::meta_size(kv, p + "rows");
      const std::size_t cols = detail::meta_size(kv, p + "cols");
      if (rows != n) throw IoError("training reference count mismatch");
      st.train = Matrix(rows, cols);
      st.train.data = r.array(rows * cols);
      st.row_means = r.array(rows);
      st.grand_mean = r.array(1)[0];
      v.state = std::move(st);
    } else if (kind == "explicit") {
      ExplicitViewState st;
      st.fmap = detail::read_map(kv, p + "fmap", r);
      st.pmap = detail::read_map(kv, p + "pmap", r);
      const std::size_t dfeat = detail::meta_size(kv, p + "dfeat");
      st.interconnection = Matrix(dfeat, s);
      st.interconnection.data = r.array(dfeat * s);
      st.feature_mean = r.array(dfeat);
      v.state = std::move(st);
    } else {
      throw IoError("unknown view kind '" + kind + "'");
    }
    mf.model.views.push_back(std::move(v));
  }
  TrainConfig& c = mf.config;
  c.s = detail::meta_size(kv, "config.s");
  c.m = detail::meta_size(kv, "config.m");
  c.epochs = detail::meta_size(kv, "config.epochs");
  c.learning_rate = detail::meta_double(kv, "config.learning_rate");
  c.seed = detail::meta_size(kv, "config.seed");
  c.use_primal = detail::meta_get(kv, "config.use_primal") == "1";
  c.final_pass_cap = detail::meta_size(kv, "config.final_pass_cap");
  c.objective.c_stab = detail::meta_double(kv, "config.c_stab");
  c.objective.gamma = detail::meta_double(kv, "config.gamma");
  c.objective.etas.clear();
  for (const std::string& part : split(detail::meta_get(kv, "config.etas"), ',')) {
    double e = 0.0;
    if (!try_parse_double(part, e)) throw IoError("bad eta list in model file");
    c.objective.etas.push_back(e);
  }
  mf.has_gmm = detail::meta_get(kv, "gmm") == "1";
  if (mf.has_gmm) {
    const std::size_t l = detail::meta_size(kv, "gmm.l");
    mf.gmm.weights = r.array(l);
    mf.gmm.means = Matrix(l, s);
    mf.gmm.means.data = r.array(l * s);
    mf.gmm.variances = Matrix(l, s);
    mf.gmm.variances.data = r.array(l * s);
  }
  if (r.at != bytes.size() - 4) throw IoError("trailing bytes in model file");
  return mf;
}

// Plain-text grayscale image; values are clamped to [0, 1] and scaled to 255.
inline void write_pgm(const std::string& path, const Matrix& img) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "P2\n" << img.cols << ' ' << img.rows << "\n255\n";
  for (std::size_t i = 0; i < img.rows; ++i) {
    for (std::size_t j = 0; j < img.cols; ++j) {
      const double v = std::min(1.0, std::max(0.0, img(i, j)));
      if (j) out << ' ';
      out << static_cast<int>(std::lround(v * 255.0));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

// Plain-text color image; columns hold interleaved r, g, b per pixel.
inline void write_ppm(const std::string& path, const Matrix& img) {
  if (img.cols % 3 != 0) throw ShapeError("color image needs 3 channels per pixel");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "P3\n" << img.cols / 3 << ' ' << img.rows << "\n255\n";
  for (std::size_t i = 0; i < img.rows; ++i) {
    for (std::size_t j = 0; j < img.cols; ++j) {
      const double v = std::min(1.0, std::max(0.0, img(i, j)));
      if (j) out << ' ';
      out << static_cast<int>(std::lround(v * 255.0));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace genrkm

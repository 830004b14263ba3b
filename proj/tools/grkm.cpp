#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "genrkm/data_io.hpp"
#include "genrkm/generation.hpp"
#include "genrkm/subspace.hpp"
#include "genrkm/training.hpp"

namespace {

using namespace genrkm;

const std::vector<Vec> kToyMeans = {{0.0, 0.0}, {3.0, 0.0}, {1.5, 2.6}};

struct Opts {
  // data source
  bool toy3 = false;
  std::size_t toy_per_mode = 100;
  double toy_sd = 0.2;
  std::string csv_path;
  bool csv_header = false;
  std::string idx_path;
  std::string onehot_path;
  std::size_t subset = 0;
  // files
  std::string model_path;
  std::string out_dir = ".";
  // training
  std::string kernel = "gaussian";
  double sigma = 1.0;
  std::size_t s = 2;
  std::string eta;
  std::size_t m = 1;
  std::size_t epochs = 100;
  double lr = 1e-4;
  double gamma = 1.0;
  double c_stab = 1.0;
  bool primal = false;
  std::size_t final_pass_cap = 2000;
  std::vector<std::string> fmap;
  std::vector<std::string> pmap;
  // generation
  std::size_t nr = 1;
  std::size_t l = 0;
  std::size_t count = 16;
  std::string pgm;
  // interpolate / traverse
  std::string anchors = "0,1,2,3";
  std::size_t grid = 2;
  long long component = -1;
  std::size_t steps = 5;
  std::uint64_t seed = 0;
  std::string config_path;
};

// Flat key=value config lines; '#' starts a comment. Unknown keys are
// rejected and values never override options given on the command line.
void apply_config(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line '" + t + "' is not key=value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

// Written files are tracked so a failure anywhere removes every partial output.
class Outputs {
 public:
  void csv(const std::string& path, const std::string& header, const Matrix& m) {
    {
      std::ofstream out(path);
      if (!out) throw IoError("cannot write '" + path + "'");
      out << "# " << header << '\n';
      for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
          if (j) out << ',';
          out << to_g17(m(i, j));
        }
        out << '\n';
      }
      if (!out) throw IoError("write failed for '" + path + "'");
    }
    written_.push_back(path);
    load_csv(path, true);
    std::cout << "wrote " << path << "\n";
  }

  void model(const std::string& path, const ModelFile& mf) {
    save_model(path, mf);
    written_.push_back(path);
    load_model(path);
    std::cout << "wrote " << path << "\n";
  }

  void pgm(const std::string& path, const Matrix& img) {
    write_pgm(path, img);
    written_.push_back(path);
    std::cout << "wrote " << path << "\n";
  }

  void discard() {
    for (const std::string& p : written_) std::remove(p.c_str());
  }

 private:
  std::vector<std::string> written_;
};

Dataset load_source(const Opts& o) {
  const int sources =
      (o.toy3 ? 1 : 0) + (o.csv_path.empty() ? 0 : 1) + (o.idx_path.empty() ? 0 : 1);
  if (sources != 1)
    throw ConfigError("pass exactly one data source: --toy3, --csv, or --idx");
  Dataset ds;
  if (o.toy3) {
    ds = generate_toy_gaussians(kToyMeans, o.toy_per_mode, o.toy_sd, o.seed);
  } else if (!o.csv_path.empty()) {
    ds.views.push_back({"x", load_csv(o.csv_path, o.csv_header)});
  } else {
    ds.views.push_back({"images", load_idx(o.idx_path)});
    if (!o.onehot_path.empty()) {
      Matrix lab = load_idx(o.onehot_path);
      if (lab.cols != 1) throw IoError("--onehot expects an IDX label file");
      ds.views.push_back({"rawlabels", std::move(lab)});
    }
  }
  if (o.subset > 0 && o.subset < ds.n())
    for (DatasetView& v : ds.views) {
      Matrix cut(o.subset, v.data.cols);
      for (std::size_t i = 0; i < o.subset; ++i)
        for (std::size_t j = 0; j < v.data.cols; ++j) cut(i, j) = v.data(i, j);
      v.data = std::move(cut);
    }
  for (DatasetView& v : ds.views)
    if (v.name == "rawlabels") {
      double max_label = 0.0;
      for (std::size_t i = 0; i < v.data.rows; ++i)
        max_label = std::max(max_label, v.data(i, 0));
      Vec labels(v.data.rows);
      for (std::size_t i = 0; i < v.data.rows; ++i) labels[i] = v.data(i, 0);
      v.data = one_hot(labels, static_cast<std::size_t>(max_label) + 1);
      v.name = "labels";
    }
  ds.validate();
  return ds;
}

std::vector<double> parse_etas(const std::string& text, std::size_t views) {
  if (text.empty()) return std::vector<double>(views, 1.0);
  std::vector<double> etas;
  for (const std::string& part : split(text, ',')) {
    double e = 0.0;
    if (!try_parse_double(trim(part), e))
      throw ConfigError("bad eta value '" + part + "'");
    etas.push_back(e);
  }
  if (etas.size() != views)
    throw ConfigError("--eta needs one value per view (" +
                      std::to_string(views) + " views)");
  return etas;
}

Activation parse_activation(const std::string& name) {
  if (name == "prelu") return Activation::prelu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "linear") return Activation::linear;
  throw ConfigError("unknown activation '" + name + "'");
}

std::vector<LayerSpec> parse_arch(const std::string& spec) {
  std::vector<LayerSpec> layers;
  for (const std::string& part : split(spec, '|')) {
    const auto fields = split(part, ':');
    if (fields.size() != 3 && fields.size() != 4)
      throw ConfigError("layer spec must be in:out:act[:alpha], got '" + part + "'");
    unsigned long long in = 0, out = 0;
    if (!try_parse_u64(fields[0], in) || !try_parse_u64(fields[1], out))
      throw ConfigError("bad layer dimensions in '" + part + "'");
    double alpha = 0.01;
    if (fields.size() == 4 && !try_parse_double(fields[3], alpha))
      throw ConfigError("bad alpha in '" + part + "'");
    layers.push_back({static_cast<std::size_t>(in), static_cast<std::size_t>(out),
                      parse_activation(fields[2]), alpha});
  }
  if (layers.empty()) throw ConfigError("empty layer spec");
  return layers;
}

std::vector<std::size_t> parse_indices(const std::string& text, std::size_t want,
                                       std::size_t limit) {
  std::vector<std::size_t> out;
  for (const std::string& part : split(text, ',')) {
    unsigned long long v = 0;
    if (!try_parse_u64(trim(part), v))
      throw ConfigError("bad index '" + part + "'");
    if (v >= limit)
      throw ConfigError("index " + std::to_string(v) + " out of range [0, " +
                        std::to_string(limit) + ")");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.size() != want)
    throw ConfigError("expected " + std::to_string(want) + " indices");
  return out;
}

TrainConfig make_train_config(const Opts& o, std::size_t views) {
  TrainConfig cfg;
  cfg.s = o.s;
  cfg.m = o.m;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.seed = o.seed;
  cfg.use_primal = o.primal;
  cfg.final_pass_cap = o.final_pass_cap;
  cfg.objective.c_stab = o.c_stab;
  cfg.objective.gamma = o.gamma;
  cfg.objective.etas = parse_etas(o.eta, views);
  return cfg;
}

std::string out_path(const Opts& o, const std::string& name) {
  return (std::filesystem::path(o.out_dir) / name).string();
}

Vec column(const Matrix& m, std::size_t j) {
  Vec out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out[i] = m(i, j);
  return out;
}

Vec row(const Matrix& m, std::size_t i) {
  Vec out(m.cols);
  for (std::size_t j = 0; j < m.cols; ++j) out[j] = m(i, j);
  return out;
}

// Decodes one latent code into one input-space vector per view.
std::vector<Vec> decode_code(const LatentModel& model,
                             const ImplicitGenerator* gen, const Vec& h,
                             std::size_t n_r) {
  if (gen) {
    std::vector<Vec> out;
    for (PreimageResult& r : smoother_reconstruct(*gen, h, n_r))
      out.push_back(std::move(r.x));
    return out;
  }
  return decode(model, h);
}

void cmd_train(const Opts& o, Outputs& outs) {
  Dataset ds = load_source(o);
  std::vector<Matrix> views;
  std::vector<std::string> names;
  for (DatasetView& v : ds.views) {
    names.push_back(v.name);
    views.push_back(std::move(v.data));
  }
  TrainConfig cfg = make_train_config(o, views.size());

  ModelFile mf;
  mf.config = cfg;
  Matrix report;
  if (!o.fmap.empty()) {
    if (o.fmap.size() != views.size() || o.pmap.size() != views.size())
      throw ConfigError("--fmap/--pmap must be given once per view");
    std::vector<ViewMaps> maps;
    for (std::size_t l = 0; l < views.size(); ++l)
      maps.push_back({init_params(parse_arch(o.fmap[l]), o.seed + 101 + 2 * l),
                      init_params(parse_arch(o.pmap[l]), o.seed + 102 + 2 * l)});
    TrainResult tr = train_explicit(views, maps, cfg, &std::cout, names);
    mf.model = std::move(tr.model);
    report = Matrix(tr.report.trace.size(), 4 + views.size());
    for (std::size_t i = 0; i < tr.report.trace.size(); ++i) {
      const EnergyBreakdown& e = tr.report.trace[i];
      report(i, 0) = static_cast<double>(i / cfg.m + 1);
      report(i, 1) = static_cast<double>(i % cfg.m + 1);
      report(i, 2) = e.j_t;
      report(i, 3) = e.j_c;
      for (std::size_t l = 0; l < views.size(); ++l)
        report(i, 4 + l) = e.recon_losses[l];
    }
  } else {
    std::vector<KernelSpec> specs;
    for (std::size_t l = 0; l < views.size(); ++l)
      specs.push_back(l == 0 ? KernelSpec{kernel_kind_from_name(o.kernel), o.sigma}
                             : KernelSpec{KernelKind::linear, 0.0});
    mf.model = train_implicit(views, specs, cfg.objective.etas, cfg.s, names);
    report = Matrix(mf.model.s(), 2);
    for (std::size_t i = 0; i < mf.model.s(); ++i) {
      report(i, 0) = static_cast<double>(i);
      report(i, 1) = mf.model.lambda[i];
    }
  }
  if (o.l > 0) {
    mf.gmm = fit_gmm(mf.model.h, o.l, o.seed);
    mf.has_gmm = true;
  }
  const std::string model_path =
      o.model_path.empty() ? out_path(o, "model.grkm") : o.model_path;
  outs.model(model_path, mf);
  outs.csv(out_path(o, "report.csv"),
           "command=train seed=" + std::to_string(o.seed), report);
}

void cmd_generate(const Opts& o, Outputs& outs) {
  ModelFile mf = load_model(o.model_path);
  const LatentModel& model = mf.model;
  if (o.count == 0) throw ConfigError("--count must be positive");
  GmmModel gmm;
  if (mf.has_gmm)
    gmm = mf.gmm;
  else if (o.l > 0)
    gmm = fit_gmm(model.h, o.l, o.seed);
  else
    throw ConfigError("model stores no mixture; pass --l to fit one");
  const Matrix hs = sample_gmm(gmm, o.seed, o.count);

  const bool implicit = model.views[0].implicit();
  ImplicitGenerator gen;
  if (implicit) gen = make_implicit_generator(model);
  std::vector<Matrix> samples;
  for (std::size_t j = 0; j < o.count; ++j) {
    const std::vector<Vec> xs =
        decode_code(model, implicit ? &gen : nullptr, column(hs, j), o.nr);
    if (samples.empty())
      for (const Vec& x : xs) samples.emplace_back(o.count, x.size());
    for (std::size_t l = 0; l < xs.size(); ++l)
      for (std::size_t c = 0; c < xs[l].size(); ++c) samples[l](j, c) = xs[l][c];
  }
  const std::string header = "command=generate seed=" + std::to_string(o.seed) +
                             " count=" + std::to_string(o.count);
  for (std::size_t l = 0; l < samples.size(); ++l)
    outs.csv(out_path(o, "gen_" + model.views[l].name + ".csv"), header,
             samples[l]);
  if (!o.pgm.empty()) {
    const auto wh = split(o.pgm, ',');
    unsigned long long w = 0, h = 0;
    if (wh.size() != 2 || !try_parse_u64(wh[0], w) || !try_parse_u64(wh[1], h) ||
        w == 0 || h == 0)
      throw ConfigError("--pgm expects WIDTH,HEIGHT");
    bool matched = false;
    for (std::size_t l = 0; l < samples.size(); ++l) {
      if (samples[l].cols != w * h) continue;
      matched = true;
      const std::size_t ncols = static_cast<std::size_t>(
          std::ceil(std::sqrt(static_cast<double>(o.count))));
      const std::size_t nrows = (o.count + ncols - 1) / ncols;
      Matrix img(nrows * h, ncols * w);
      for (std::size_t k = 0; k < o.count; ++k)
        for (std::size_t r = 0; r < h; ++r)
          for (std::size_t c = 0; c < w; ++c)
            img((k / ncols) * h + r, (k % ncols) * w + c) =
                samples[l](k, r * w + c);
      outs.pgm(out_path(o, "gen_" + model.views[l].name + ".pgm"), img);
    }
    if (!matched) throw ConfigError("--pgm dimensions match no view");
  }
}

Matrix encode_all(const LatentModel& model, const Dataset& ds) {
  if (ds.views.size() != model.views.size())
    throw ShapeError("dataset view count does not match model");
  Matrix codes(ds.n(), model.s());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    std::vector<Vec> sample;
    for (const DatasetView& v : ds.views) sample.push_back(row(v.data, i));
    const Vec h = encode(model, sample);
    for (std::size_t j = 0; j < h.size(); ++j) codes(i, j) = h[j];
  }
  return codes;
}

void cmd_encode(const Opts& o, Outputs& outs) {
  ModelFile mf = load_model(o.model_path);
  Dataset ds = load_source(o);
  outs.csv(out_path(o, "codes.csv"),
           "command=encode seed=" + std::to_string(o.seed),
           encode_all(mf.model, ds));
}

void cmd_eval(const Opts& o, Outputs& outs) {
  ModelFile mf = load_model(o.model_path);
  const LatentModel& model = mf.model;
  Dataset ds = load_source(o);
  const Matrix codes = encode_all(model, ds);
  const std::size_t n = ds.n();
  const std::size_t nviews = ds.views.size();

  const bool implicit = model.views[0].implicit();
  ImplicitGenerator gen;
  if (implicit) gen = make_implicit_generator(model);
  Vec mse(nviews, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<Vec> xs =
        decode_code(model, implicit ? &gen : nullptr, row(codes, i), o.nr);
    for (std::size_t l = 0; l < nviews; ++l) {
      if (xs[l].size() != ds.views[l].data.cols)
        throw ShapeError("reconstruction dimension mismatch");
      double err = 0.0;
      for (std::size_t c = 0; c < xs[l].size(); ++c) {
        const double d = xs[l][c] - ds.views[l].data(i, c);
        err += d * d;
      }
      mse[l] += err;
    }
  }
  for (double& v : mse) v /= static_cast<double>(n);

  // Largest off-diagonal entry of the latent correlation matrix.
  double corr_max = 0.0;
  Matrix centered = codes;
  for (std::size_t j = 0; j < centered.cols; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += centered(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centered(i, j) -= mean;
  }
  for (std::size_t a = 0; a < centered.cols; ++a)
    for (std::size_t b = a + 1; b < centered.cols; ++b) {
      double cov = 0.0, va = 0.0, vb = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cov += centered(i, a) * centered(i, b);
        va += centered(i, a) * centered(i, a);
        vb += centered(i, b) * centered(i, b);
      }
      if (va > 0.0 && vb > 0.0)
        corr_max = std::max(corr_max, std::fabs(cov) / std::sqrt(va * vb));
    }

  Matrix result(1, nviews + 1);
  for (std::size_t l = 0; l < nviews; ++l) result(0, l) = mse[l];
  result(0, nviews) = corr_max;
  outs.csv(out_path(o, "eval.csv"),
           "command=eval seed=" + std::to_string(o.seed) +
               " nr=" + std::to_string(o.nr),
           result);
}

void cmd_interpolate(const Opts& o, Outputs& outs) {
  ModelFile mf = load_model(o.model_path);
  const LatentModel& model = mf.model;
  if (o.grid < 2) throw ConfigError("--grid must be at least 2");
  const auto idx = parse_indices(o.anchors, 4, model.n());
  const Vec h1 = column(model.h, idx[0]);
  const Vec h2 = column(model.h, idx[1]);
  const Vec h3 = column(model.h, idx[2]);
  const Vec h4 = column(model.h, idx[3]);

  const bool implicit = model.views[0].implicit();
  ImplicitGenerator gen;
  if (implicit) gen = make_implicit_generator(model);
  std::vector<Matrix> sheets;
  const double denom = static_cast<double>(o.grid - 1);
  for (std::size_t a = 0; a < o.grid; ++a)
    for (std::size_t g = 0; g < o.grid; ++g) {
      const Vec h = bilinear_interpolate(h1, h2, h3, h4,
                                         static_cast<double>(a) / denom,
                                         static_cast<double>(g) / denom);
      const std::vector<Vec> xs =
          decode_code(model, implicit ? &gen : nullptr, h, o.nr);
      if (sheets.empty())
        for (const Vec& x : xs) sheets.emplace_back(o.grid * o.grid, x.size());
      for (std::size_t l = 0; l < xs.size(); ++l)
        for (std::size_t c = 0; c < xs[l].size(); ++c)
          sheets[l](a * o.grid + g, c) = xs[l][c];
    }
  const std::string header = "command=interpolate seed=" +
                             std::to_string(o.seed) + " anchors=" + o.anchors +
                             " grid=" + std::to_string(o.grid);
  for (std::size_t l = 0; l < sheets.size(); ++l)
    outs.csv(out_path(o, "interp_" + model.views[l].name + ".csv"), header,
             sheets[l]);
}

void cmd_traverse(const Opts& o, Outputs& outs) {
  ModelFile mf = load_model(o.model_path);
  const LatentModel& model = mf.model;
  if (o.steps < 2) throw ConfigError("--steps must be at least 2");
  if (o.component >= 0 && static_cast<std::size_t>(o.component) >= model.s())
    throw ConfigError("--component out of range");
  std::vector<std::size_t> comps;
  if (o.component >= 0)
    comps.push_back(static_cast<std::size_t>(o.component));
  else
    for (std::size_t c = 0; c < model.s(); ++c) comps.push_back(c);

  const bool implicit = model.views[0].implicit();
  ImplicitGenerator gen;
  if (implicit) gen = make_implicit_generator(model);
  for (std::size_t c : comps) {
    double lo = model.h(c, 0), hi = model.h(c, 0);
    for (std::size_t j = 0; j < model.n(); ++j) {
      lo = std::min(lo, model.h(c, j));
      hi = std::max(hi, model.h(c, j));
    }
    Vec offsets(o.steps);
    for (std::size_t t = 0; t < o.steps; ++t)
      offsets[t] =
          lo + (hi - lo) * static_cast<double>(t) / static_cast<double>(o.steps - 1);
    const std::vector<Vec> codes =
        traverse_component(model, Vec(model.s(), 0.0), c, offsets);
    std::vector<Matrix> sheets;
    for (std::size_t t = 0; t < codes.size(); ++t) {
      const std::vector<Vec> xs =
          decode_code(model, implicit ? &gen : nullptr, codes[t], o.nr);
      if (sheets.empty())
        for (const Vec& x : xs) sheets.emplace_back(o.steps, x.size());
      for (std::size_t l = 0; l < xs.size(); ++l)
        for (std::size_t cc = 0; cc < xs[l].size(); ++cc)
          sheets[l](t, cc) = xs[l][cc];
    }
    const std::string header = "command=traverse seed=" + std::to_string(o.seed) +
                               " component=" + std::to_string(c) +
                               " steps=" + std::to_string(o.steps);
    for (std::size_t l = 0; l < sheets.size(); ++l)
      outs.csv(out_path(o, "traverse_" + model.views[l].name + "_c" +
                               std::to_string(c) + ".csv"),
               header, sheets[l]);
  }
}

void add_source_opts(CLI::App* sub, Opts& o) {
  sub->add_flag("--toy3", o.toy3, "Use the built-in three-mode Gaussian dataset");
  sub->add_option("--toy-per-mode", o.toy_per_mode, "Points per toy mode");
  sub->add_option("--toy-sd", o.toy_sd, "Toy mode standard deviation");
  sub->add_option("--csv", o.csv_path, "Load a single view from a CSV file");
  sub->add_flag("--csv-header", o.csv_header, "Skip the first CSV line");
  sub->add_option("--idx", o.idx_path, "Load an image view from an IDX file");
  sub->add_option("--onehot", o.onehot_path,
                  "Add a one-hot label view from an IDX label file");
  sub->add_option("--subset", o.subset, "Keep only the first N samples");
}

void add_common_opts(CLI::App* sub, Opts& o) {
  sub->add_option("--out", o.out_dir, "Output directory");
  sub->add_option("--seed", o.seed, "Random seed (echoed in output headers)");
  sub->add_option("--config", o.config_path, "Read options from a key=value file");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative restricted kernel machine toolkit"};
  app.require_subcommand(1);
  Opts o;

  CLI::App* train = app.add_subcommand("train", "Fit a latent model");
  add_source_opts(train, o);
  add_common_opts(train, o);
  train->add_option("--model", o.model_path, "Model output path");
  train->add_option("--kernel", o.kernel, "Kernel for the first view");
  train->add_option("--sigma", o.sigma, "Kernel bandwidth");
  train->add_option("--s", o.s, "Latent dimension");
  train->add_option("--eta", o.eta, "Per-view eta list, comma separated");
  train->add_option("--m", o.m, "Number of mini-batches");
  train->add_option("--epochs", o.epochs, "Training epochs (explicit maps)");
  train->add_option("--lr", o.lr, "Adam learning rate");
  train->add_option("--gamma", o.gamma, "Reconstruction weight");
  train->add_option("--c-stab", o.c_stab, "Stabilization weight");
  train->add_flag("--primal", o.primal, "Solve the primal eigenproblem");
  train->add_option("--final-pass-cap", o.final_pass_cap,
                    "Sample cap for the final full pass");
  train->add_option("--fmap", o.fmap,
                    "Feature map layers per view, in:out:act[:alpha]|...");
  train->add_option("--pmap", o.pmap, "Pre-image map layers per view");
  train->add_option("--nr", o.nr, "Smoother neighbor count (recorded)");
  train->add_option("--l", o.l, "Mixture components to fit on the codes");

  CLI::App* generate = app.add_subcommand("generate", "Sample from a model");
  add_common_opts(generate, o);
  generate->add_option("--model", o.model_path, "Model file")->required();
  generate->add_option("--count", o.count, "Number of samples");
  generate->add_option("--l", o.l, "Mixture components if none stored");
  generate->add_option("--nr", o.nr, "Smoother neighbor count");
  generate->add_option("--pgm", o.pgm, "Also write image grids, WIDTH,HEIGHT");

  CLI::App* enc = app.add_subcommand("encode", "Write latent codes for a dataset");
  add_source_opts(enc, o);
  add_common_opts(enc, o);
  enc->add_option("--model", o.model_path, "Model file")->required();

  CLI::App* interp = app.add_subcommand("interpolate",
                                        "Decode a bilinear latent grid");
  add_common_opts(interp, o);
  interp->add_option("--model", o.model_path, "Model file")->required();
  interp->add_option("--anchors", o.anchors, "Four training indices, comma separated");
  interp->add_option("--grid", o.grid, "Grid resolution per axis");
  interp->add_option("--nr", o.nr, "Smoother neighbor count");

  CLI::App* trav = app.add_subcommand("traverse", "Sweep latent components");
  add_common_opts(trav, o);
  trav->add_option("--model", o.model_path, "Model file")->required();
  trav->add_option("--component", o.component, "Component to sweep (-1 = all)");
  trav->add_option("--steps", o.steps, "Sweep resolution");
  trav->add_option("--nr", o.nr, "Smoother neighbor count");

  CLI::App* ev = app.add_subcommand("eval", "Reconstruction and decorrelation report");
  add_source_opts(ev, o);
  add_common_opts(ev, o);
  ev->add_option("--model", o.model_path, "Model file")->required();
  ev->add_option("--nr", o.nr, "Smoother neighbor count");

  CLI11_PARSE(app, argc, argv);

  Outputs outs;
  try {
    CLI::App* active = app.get_subcommands().front();
    if (!o.config_path.empty()) apply_config(active, o.config_path);
    std::filesystem::create_directories(o.out_dir);
    if (train->parsed()) cmd_train(o, outs);
    else if (generate->parsed()) cmd_generate(o, outs);
    else if (enc->parsed()) cmd_encode(o, outs);
    else if (interp->parsed()) cmd_interpolate(o, outs);
    else if (trav->parsed()) cmd_traverse(o, outs);
    else if (ev->parsed()) cmd_eval(o, outs);
  } catch (const std::exception& e) {
    outs.discard();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

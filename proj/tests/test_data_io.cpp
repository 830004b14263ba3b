#include "genrkm/data_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace genrkm {
namespace {

std::string tmp_path(const std::string& name) {
  return ::testing::TempDir() + name;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::string be32(std::uint32_t v) {
  std::string s;
  for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  return s;
}

const std::vector<Vec> kToyMeans = {{0.0, 0.0}, {3.0, 0.0}, {1.5, 2.6}};

LatentModel toy_implicit_model() {
  Dataset ds = generate_toy_gaussians(kToyMeans, 12, 0.3, 5);
  return train_implicit({ds.views[0].data, ds.views[1].data},
                        {{KernelKind::gaussian, 0.8}, {KernelKind::linear, 0.0}},
                        {1.0, 2.0}, 4, {"x", "labels"});
}

TrainResult tiny_explicit_model() {
  Rng rng(9);
  Matrix x(8, 2);
  for (double& v : x.data) v = rng.normal();
  ViewMaps maps{init_params({{2, 3, Activation::prelu, 0.2}, {3, 2, Activation::linear, 0.0}}, 10),
                init_params({{2, 2, Activation::linear, 0.0}}, 11)};
  TrainConfig cfg;
  cfg.s = 2;
  cfg.m = 2;
  cfg.epochs = 3;
  cfg.learning_rate = 1e-3;
  cfg.seed = 7;
  cfg.objective.gamma = 5.0;
  cfg.objective.etas = {1.0};
  return train_explicit({x}, {maps}, cfg);
}

TEST(ToyGaussians, ReproducibleAndShaped) {
  Dataset a = generate_toy_gaussians(kToyMeans, 10, 0.2, 42);
  Dataset b = generate_toy_gaussians(kToyMeans, 10, 0.2, 42);
  ASSERT_EQ(a.views.size(), 2u);
  EXPECT_EQ(a.views[0].name, "x");
  EXPECT_EQ(a.views[1].name, "labels");
  EXPECT_EQ(a.views[0].data.rows, 30u);
  EXPECT_EQ(a.views[0].data.cols, 2u);
  EXPECT_EQ(a.views[1].data.cols, 3u);
  EXPECT_EQ(a.views[0].data.data, b.views[0].data.data);
  EXPECT_EQ(a.views[1].data.data, b.views[1].data.data);
  a.validate();
}

TEST(ToyGaussians, LabelsAreOneHotByMode) {
  Dataset ds = generate_toy_gaussians(kToyMeans, 4, 0.1, 0);
  for (std::size_t i = 0; i < 12; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) sum += ds.views[1].data(i, c);
    EXPECT_EQ(sum, 1.0);
    EXPECT_EQ(ds.views[1].data(i, i / 4), 1.0);
  }
}

TEST(ToyGaussians, EmpiricalMeansNearModeMeans) {
  const std::size_t per_mode = 500;
  const double sd = 0.3;
  Dataset ds = generate_toy_gaussians(kToyMeans, per_mode, sd, 123);
  const double bound = 3.0 * sd / std::sqrt(static_cast<double>(per_mode));
  for (std::size_t m = 0; m < 3; ++m)
    for (std::size_t c = 0; c < 2; ++c) {
      double mean = 0.0;
      for (std::size_t i = 0; i < per_mode; ++i)
        mean += ds.views[0].data(m * per_mode + i, c);
      mean /= static_cast<double>(per_mode);
      EXPECT_NEAR(mean, kToyMeans[m][c], bound);
    }
}

TEST(ToyGaussians, Errors) {
  EXPECT_THROW(generate_toy_gaussians({}, 3, 0.1, 0), ConfigError);
  EXPECT_THROW(generate_toy_gaussians(kToyMeans, 0, 0.1, 0), ConfigError);
  EXPECT_THROW(generate_toy_gaussians({{0.0}, {1.0, 2.0}}, 3, 0.1, 0), ShapeError);
}

TEST(Csv, LiteralFileRoundTrips) {
  const std::string path = tmp_path("lit.csv");
  write_text(path, "1.5,2\n-3,4.25\n");
  Matrix m = load_csv(path, false);
  ASSERT_EQ(m.rows, 2u);
  ASSERT_EQ(m.cols, 2u);
  EXPECT_EQ(m(0, 0), 1.5);
  EXPECT_EQ(m(0, 1), 2.0);
  EXPECT_EQ(m(1, 0), -3.0);
  EXPECT_EQ(m(1, 1), 4.25);
  const std::string back = tmp_path("lit_back.csv");
  save_csv(back, m);
  Matrix m2 = load_csv(back, false);
  EXPECT_EQ(m.data, m2.data);
}

TEST(Csv, HeaderRowSkipped) {
  const std::string path = tmp_path("hdr.csv");
  write_text(path, "a,b\n1,2\n3,4\n");
  Matrix m = load_csv(path, true);
  ASSERT_EQ(m.rows, 2u);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_EQ(m(1, 1), 4.0);
  EXPECT_THROW(load_csv(path, false), IoError);
}

TEST(Csv, ScientificNotationParsesExactly) {
  const std::string path = tmp_path("sci.csv");
  write_text(path, "1.2345678901234567e-12,-9.87e+200\n");
  Matrix m = load_csv(path, false);
  EXPECT_EQ(m(0, 0), 1.2345678901234567e-12);
  EXPECT_EQ(m(0, 1), -9.87e+200);
  const std::string back = tmp_path("sci_back.csv");
  save_csv(back, m);
  EXPECT_EQ(load_csv(back, false).data, m.data);
}

TEST(Csv, Errors) {
  const std::string ragged = tmp_path("ragged.csv");
  write_text(ragged, "1,2\n3\n");
  EXPECT_THROW(load_csv(ragged, false), IoError);
  const std::string alpha = tmp_path("alpha.csv");
  write_text(alpha, "1,foo\n");
  EXPECT_THROW(load_csv(alpha, false), IoError);
  const std::string inf = tmp_path("inf.csv");
  write_text(inf, "1,inf\n");
  EXPECT_THROW(load_csv(inf, false), IoError);
  const std::string empty = tmp_path("empty.csv");
  write_text(empty, "\n");
  EXPECT_THROW(load_csv(empty, false), IoError);
  EXPECT_THROW(load_csv(tmp_path("missing_file.csv"), false), IoError);
}

TEST(Idx, ImageFixtureScaledIntoUnitRange) {
  const std::string path = tmp_path("img.idx");
  std::string bytes = be32(0x00000803u) + be32(1) + be32(2) + be32(2);
  for (unsigned char b : {0, 255, 128, 64}) bytes.push_back(static_cast<char>(b));
  write_text(path, bytes);
  Matrix m = load_idx(path);
  ASSERT_EQ(m.rows, 1u);
  ASSERT_EQ(m.cols, 4u);
  EXPECT_DOUBLE_EQ(m(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(m(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(m(0, 2), 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(m(0, 3), 64.0 / 255.0);
}

TEST(Idx, LabelFixtureKeepsIntegerValues) {
  const std::string path = tmp_path("lab.idx");
  std::string bytes = be32(0x00000801u) + be32(2);
  bytes.push_back(3);
  bytes.push_back(1);
  write_text(path, bytes);
  Matrix m = load_idx(path);
  ASSERT_EQ(m.rows, 2u);
  ASSERT_EQ(m.cols, 1u);
  EXPECT_EQ(m(0, 0), 3.0);
  EXPECT_EQ(m(1, 0), 1.0);
}

TEST(Idx, Errors) {
  const std::string bad = tmp_path("bad.idx");
  write_text(bad, be32(0x00000805u) + be32(1));
  EXPECT_THROW(load_idx(bad), IoError);
  const std::string trunc = tmp_path("trunc.idx");
  write_text(trunc, be32(0x00000803u) + be32(1) + be32(2) + be32(2) + "\x01\x02");
  EXPECT_THROW(load_idx(trunc), IoError);
  const std::string short_hdr = tmp_path("short.idx");
  write_text(short_hdr, "\x00\x00");
  EXPECT_THROW(load_idx(short_hdr), IoError);
}

TEST(OneHot, EncodesAndInverts) {
  Matrix m = one_hot({0.0, 2.0, 1.0}, 3);
  ASSERT_EQ(m.rows, 3u);
  ASSERT_EQ(m.cols, 3u);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_EQ(m(0, 1), 0.0);
  EXPECT_EQ(m(0, 2), 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    double sum = 0.0;
    std::size_t argmax = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      sum += m(i, c);
      if (m(i, c) > m(i, argmax)) argmax = c;
    }
    EXPECT_EQ(sum, 1.0);
    EXPECT_EQ(static_cast<double>(argmax), (Vec{0.0, 2.0, 1.0})[i]);
  }
}

TEST(OneHot, Errors) {
  EXPECT_THROW(one_hot({3.0}, 3), UsageError);
  EXPECT_THROW(one_hot({-1.0}, 3), UsageError);
  EXPECT_THROW(one_hot({0.5}, 3), UsageError);
  EXPECT_THROW(one_hot({0.0}, 0), ConfigError);
}

TEST(ModelPersistence, ImplicitRoundTripIsByteIdentical) {
  ModelFile mf;
  mf.model = toy_implicit_model();
  mf.config.s = 4;
  mf.config.objective.etas = {1.0, 2.0};
  mf.has_gmm = true;
  mf.gmm = fit_gmm(mf.model.h, 3, 17);
  const std::string p1 = tmp_path("imp1.grkm");
  const std::string p2 = tmp_path("imp2.grkm");
  save_model(p1, mf);
  ModelFile loaded = load_model(p1);
  save_model(p2, loaded);
  EXPECT_EQ(read_bytes(p1), read_bytes(p2));
  EXPECT_TRUE(loaded.has_gmm);
  EXPECT_EQ(loaded.gmm.weights, mf.gmm.weights);
  EXPECT_EQ(loaded.config.objective.etas, mf.config.objective.etas);
}

TEST(ModelPersistence, ExplicitRoundTripIsByteIdentical) {
  TrainResult tr = tiny_explicit_model();
  ModelFile mf;
  mf.model = std::move(tr.model);
  mf.config.s = 2;
  mf.config.m = 2;
  mf.config.epochs = 3;
  mf.config.learning_rate = 1e-3;
  mf.config.seed = 7;
  mf.config.objective.gamma = 5.0;
  mf.config.objective.etas = {1.0};
  const std::string p1 = tmp_path("exp1.grkm");
  const std::string p2 = tmp_path("exp2.grkm");
  save_model(p1, mf);
  ModelFile loaded = load_model(p1);
  save_model(p2, loaded);
  EXPECT_EQ(read_bytes(p1), read_bytes(p2));
  ASSERT_FALSE(loaded.model.views[0].implicit());
  EXPECT_EQ(loaded.model.views[0].exp().fmap.layers.size(), 2u);
  EXPECT_EQ(loaded.model.views[0].exp().fmap.layers[0].alpha, 0.2);
}

TEST(ModelPersistence, LoadedModelEncodesBitExactly) {
  ModelFile mf;
  mf.model = toy_implicit_model();
  mf.config.objective.etas = {1.0, 2.0};
  const std::string path = tmp_path("enc.grkm");
  save_model(path, mf);
  ModelFile loaded = load_model(path);
  const std::vector<Vec> sample = {{1.4, 0.2}, {0.0, 1.0, 0.0}};
  Vec a = encode(mf.model, sample);
  Vec b = encode(loaded.model, sample);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(ModelPersistence, CorruptedFilesRejected) {
  ModelFile mf;
  mf.model = toy_implicit_model();
  mf.config.objective.etas = {1.0, 2.0};
  const std::string path = tmp_path("corrupt.grkm");
  save_model(path, mf);
  const std::string good = read_bytes(path);

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  const std::string pm = tmp_path("bad_magic.grkm");
  write_text(pm, bad_magic);
  EXPECT_THROW(load_model(pm), IoError);

  std::string flipped = good;
  flipped[good.size() / 2] ^= 0x01;
  const std::string pf = tmp_path("bad_crc.grkm");
  write_text(pf, flipped);
  try {
    load_model(pf);
    FAIL() << "checksum failure not detected";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
  }

  std::string wrong_version = good;
  wrong_version[4] = 2;
  const std::string body = wrong_version.substr(0, wrong_version.size() - 4);
  wrong_version = body;
  const std::uint32_t crc = detail::crc32(body);
  for (int i = 0; i < 4; ++i)
    wrong_version.push_back(static_cast<char>((crc >> (8 * i)) & 0xFFu));
  const std::string pv = tmp_path("bad_version.grkm");
  write_text(pv, wrong_version);
  try {
    load_model(pv);
    FAIL() << "version mismatch not detected";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }

  const std::string pt = tmp_path("truncated.grkm");
  write_text(pt, good.substr(0, good.size() / 2));
  EXPECT_THROW(load_model(pt), IoError);
}

TEST(ImageWriters, PgmExactText) {
  Matrix img(2, 2);
  img(0, 0) = 0.0;
  img(0, 1) = 1.0;
  img(1, 0) = 0.5;
  img(1, 1) = 0.25;
  const std::string path = tmp_path("img.pgm");
  write_pgm(path, img);
  EXPECT_EQ(read_bytes(path), "P2\n2 2\n255\n0 255\n128 64\n");
}

TEST(ImageWriters, PpmExactTextAndClamping) {
  Matrix img(1, 6);
  img(0, 0) = 1.5;
  img(0, 1) = -0.25;
  img(0, 2) = 0.0;
  img(0, 3) = 0.0;
  img(0, 4) = 0.5;
  img(0, 5) = 1.0;
  const std::string path = tmp_path("img.ppm");
  write_ppm(path, img);
  EXPECT_EQ(read_bytes(path), "P3\n2 1\n255\n255 0 0 0 128 255\n");
  Matrix odd(1, 4);
  EXPECT_THROW(write_ppm(tmp_path("odd.ppm"), odd), ShapeError);
}

TEST(Dataset, ValidateCatchesBadViews) {
  Dataset ds;
  EXPECT_THROW(ds.validate(), ShapeError);
  ds.views.push_back({"a", Matrix(3, 2)});
  ds.views.push_back({"b", Matrix(4, 2)});
  EXPECT_THROW(ds.validate(), ShapeError);
  ds.views[1].data = Matrix(3, 1);
  ds.validate();
  ds.views[0].data(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(ds.validate(), IoError);
}

}  // namespace
}  // namespace genrkm

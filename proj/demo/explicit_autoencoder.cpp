// Jointly trained explicit maps: a linear encoder/decoder pair learns to
// autoencode whitened data through the latent subspace, then decodes an
// interpolation between two training codes.
#include <cstdio>

#include "genrkm/generation.hpp"
#include "genrkm/training.hpp"

using namespace genrkm;

int main() {
  Rng rng(30);
  Matrix x(64, 4);
  for (double& v : x.data) v = rng.normal();
  // Whitening makes the identity map a fixed point of the subspace step.
  for (std::size_t j = 0; j < x.cols; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) mean += x(i, j);
    mean /= static_cast<double>(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) x(i, j) -= mean;
  }
  const Matrix cov =
      scale(matmul(transpose(x), x), 1.0 / static_cast<double>(x.rows));
  const SymEigResult eig = sym_eig(cov, x.cols);
  Matrix w(x.cols, x.cols);
  for (std::size_t a = 0; a < x.cols; ++a)
    for (std::size_t b = 0; b < x.cols; ++b) {
      double sum = 0.0;
      for (std::size_t k = 0; k < x.cols; ++k)
        sum += eig.eigenvectors(a, k) * eig.eigenvectors(b, k) /
               std::sqrt(eig.eigenvalues[k]);
      w(a, b) = sum;
    }
  x = matmul(x, w);

  std::vector<ViewMaps> maps = {
      {init_params({{4, 4, Activation::linear, 0.0}}, 31),
       init_params({{4, 4, Activation::linear, 0.0}}, 32)}};
  TrainConfig cfg;
  cfg.s = 4;
  cfg.epochs = 200;
  cfg.learning_rate = 3e-2;
  cfg.seed = 3;
  cfg.objective.gamma = 1e7;
  cfg.objective.etas = {1.0};
  const TrainResult tr = train_explicit({x}, maps, cfg);
  for (std::size_t e = 0; e < tr.report.trace.size(); e += 40)
    std::printf("epoch %3zu  recon mse %.3e\n", e + 1,
                tr.report.trace[e].recon_losses[0]);
  std::printf("epoch %3zu  recon mse %.3e\n", tr.report.trace.size(),
              tr.report.trace.back().recon_losses[0]);

  Vec h0(cfg.s), h1(cfg.s);
  for (std::size_t i = 0; i < cfg.s; ++i) {
    h0[i] = tr.model.h(i, 0);
    h1[i] = tr.model.h(i, 1);
  }
  std::printf("\ndecoded interpolation between samples 0 and 1:\n");
  for (double t : {0.0, 0.5, 1.0}) {
    Vec code(cfg.s);
    for (std::size_t i = 0; i < cfg.s; ++i)
      code[i] = (1.0 - t) * h0[i] + t * h1[i];
    const std::vector<Vec> dec = decode(tr.model, code);
    std::printf("  t=%.1f  (%+.3f, %+.3f, %+.3f, %+.3f)\n", t, dec[0][0],
                dec[0][1], dec[0][2], dec[0][3]);
  }
  return 0;
}

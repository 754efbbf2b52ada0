#include <algorithm>
#include "instances.hpp"

#include <random>

#include "ksgl/simulate.hpp"

namespace ksgl::testing {

Matrix random_symmetric(Eigen::Index n, Rng& rng, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = normal(rng);
  return scale * 0.5 * (a + a.transpose());
}

Matrix random_spd(Eigen::Index n, Rng& rng, double lo, double hi) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(lo, hi);
  Matrix a(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix q = qr.householderQ();
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = unif(rng);
  const Matrix m = q * d.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

KsModel random_model(Eigen::Index p, Eigen::Index q, Rng& rng) {
  return KsModel(random_spd(p, rng), random_spd(q, rng));
}

std::vector<Matrix> random_data(Eigen::Index p, Eigen::Index q, int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Matrix> out;
  for (int i = 0; i < n; ++i) {
    Matrix y(q, p);
    for (Eigen::Index c = 0; c < p; ++c)
      for (Eigen::Index r = 0; r < q; ++r) y(r, c) = normal(rng);
    out.push_back(y);
  }
  return out;
}

SampleStats random_stats(Eigen::Index p, Eigen::Index q, int n, Rng& rng) {
  return sample_stats(random_data(p, q, n, rng));
}

Instance simulated_instance(int p, int q, int n, std::uint64_t seed, bool clustered, int blocks) {
  Rng rng(seed);
  // 10 nonzeros per row, capped for small sizes where that cannot fit.
  auto nnz = [](int n) { return std::min(10 * n, n * n / 2); };
  GraphSpec gt{clustered ? GraphKind::clustered : GraphKind::random, p, nnz(p), blocks, seed};
  GraphSpec gp{clustered ? GraphKind::clustered : GraphKind::random, q, nnz(q), blocks, seed};
  Instance inst;
  inst.theta = gen_graph(gt, rng);
  inst.psi = gen_graph(gp, rng);
  const KsModel truth(inst.theta, inst.psi);
  inst.stats = sample_stats(sample_data(truth, n, rng));
  return inst;
}

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

double rel_diff(const Matrix& a, const Matrix& b) {
  return max_abs_diff(a, b) / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

}  // namespace ksgl::testing

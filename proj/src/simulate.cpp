#include "ksgl/simulate.hpp"

#include <cmath>
#include <random>

namespace ksgl {

namespace {

constexpr int kMaxAttempts = 100;
constexpr double kFillBand = 0.3;

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Smallest density whose expected fill reaches the target.
double calibrate_density(int n, double target) {
  if (target <= n) return 0.0;
  if (expected_fill(n, 1.0) < target) {
    throw GenerationError("target fill " + std::to_string(target) + " is not reachable for size " +
                          std::to_string(n));
  }
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (expected_fill(n, mid) < target ? lo : hi) = mid;
  }
  return hi;
}

Matrix draw_graph(int n, double density, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix a = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double u = unif(rng);
      if (u < density) a(i, j) = u < 0.5 * density ? -1.0 : 1.0;
    }
  }
  Matrix theta = a * a.transpose();
  std::uniform_real_distribution<double> sig(0.0, 0.1);
  for (int i = 0; i < n; ++i) theta(i, i) += sig(rng) + 1e-4;
  return theta;
}

bool support_connected(const Matrix& m) {
  int count = 0;
  threshold_components(m, 0.0, &count);
  return count == 1;
}

}  // namespace

void GraphSpec::validate() const {
  if (size < 1) throw InputError("graph size must be positive");
  if (kind == GraphKind::random) {
    if (target_nnz < 1 || static_cast<long long>(target_nnz) > static_cast<long long>(size) * size) {
      throw InputError("target_nnz must lie in [1, p^2]");
    }
  } else if (num_blocks < 1 || num_blocks > size) {
    throw InputError("num_blocks must lie in [1, p]");
  }
}

double expected_fill(int n, double density) {
  const double r = density * density;  // P(A_ik A_jk != 0)
  if (r <= 0.0) return n;
  // P(sum of n terms in {-1,0,1} is zero), terms nonzero w.p. r with random sign.
  double p_zero = 0.0;
  for (int m = 0; m <= n; m += 2) {
    double lp = log_choose(n, m) + log_choose(m, m / 2) - m * std::log(2.0);
    lp += m > 0 ? m * std::log(r) : 0.0;
    lp += n - m > 0 ? (n - m) * std::log1p(-r) : 0.0;
    if (r >= 1.0 && m != n) continue;
    p_zero += std::exp(lp);
  }
  return n + static_cast<double>(n) * (n - 1) * (1.0 - p_zero);
}

std::size_t support_size(const Matrix& m, double threshold) {
  return static_cast<std::size_t>((m.array().abs() > threshold).count());
}

Matrix gen_random_graph(const GraphSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.kind != GraphKind::random) throw InputError("graph spec is not of random kind");
  const double density = calibrate_density(spec.size, spec.target_nnz);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Matrix theta = draw_graph(spec.size, density, rng);
    const double nnz = static_cast<double>(support_size(theta));
    if (std::abs(nnz - spec.target_nnz) <= kFillBand * spec.target_nnz && eigendecompose(theta).min() > 0.0) {
      return theta;
    }
  }
  throw GenerationError("could not draw a graph within 30% of the target fill");
}

Matrix gen_cluster_graph(const GraphSpec& spec, Rng& rng) {
  spec.validate();
  if (spec.kind != GraphKind::clustered) throw InputError("graph spec is not of clustered kind");
  const int p = spec.size;
  const int base = p / spec.num_blocks;
  Matrix theta = Matrix::Zero(p, p);
  int offset = 0;
  for (int b = 0; b < spec.num_blocks; ++b) {
    const int bs = b + 1 == spec.num_blocks ? p - offset : base;
    const double target = std::min<double>(p, expected_fill(bs, 1.0));
    const double density = calibrate_density(bs, target);
    Matrix block;
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxAttempts) throw GenerationError("could not draw a connected cluster block");
      block = draw_graph(bs, density, rng);
      // A connected support needs at least 3 bs - 2 nonzeros; sparser targets
      // are taken as drawn.
      if (bs == 1 || target < 3.0 * bs - 2 || support_connected(block)) break;
    }
    theta.block(offset, offset, bs, bs) = block;
    offset += bs;
  }
  if (!(eigendecompose(theta).min() > 0.0)) throw GenerationError("cluster graph is not positive definite");
  return theta;
}

Matrix gen_graph(const GraphSpec& spec, Rng& rng) {
  return spec.kind == GraphKind::random ? gen_random_graph(spec, rng) : gen_cluster_graph(spec, rng);
}

std::vector<Matrix> sample_data(const KsModel& model, int n, Rng& rng) {
  if (n < 1) throw InputError("number of samples must be positive");
  const EigenSystem& et = model.eig_theta();
  const EigenSystem& ep = model.eig_psi();
  const Eigen::Index p = model.p(), q = model.q();
  Matrix scale(q, p);
  for (Eigen::Index l = 0; l < p; ++l)
    for (Eigen::Index k = 0; k < q; ++k) scale(k, l) = 1.0 / std::sqrt(et.values(l) + ep.values(k));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Matrix z(q, p);
    for (Eigen::Index l = 0; l < p; ++l)
      for (Eigen::Index k = 0; k < q; ++k) z(k, l) = normal(rng) * scale(k, l);
    out.push_back(ep.vectors * z * et.vectors.transpose());
  }
  return out;
}

const char* to_string(GraphKind k) { return k == GraphKind::random ? "random" : "clustered"; }

GraphKind parse_graph_kind(const std::string& s) {
  if (s == "random") return GraphKind::random;
  if (s == "clustered") return GraphKind::clustered;
  throw InputError("unknown graph kind '" + s + "'");
}

}  // namespace ksgl

#include <cmath>
#include <limits>
#include <sstream>

#include "ksgl/solver.hpp"

namespace ksgl {

namespace {

double penalty_change(const Matrix& x, const Matrix& d, double alpha, double weight) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (i != j) acc += std::abs(x(i, j) + alpha * d(i, j)) - std::abs(x(i, j));
    }
  }
  return weight * acc;
}

// log det(new) - log det(old), summed pairwise over matching sorted
// eigenvalues so that a small step yields a small, accurately computed sum.
double logdet_change(const EigenSystem& t0, const EigenSystem& p0, const EigenSystem& t1,
                     const EigenSystem& p1) {
  const Vector dt = t1.values - t0.values;
  const Vector dp = p1.values - p0.values;
  double acc = 0.0;
  for (Eigen::Index l = 0; l < t0.size(); ++l) {
    for (Eigen::Index k = 0; k < p0.size(); ++k) {
      acc += std::log1p((dt(l) + dp(k)) / (t0.values(l) + p0.values(k)));
    }
  }
  return acc;
}

double abs_logdet(const EigenSystem& t, const EigenSystem& p) {
  double acc = 0.0;
  for (Eigen::Index l = 0; l < t.size(); ++l) {
    for (Eigen::Index k = 0; k < p.size(); ++k) acc += std::abs(std::log(t.values(l) + p.values(k)));
  }
  return acc;
}

}  // namespace

LineSearchResult line_search(const KsModel& model, const SampleStats& stats, const DirectionPair& d,
                             const Gradient& grad, const ObjectiveValue& current, const SolverConfig& cfg) {
  const double p = static_cast<double>(model.p()), q = static_cast<double>(model.q());
  const Penalty gamma = cfg.penalty();
  LineSearchResult res;
  res.delta = predicted_decrease(model, grad, d, gamma);

  const double lin_theta = q * stats.s.cwiseProduct(model.theta()).sum();
  const double lin_psi = p * stats.t.cwiseProduct(model.psi()).sum();
  const double scale = std::abs(lin_theta) + std::abs(lin_psi) +
                       abs_logdet(model.eig_theta(), model.eig_psi()) + std::abs(current.h);
  const double noise = 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale);
  const bool negligible = cfg.sigma * std::abs(res.delta) <= noise;

  if (!(res.delta < 0.0)) {
    if (negligible) {
      res.stalled = true;
      return res;
    }
    std::ostringstream os;
    os << "search direction is not a descent direction (delta = " << res.delta << ")";
    throw LineSearchError(os.str());
  }

  const double lin_step = q * stats.s.cwiseProduct(d.theta).sum() + p * stats.t.cwiseProduct(d.psi).sum();
  double alpha = 1.0;
  for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
    const Matrix th = model.theta() + alpha * d.theta;
    const Matrix ps = model.psi() + alpha * d.psi;
    EigenSystem et = eigendecompose(th);
    EigenSystem ep = eigendecompose(ps);
    if (et.min() + ep.min() > 0.0) {
      const double dg = alpha * lin_step - logdet_change(model.eig_theta(), model.eig_psi(), et, ep);
      const double dh = penalty_change(model.theta(), d.theta, alpha, q * gamma.theta) +
                        penalty_change(model.psi(), d.psi, alpha, p * gamma.psi);
      if (dg + dh <= alpha * cfg.sigma * res.delta) {
        res.alpha = alpha;
        res.objective = {current.f + dg + dh, current.g + dg, current.h + dh};
        res.eig_theta = std::move(et);
        res.eig_psi = std::move(ep);
        res.backtracks = bt;
        return res;
      }
      if (negligible) {
        res.stalled = true;
        res.backtracks = bt;
        return res;
      }
    }
    alpha *= cfg.beta;
  }
  std::ostringstream os;
  os << "line search failed after " << cfg.max_backtracks << " backtracks (delta = " << res.delta << ")";
  throw LineSearchError(os.str());
}

}  // namespace ksgl

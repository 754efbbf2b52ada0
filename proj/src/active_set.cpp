#include <algorithm>
#include <cmath>

#include "ksgl/solver.hpp"

namespace ksgl {

SweepSchedule default_sweep_schedule() {
  return [](int t) { return std::min(1 + t / 3, 20); };
}

SweepSchedule constant_sweep_schedule(int sweeps) {
  return [sweeps](int) { return sweeps; };
}

double SolverConfig::trace_ratio(Eigen::Index p, Eigen::Index q) const {
  return rho ? *rho : static_cast<double>(q) / static_cast<double>(p);
}

void SolverConfig::validate() const {
  if (!(gamma_theta > 0.0) || !(gamma_psi > 0.0)) throw InputError("regularization must be positive");
  if (k_trunc < 0) throw InputError("k_trunc must be >= 0");
  if (rho && !(*rho > 0.0)) throw InputError("trace ratio must be positive");
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (consecutive_required < 1) throw InputError("consecutive_required must be >= 1");
  if (max_newton_iters < 1) throw InputError("max_newton_iters must be >= 1");
  if (!(sigma > 0.0 && sigma < 0.5)) throw InputError("sigma must lie in (0, 0.5)");
  if (!(beta > 0.0 && beta < 1.0)) throw InputError("beta must lie in (0, 1)");
  if (max_backtracks < 0) throw InputError("max_backtracks must be >= 0");
  if (!sweep_schedule) throw InputError("sweep schedule missing");
}

double DirectionPair::max_abs() const {
  return std::max(theta.cwiseAbs().maxCoeff(), psi.cwiseAbs().maxCoeff());
}

namespace {

std::vector<Coordinate> active_block(const Matrix& x, const Matrix& g, double weight,
                                     const std::function<bool(int, int)>& fixed) {
  std::vector<Coordinate> out;
  const int n = static_cast<int>(x.rows());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      if (i == j) {
        out.push_back({i, j});
        continue;
      }
      if (fixed && fixed(i, j)) continue;
      if (x(i, j) != 0.0 || std::abs(g(i, j)) > weight) out.push_back({i, j});
    }
  }
  return out;
}

}  // namespace

ActiveSets detect_active_sets(const KsModel& model, const Gradient& grad, const SolverConfig& cfg,
                              const Screening* screening) {
  const double p = static_cast<double>(model.p()), q = static_cast<double>(model.q());
  std::function<bool(int, int)> fixed_theta, fixed_psi;
  if (screening) {
    fixed_theta = [screening](int i, int j) { return screening->theta_fixed(i, j); };
    fixed_psi = [screening](int i, int j) { return screening->psi_fixed(i, j); };
  }
  ActiveSets a;
  a.theta = active_block(model.theta(), grad.theta, q * cfg.gamma_theta, fixed_theta);
  a.psi = active_block(model.psi(), grad.psi, p * cfg.gamma_psi, fixed_psi);
  return a;
}

}  // namespace ksgl

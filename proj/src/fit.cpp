#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "ksgl/solver.hpp"

namespace ksgl {

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::max_iterations: return "max_iterations";
  }
  return "unknown";
}

NewtonStep newton_step(const SampleStats& stats, const KsModel& model, const ObjectiveValue& current,
                       const SolverConfig& cfg, int iter, Rng& rng, const Screening* screening) {
  const Gradient grad = gradient(stats, model);
  ActiveSets active = detect_active_sets(model, grad, cfg, screening);
  const HessianRep hess = build_hessian(model, cfg.k_trunc);
  const int sweeps = cfg.sweep_schedule(iter);
  DirectionPair d = cd_direction(model, grad, hess, active, cfg.penalty(), sweeps, rng);

  if (d.max_abs() <= 1e-12) {
    return NewtonStep{model, current, std::move(d), std::move(active), 0.0, 0.0, 0, true};
  }
  LineSearchResult ls = line_search(model, stats, d, grad, current, cfg);
  if (ls.stalled) {
    return NewtonStep{model, current, std::move(d), std::move(active), 0.0, ls.delta, ls.backtracks, true};
  }
  KsModel next(model.theta() + ls.alpha * d.theta, model.psi() + ls.alpha * d.psi, std::move(ls.eig_theta),
               std::move(ls.eig_psi));
  return NewtonStep{std::move(next), ls.objective, std::move(d), std::move(active),
                    ls.alpha,        ls.delta,     ls.backtracks, false};
}

bool check_convergence(const SolverTrace& trace, const SolverConfig& cfg) {
  const auto& r = trace.records;
  const std::size_t need = static_cast<std::size_t>(cfg.consecutive_required);
  if (r.size() < need + 1) return false;
  for (std::size_t t = r.size() - need; t < r.size(); ++t) {
    const double denom = std::max(std::abs(r[t].f), std::numeric_limits<double>::min());
    if (!(std::abs(r[t].f - r[t - 1].f) / denom < cfg.epsilon)) return false;
  }
  return true;
}

FitResult fit(const SampleStats& stats, const SolverConfig& cfg, const IterationObserver& observer) {
  cfg.validate();
  if (stats.n < 1) throw InputError("no observations in statistics");
  const Eigen::Index p = stats.p(), q = stats.q();
  if (cfg.k_trunc > std::min(p, q)) throw InputError("k_trunc exceeds min(p, q)");
  const double rho = cfg.trace_ratio(p, q);

  std::optional<Screening> screening;
  if (cfg.screening) screening = screen_blocks(stats, cfg);
  const Screening* screen = screening ? &*screening : nullptr;

  using Clock = std::chrono::steady_clock;
  KsModel model = KsModel::identity(p, q);
  ObjectiveValue obj = objective(stats, model, cfg.penalty());
  Rng rng(cfg.rng_seed);

  SolverTrace trace;
  trace.records.push_back({0, obj.f, obj.g, obj.h, 0.0, 0, 0, 0, 0.0});
  StopReason reason = StopReason::max_iterations;
  int iterations = 0;
  for (int t = 0; t < cfg.max_newton_iters; ++t) {
    const auto start = Clock::now();
    NewtonStep step = newton_step(stats, model, obj, cfg, t, rng, screen);
    model = std::move(step.next);
    obj = step.objective;
    if (cfg.adjust_every_iteration) model = adjust_trace_ratio(model, rho);
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    trace.records.push_back({t + 1, obj.f, obj.g, obj.h, step.alpha, step.active.theta.size(),
                             step.active.psi.size(), step.backtracks, secs});
    iterations = t + 1;
    if (observer) observer(t + 1, model);
    if (check_convergence(trace, cfg)) {
      reason = StopReason::converged;
      break;
    }
  }
  model = adjust_trace_ratio(model, rho);
  const ObjectiveValue final_obj = objective(stats, model, cfg.penalty());
  return FitResult{std::move(model), std::move(trace), reason, final_obj, iterations};
}

}  // namespace ksgl

#include "ksgl/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "ksgl/csv.hpp"

namespace ksgl {

namespace {

std::size_t upper_edges(const Matrix& m, double threshold) {
  std::size_t n = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if (std::abs(m(i, j)) > threshold) ++n;
  return n;
}

void count_support(const Matrix& est, const Matrix& truth, double threshold, SupportScore& s) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols()) {
    throw InputError("estimate and truth dimensions differ");
  }
  for (Eigen::Index j = 0; j < est.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const bool e = std::abs(est(i, j)) > threshold;
      const bool t = truth(i, j) != 0.0;
      s.estimated += e;
      s.truth += t;
      s.true_positive += e && t;
    }
  }
}

double mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) throw InputError("slope needs at least two points");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

SupportScore support_score(const Matrix& est_theta, const Matrix& est_psi, const Matrix& true_theta,
                           const Matrix& true_psi, double threshold) {
  SupportScore s;
  count_support(est_theta, true_theta, threshold, s);
  count_support(est_psi, true_psi, threshold, s);
  s.precision = s.estimated ? static_cast<double>(s.true_positive) / s.estimated : 1.0;
  s.recall = s.truth ? static_cast<double>(s.true_positive) / s.truth : 1.0;
  return s;
}

double edge_density(const Matrix& true_theta, const Matrix& true_psi) {
  const double p = static_cast<double>(true_theta.rows()), q = static_cast<double>(true_psi.rows());
  const double pairs = p * (p - 1) / 2 + q * (q - 1) / 2;
  return static_cast<double>(upper_edges(true_theta, 0.0) + upper_edges(true_psi, 0.0)) / pairs;
}

std::vector<GridFit> fit_grid(const SampleStats& stats, const std::vector<double>& grid,
                              const SolverConfig& cfg_base, int jobs) {
  if (grid.empty()) throw InputError("empty regularization grid");
  std::vector<GridFit> out(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      out[i].gamma = grid[i];
      SolverConfig cfg = cfg_base;
      cfg.gamma_theta = cfg.gamma_psi = grid[i];
      try {
        out[i].fit = fit(stats, cfg);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(grid.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

std::vector<PRPoint> pr_points(const std::vector<GridFit>& fits, const Matrix& true_theta,
                               const Matrix& true_psi) {
  std::vector<PRPoint> out;
  for (const GridFit& g : fits) {
    PRPoint pt;
    pt.gamma = g.gamma;
    if (g.fit) {
      const SupportScore s = support_score(g.fit->model.theta(), g.fit->model.psi(), true_theta, true_psi);
      pt.precision = s.precision;
      pt.recall = s.recall;
      pt.nnz_theta = upper_edges(g.fit->model.theta(), kEdgeThreshold);
      pt.nnz_psi = upper_edges(g.fit->model.psi(), kEdgeThreshold);
    } else {
      pt.error = g.error;
      pt.precision = std::nan("");
      pt.recall = std::nan("");
    }
    out.push_back(pt);
  }
  return out;
}

std::vector<PRPoint> pr_curve(const SampleStats& stats, const Matrix& true_theta, const Matrix& true_psi,
                              const std::vector<double>& gamma_grid, const SolverConfig& cfg_base, int jobs) {
  if (true_theta.rows() != stats.p() || true_psi.rows() != stats.q()) {
    throw InputError("truth dimensions do not match the data");
  }
  return pr_points(fit_grid(stats, gamma_grid, cfg_base, jobs), true_theta, true_psi);
}

double pr_auc(std::vector<PRPoint> points, double baseline_precision) {
  std::erase_if(points, [](const PRPoint& p) { return !p.error.empty() || std::isnan(p.recall); });
  if (points.empty()) return 0.0;
  std::sort(points.begin(), points.end(), [](const PRPoint& a, const PRPoint& b) {
    return a.recall < b.recall || (a.recall == b.recall && a.precision > b.precision);
  });
  std::vector<std::pair<double, double>> curve;
  curve.emplace_back(0.0, points.front().precision);
  for (const PRPoint& p : points) curve.emplace_back(p.recall, p.precision);
  if (curve.back().first < 1.0) curve.emplace_back(1.0, baseline_precision);
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].first - curve[i - 1].first) * 0.5 * (curve[i].second + curve[i - 1].second);
  }
  return area;
}

double bic(const SampleStats& stats, const KsModel& model) {
  const ObjectiveValue v = objective(stats, model, Penalty{0.0, 0.0});
  const double n = static_cast<double>(stats.n);
  const double params = static_cast<double>(offdiag_nnz(model.theta(), kEdgeThreshold)) / 2.0 +
                        static_cast<double>(offdiag_nnz(model.psi(), kEdgeThreshold)) / 2.0 +
                        static_cast<double>(model.p() + model.q());
  return 2.0 * n * v.g + std::log(std::max(n, 2.0)) * params;
}

double error_norm(const KsModel& model, const KsModel& reference, double rho) {
  if (model.p() != reference.p() || model.q() != reference.q()) throw InputError("model dimensions differ");
  const KsModel a = adjust_trace_ratio(model, rho);
  const KsModel b = adjust_trace_ratio(reference, rho);
  return std::sqrt((a.theta() - b.theta()).squaredNorm() + (a.psi() - b.psi()).squaredNorm());
}

std::vector<double> log_grid(double hi, double lo, int count) {
  if (count < 1 || !(hi > 0.0) || !(lo > 0.0)) throw InputError("invalid grid specification");
  std::vector<double> g;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    g.push_back(std::exp(std::log(hi) + t * (std::log(lo) - std::log(hi))));
  }
  return g;
}

double max_offdiag_stat(const SampleStats& stats) {
  double m = 0.0;
  for (const Matrix* x : {&stats.s, &stats.t})
    for (Eigen::Index j = 0; j < x->cols(); ++j)
      for (Eigen::Index i = 0; i < j; ++i) m = std::max(m, std::abs((*x)(i, j)));
  return m;
}

ConvergenceRun convergence_run(const SampleStats& stats, const SolverConfig& cfg, const KsModel& reference) {
  ConvergenceRun run{FitResult{KsModel::identity(1, 1), {}, StopReason::max_iterations, {}, 0}, {}, {}};
  const double rho = cfg.trace_ratio(stats.p(), stats.q());
  auto observe = [&](int, const KsModel& m) { run.errors.push_back(error_norm(m, reference, rho)); };
  run.result = fit(stats, cfg, observe);
  for (std::size_t t = 1; t < run.result.trace.records.size(); ++t) run.f.push_back(run.result.trace.records[t].f);
  return run;
}

double loglog_slope(const std::vector<double>& e) {
  std::vector<double> x, y;
  for (std::size_t t = 0; t + 1 < e.size(); ++t) {
    x.push_back(std::log(e[t]));
    y.push_back(std::log(e[t + 1]));
  }
  return ls_slope(x, y);
}

double geometric_ratio(const std::vector<double>& e) {
  std::vector<double> x, y;
  for (std::size_t t = 0; t < e.size(); ++t) {
    x.push_back(static_cast<double>(t));
    y.push_back(std::log(e[t]));
  }
  return std::exp(ls_slope(x, y));
}

void write_trace_csv(const std::filesystem::path& path, const SolverTrace& trace, bool include_time) {
  auto out = open_out(path);
  out << "iter,f,g,h,alpha,active_theta,active_psi,backtracks,seconds\n";
  for (const TraceRecord& r : trace.records) {
    out << r.iter << ',' << format_double(r.f) << ',' << format_double(r.g) << ',' << format_double(r.h) << ','
        << format_double(r.alpha) << ',' << r.active_theta << ',' << r.active_psi << ',' << r.backtracks << ','
        << format_double(include_time ? r.seconds : 0.0) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_pr_csv(const std::filesystem::path& path, const std::vector<PRPoint>& points) {
  auto out = open_out(path);
  out << "gamma,precision,recall,nnz_theta,nnz_psi,error\n";
  for (const PRPoint& p : points) {
    out << format_double(p.gamma) << ',' << format_double(p.precision) << ',' << format_double(p.recall) << ','
        << p.nnz_theta << ',' << p.nnz_psi << ',' << (p.error.empty() ? "" : "fit_failed") << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_bic_csv(const std::filesystem::path& path, const std::vector<BicRow>& rows) {
  auto out = open_out(path);
  out << "gamma,bic,nnz_theta,nnz_psi,status\n";
  for (const BicRow& r : rows) {
    out << format_double(r.gamma) << ',' << format_double(r.bic) << ',' << r.nnz_theta << ',' << r.nnz_psi << ','
        << r.reason << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ksgl

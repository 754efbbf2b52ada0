#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ksgl/core.hpp"
#include "ksgl/solver.hpp"

namespace ksgl {

constexpr double kEdgeThreshold = 1e-8;

struct SupportScore {
  double precision = 1.0;  // 1 for an empty estimate
  double recall = 0.0;
  std::size_t true_positive = 0;
  std::size_t estimated = 0;
  std::size_t truth = 0;
};

// Pooled upper-triangle off-diagonal supports of both factors.
SupportScore support_score(const Matrix& est_theta, const Matrix& est_psi, const Matrix& true_theta,
                           const Matrix& true_psi, double threshold = kEdgeThreshold);

// Fraction of candidate off-diagonal pairs that are true edges; the
// precision of a random guess.
double edge_density(const Matrix& true_theta, const Matrix& true_psi);

struct GridFit {
  double gamma = 0.0;
  std::optional<FitResult> fit;
  std::string error;  // set when the fit threw
};

// One fit per gamma with gamma_theta = gamma_psi = gamma, using up to `jobs`
// worker threads. Results are in grid order and independent of `jobs`.
std::vector<GridFit> fit_grid(const SampleStats& stats, const std::vector<double>& grid,
                              const SolverConfig& cfg_base, int jobs = 1);

struct PRPoint {
  double gamma = 0.0;
  double precision = 1.0;
  double recall = 0.0;
  std::size_t nnz_theta = 0;  // upper-triangle edges
  std::size_t nnz_psi = 0;
  std::string error;
};

std::vector<PRPoint> pr_points(const std::vector<GridFit>& fits, const Matrix& true_theta,
                               const Matrix& true_psi);

std::vector<PRPoint> pr_curve(const SampleStats& stats, const Matrix& true_theta, const Matrix& true_psi,
                              const std::vector<double>& gamma_grid, const SolverConfig& cfg_base,
                              int jobs = 1);

// Area under precision(recall), with the curve closed at recall 0 by the
// lowest-recall point and at recall 1 by the random-guess precision.
double pr_auc(std::vector<PRPoint> points, double baseline_precision);

double bic(const SampleStats& stats, const KsModel& model);

// Both models are moved to the same trace ratio before differencing.
double error_norm(const KsModel& model, const KsModel& reference, double rho);

// Log-spaced grid from hi down to lo.
std::vector<double> log_grid(double hi, double lo, int count);

// Largest off-diagonal |S_ij| or |T_ij|; above it every estimate is diagonal.
double max_offdiag_stat(const SampleStats& stats);

struct ConvergenceRun {
  FitResult result;
  std::vector<double> errors;  // error_norm after each outer iteration
  std::vector<double> f;       // objective after each outer iteration
};

ConvergenceRun convergence_run(const SampleStats& stats, const SolverConfig& cfg, const KsModel& reference);

// Least-squares slope of log e[t+1] against log e[t].
double loglog_slope(const std::vector<double>& e);
// exp of the least-squares slope of log e[t] against t.
double geometric_ratio(const std::vector<double>& e);

void write_trace_csv(const std::filesystem::path& path, const SolverTrace& trace, bool include_time);
void write_pr_csv(const std::filesystem::path& path, const std::vector<PRPoint>& points);

struct BicRow {
  double gamma = 0.0;
  double bic = 0.0;
  std::size_t nnz_theta = 0;
  std::size_t nnz_psi = 0;
  std::string reason;
};
void write_bic_csv(const std::filesystem::path& path, const std::vector<BicRow>& rows);

}  // namespace ksgl

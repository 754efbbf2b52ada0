#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ksgl/core.hpp"
#include "ksgl/hessian.hpp"

namespace ksgl {

using Rng = std::mt19937_64;

// Inner coordinate-descent sweeps for outer iteration t (0-based).
using SweepSchedule = std::function<int(int)>;

SweepSchedule default_sweep_schedule();
SweepSchedule constant_sweep_schedule(int sweeps);

struct SolverConfig {
  double gamma_theta = 0.1;
  double gamma_psi = 0.1;
  int k_trunc = 1;              // 0 = exact Hessian
  std::optional<double> rho;    // trace ratio tr(psi)/tr(theta); default q/p
  double epsilon = 1e-3;
  int consecutive_required = 3;
  int max_newton_iters = 100;
  double sigma = 1e-3;
  double beta = 0.5;
  int max_backtracks = 40;
  SweepSchedule sweep_schedule = default_sweep_schedule();
  std::uint64_t rng_seed = 0;
  bool screening = false;
  // Re-applies the trace-ratio adjustment after every accepted step instead
  // of once at the end. Used to check that both give the same estimate.
  bool adjust_every_iteration = false;

  Penalty penalty() const { return {gamma_theta, gamma_psi}; }
  double trace_ratio(Eigen::Index p, Eigen::Index q) const;
  void validate() const;
};

struct DirectionPair {
  Matrix theta;
  Matrix psi;

  double max_abs() const;
};

struct Coordinate {
  int i = 0;
  int j = 0;  // i <= j
};

struct ActiveSets {
  std::vector<Coordinate> theta;
  std::vector<Coordinate> psi;
};

// Entries fixed at zero because their endpoints fall in different
// components of the thresholded sample covariance.
struct Screening {
  std::vector<int> theta_component;  // component id per feature
  std::vector<int> psi_component;    // component id per sample
  int theta_blocks = 0;
  int psi_blocks = 0;

  bool theta_fixed(int i, int j) const { return theta_component[i] != theta_component[j]; }
  bool psi_fixed(int i, int j) const { return psi_component[i] != psi_component[j]; }
};

struct TraceRecord {
  int iter = 0;
  double f = 0.0;
  double g = 0.0;
  double h = 0.0;
  double alpha = 0.0;
  std::size_t active_theta = 0;
  std::size_t active_psi = 0;
  int backtracks = 0;
  double seconds = 0.0;
};

// Record 0 is the starting point; record t is after outer iteration t.
struct SolverTrace {
  std::vector<TraceRecord> records;
};

enum class StopReason { converged, max_iterations };

struct FitResult {
  KsModel model;
  SolverTrace trace;
  StopReason reason = StopReason::max_iterations;
  ObjectiveValue final_objective;
  int iterations = 0;
};

struct LineSearchResult {
  double alpha = 0.0;
  ObjectiveValue objective;
  EigenSystem eig_theta;
  EigenSystem eig_psi;
  int backtracks = 0;
  double delta = 0.0;
  // The direction's predicted decrease was below the objective's rounding
  // level and no trial step passed; the caller keeps the current point.
  bool stalled = false;
};

struct NewtonStep {
  KsModel next;
  ObjectiveValue objective;
  DirectionPair direction;
  ActiveSets active;
  double alpha = 0.0;
  double delta = 0.0;
  int backtracks = 0;
  bool zero_step = false;
};

// Off-diagonal pairs (i<j) that are nonzero or violate the zero subgradient
// condition, plus every diagonal entry. Entries fixed by screening are left out.
ActiveSets detect_active_sets(const KsModel& model, const Gradient& grad, const SolverConfig& cfg,
                              const Screening* screening = nullptr);

Screening screen_blocks(const SampleStats& stats, const SolverConfig& cfg);

// Connected components of the graph with an edge wherever |m_ij| > threshold.
std::vector<int> threshold_components(const Matrix& m, double threshold, int* count = nullptr);

// Coordinate descent on the l1-regularized quadratic model around the
// current point. Penalty weights are the per-entry values q*gamma_theta and
// p*gamma_psi.
DirectionPair cd_direction(const KsModel& model, const Gradient& grad, const HessianRep& hess,
                           const ActiveSets& active, const Penalty& gamma, int sweeps, Rng& rng);

// Value of the quadratic model plus penalty at direction d, minus the
// penalty at the current point.
double quadratic_model(const KsModel& model, const Gradient& grad, const HessianRep& hess,
                       const DirectionPair& d, const Penalty& gamma);

// Predicted decrease tr(D_theta G_theta) + tr(D_psi G_psi) + h(x + D) - h(x).
double predicted_decrease(const KsModel& model, const Gradient& grad, const DirectionPair& d,
                          const Penalty& gamma);

LineSearchResult line_search(const KsModel& model, const SampleStats& stats, const DirectionPair& d,
                             const Gradient& grad, const ObjectiveValue& current, const SolverConfig& cfg);

NewtonStep newton_step(const SampleStats& stats, const KsModel& model, const ObjectiveValue& current,
                       const SolverConfig& cfg, int iter, Rng& rng, const Screening* screening = nullptr);

bool check_convergence(const SolverTrace& trace, const SolverConfig& cfg);

// Called after every outer iteration with the iteration index and the
// current (unadjusted unless adjust_every_iteration) model.
using IterationObserver = std::function<void(int, const KsModel&)>;

FitResult fit(const SampleStats& stats, const SolverConfig& cfg, const IterationObserver& observer = {});

const char* to_string(StopReason r);

}  // namespace ksgl

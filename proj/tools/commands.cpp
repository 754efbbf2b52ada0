#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cli.hpp"
#include "ksgl/csv.hpp"
#include "ksgl/evaluate.hpp"
#include "manifest.hpp"

namespace ksgl::cli {

namespace fs = std::filesystem;

void SolverFlags::add_to(CLI::App& app) {
  app.add_option("--gamma", gamma, "Regularization for both factors")->check(CLI::PositiveNumber);
  app.add_option("--gamma-theta", gamma_theta, "Feature-graph regularization (default 0.1)")
      ->check(CLI::PositiveNumber);
  app.add_option("--gamma-psi", gamma_psi, "Sample-graph regularization (default: gamma-theta)")
      ->check(CLI::PositiveNumber);
  app.add_option("--k", k, "Hessian truncation; 0 = exact Hessian")->check(CLI::NonNegativeNumber);
  app.add_option("--rho", rho, "Trace ratio tr(psi)/tr(theta) of the reported estimate (default q/p)")
      ->check(CLI::PositiveNumber);
  app.add_option("--eps", eps, "Relative objective-change tolerance")->check(CLI::PositiveNumber);
  app.add_option("--max-iters", max_iters, "Newton iteration limit")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Seed for the coordinate visiting order");
  app.add_flag("--screening", screening, "Fix entries across thresholded covariance blocks at zero");
  app.add_option("--sweeps", sweeps, "Constant inner sweeps per iteration instead of the growing default")
      ->check(CLI::PositiveNumber);
}

SolverConfig SolverFlags::config() const {
  SolverConfig cfg;
  const double base = gamma.value_or(0.1);
  cfg.gamma_theta = gamma_theta.value_or(base);
  cfg.gamma_psi = gamma_psi.value_or(gamma_theta.value_or(base));
  cfg.k_trunc = k;
  cfg.rho = rho;
  cfg.epsilon = eps;
  cfg.max_newton_iters = max_iters;
  cfg.rng_seed = seed;
  cfg.screening = screening;
  if (sweeps) cfg.sweep_schedule = constant_sweep_schedule(*sweeps);
  return cfg;
}

namespace {

void prepare_out(const fs::path& out) {
  if (out.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + out.string());
}

SampleStats load_stats(const std::vector<fs::path>& paths, Manifest& manifest) {
  if (paths.empty()) throw UsageError("at least one --data file is required");
  std::vector<Matrix> data;
  for (const fs::path& p : paths) {
    manifest.add_input(p);
    data.push_back(read_matrix_csv(p));
    if (data.back().rows() != data.front().rows() || data.back().cols() != data.front().cols()) {
      throw UsageError("data file " + p.string() + " has dimensions " + std::to_string(data.back().rows()) + "x" +
                       std::to_string(data.back().cols()) + ", expected " + std::to_string(data.front().rows()) +
                       "x" + std::to_string(data.front().cols()));
    }
  }
  return sample_stats(data);
}

void validate_config(const SolverConfig& cfg, const SampleStats& stats) {
  try {
    cfg.validate();
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  if (cfg.k_trunc > std::min(stats.p(), stats.q())) {
    throw UsageError("--k must not exceed min(p, q) = " + std::to_string(std::min(stats.p(), stats.q())));
  }
}

std::string data_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "data_%03d.csv", i);
  return buf;
}

std::size_t upper_nnz(const Matrix& m) { return offdiag_nnz(m, kEdgeThreshold) / 2; }

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

// NaN is not representable in JSON.
nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

int run_simulate(const SimulateArgs& a, const std::vector<std::string>& argv) {
  GraphKind kind;
  try {
    kind = parse_graph_kind(a.kind);
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  if (a.out.empty()) throw UsageError("--out is required");
  const int p = a.p, q = a.q.value_or(a.p);
  if (p < 1 || q < 1) throw UsageError("--p and --q must be positive");
  if (a.n < 1) throw UsageError("--n must be positive");
  GraphSpec st{kind, p, 0, 5, a.seed}, sp{kind, q, 0, 5, a.seed};
  if (kind == GraphKind::random) {
    if (a.blocks) throw UsageError("--blocks applies to clustered graphs only");
    st.target_nnz = a.nnz.value_or(10 * p);
    sp.target_nnz = a.nnz_psi.value_or(static_cast<int>(std::lround(static_cast<double>(st.target_nnz) * q / p)));
  } else {
    if (a.nnz || a.nnz_psi) throw UsageError("--nnz applies to random graphs only");
    st.num_blocks = sp.num_blocks = a.blocks.value_or(5);
  }
  try {
    st.validate();
    sp.validate();
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  prepare_out(a.out);

  Manifest manifest("simulate", a.out, argv);
  Rng rng(a.seed);
  const Matrix theta = gen_graph(st, rng);
  const Matrix psi = gen_graph(sp, rng);
  const std::vector<Matrix> data = sample_data(KsModel(theta, psi), a.n, rng);

  write_matrix_csv(a.out / "theta_true.csv", theta);
  write_matrix_csv(a.out / "psi_true.csv", psi);
  manifest.add_artifact("theta_true.csv");
  manifest.add_artifact("psi_true.csv");
  for (int i = 0; i < a.n; ++i) {
    write_matrix_csv(a.out / data_name(i), data[static_cast<std::size_t>(i)]);
    manifest.add_artifact(data_name(i));
  }
  std::map<std::string, std::string> meta{{"kind", to_string(kind)},
                                          {"p", std::to_string(p)},
                                          {"q", std::to_string(q)},
                                          {"n", std::to_string(a.n)},
                                          {"seed", std::to_string(a.seed)}};
  if (kind == GraphKind::random) {
    meta["target_nnz"] = std::to_string(st.target_nnz);
    meta["target_nnz_psi"] = std::to_string(sp.target_nnz);
  } else {
    meta["blocks"] = std::to_string(st.num_blocks);
  }
  write_key_values(a.out / "metadata.txt", meta);
  manifest.add_artifact("metadata.txt");
  manifest.fields()["seeds"] = {{"generator", a.seed}};
  manifest.fields()["graph"] = meta;
  manifest.write(kOk);
  return kOk;
}

int run_estimate(const EstimateArgs& a, const std::vector<std::string>& argv) {
  if (a.out.empty()) throw UsageError("--out is required");
  Manifest manifest("estimate", a.out, argv);
  const SampleStats stats = load_stats(a.data, manifest);
  const SolverConfig cfg = a.solver.config();
  validate_config(cfg, stats);
  prepare_out(a.out);
  manifest.fields()["config"] = config_json(cfg, a.solver.sweeps);
  manifest.fields()["seeds"] = {{"solver", cfg.rng_seed}};
  manifest.fields()["dimensions"] = {{"p", stats.p()}, {"q", stats.q()}, {"n", stats.n}};

  FitResult r = [&] {
    try {
      return fit(stats, cfg);
    } catch (const NumericalError& e) {
      manifest.fail("numerical", e.what());
      manifest.write(kNumerical);
      throw;
    }
  }();
  write_matrix_csv(a.out / "theta_hat.csv", r.model.theta());
  write_matrix_csv(a.out / "psi_hat.csv", r.model.psi());
  write_trace_csv(a.out / "trace.csv", r.trace, a.record_time);
  for (const char* f : {"theta_hat.csv", "psi_hat.csv", "trace.csv"}) manifest.add_artifact(f);
  const int code = r.reason == StopReason::converged ? kOk : kMaxIterations;
  manifest.fields()["result"] = {{"termination", to_string(r.reason)},
                                 {"iterations", r.iterations},
                                 {"objective", r.final_objective.f},
                                 {"nnz_theta", upper_nnz(r.model.theta())},
                                 {"nnz_psi", upper_nnz(r.model.psi())}};
  manifest.write(code);
  if (code == kMaxIterations) {
    std::cerr << "ksgl estimate: no convergence after " << r.iterations << " iterations; estimates written\n";
  }
  return code;
}

int run_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  if (a.out.empty()) throw UsageError("--out is required");
  if (a.truth_theta.has_value() != a.truth_psi.has_value()) {
    throw UsageError("--truth-theta and --truth-psi must be given together");
  }
  if (a.gamma_grid.empty() && !a.grid_count) throw UsageError("empty regularization grid");
  if (!a.gamma_grid.empty() && a.grid_count) throw UsageError("give either --gamma-grid or --grid-count");
  if (a.jobs < 1) throw UsageError("--jobs must be positive");
  if (!(a.grid_min_ratio > 0.0 && a.grid_min_ratio <= 1.0)) throw UsageError("--grid-min-ratio must lie in (0, 1]");

  Manifest manifest("eval", a.out, argv);
  const SampleStats stats = load_stats(a.data, manifest);
  const SolverConfig cfg = a.solver.config();
  validate_config(cfg, stats);

  std::optional<Matrix> truth_theta, truth_psi;
  if (a.truth_theta) {
    manifest.add_input(*a.truth_theta);
    manifest.add_input(*a.truth_psi);
    truth_theta = read_matrix_csv(*a.truth_theta);
    truth_psi = read_matrix_csv(*a.truth_psi);
    if (truth_theta->rows() != stats.p() || truth_theta->cols() != stats.p() || truth_psi->rows() != stats.q() ||
        truth_psi->cols() != stats.q()) {
      throw UsageError("truth dimensions do not match the data");
    }
  }
  std::vector<double> grid = a.gamma_grid;
  if (a.grid_count) {
    if (*a.grid_count < 1) throw UsageError("--grid-count must be positive");
    const double top = max_offdiag_stat(stats);
    if (!(top > 0.0)) throw UsageError("data has no off-diagonal covariance; cannot build an automatic grid");
    grid = log_grid(top, a.grid_min_ratio * top, *a.grid_count);
  }
  for (double g : grid)
    if (!(g > 0.0)) throw UsageError("grid values must be positive");
  prepare_out(a.out);

  const std::vector<GridFit> fits = fit_grid(stats, grid, cfg, a.jobs);

  std::vector<BicRow> rows;
  std::optional<std::size_t> best;
  nlohmann::json reasons = nlohmann::json::array();
  for (std::size_t i = 0; i < fits.size(); ++i) {
    BicRow row;
    row.gamma = fits[i].gamma;
    if (fits[i].fit) {
      const FitResult& f = *fits[i].fit;
      row.bic = bic(stats, f.model);
      row.nnz_theta = upper_nnz(f.model.theta());
      row.nnz_psi = upper_nnz(f.model.psi());
      row.reason = to_string(f.reason);
      if (!best || row.bic < rows[*best].bic) best = i;
    } else {
      row.bic = std::nan("");
      row.reason = "fit_failed";
    }
    reasons.push_back({{"gamma", row.gamma}, {"termination", row.reason}, {"error", fits[i].error}});
    rows.push_back(row);
  }
  write_bic_csv(a.out / "bic.csv", rows);
  manifest.add_artifact("bic.csv");

  nlohmann::json summary;
  summary["config"] = config_json(cfg, a.solver.sweeps);
  summary["grid"] = grid;
  summary["seeds"] = {{"solver", cfg.rng_seed}};
  summary["fits"] = reasons;
  if (best) {
    const FitResult& f = *fits[*best].fit;
    write_matrix_csv(a.out / "theta_hat.csv", f.model.theta());
    write_matrix_csv(a.out / "psi_hat.csv", f.model.psi());
    manifest.add_artifact("theta_hat.csv");
    manifest.add_artifact("psi_hat.csv");
    summary["best"] = {{"gamma", fits[*best].gamma}, {"bic", rows[*best].bic}};
  }
  if (truth_theta) {
    const std::vector<PRPoint> pts = pr_points(fits, *truth_theta, *truth_psi);
    write_pr_csv(a.out / "pr_curve.csv", pts);
    manifest.add_artifact("pr_curve.csv");
    const double base = edge_density(*truth_theta, *truth_psi);
    summary["pr"] = {{"auc", pr_auc(pts, base)}, {"baseline_precision", base}};
    if (best) {
      summary["best"]["precision"] = number_or_null(pts[*best].precision);
      summary["best"]["recall"] = number_or_null(pts[*best].recall);
    }
  }
  write_json(a.out / "summary.json", summary);
  manifest.add_artifact("summary.json");
  manifest.fields()["config"] = summary["config"];
  manifest.fields()["seeds"] = summary["seeds"];
  const int code = best ? kOk : kNumerical;
  if (!best) manifest.fail("numerical", "every grid fit failed");
  manifest.write(code);
  return code;
}

}  // namespace ksgl::cli

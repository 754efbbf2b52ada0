#include <iostream>

#include "CLI11.hpp"
#include "cli.hpp"

using namespace ksgl::cli;

namespace {

template <class Fn>
int guarded(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    std::cerr << "ksgl " << name << ": " << e.what() << "\n";
    return kUsage;
  } catch (const ksgl::InputError& e) {
    std::cerr << "ksgl " << name << ": invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const ksgl::IoError& e) {
    std::cerr << "ksgl " << name << ": i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const ksgl::Error& e) {
    std::cerr << "ksgl " << name << ": numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Sparse Kronecker-sum graphical model estimation"};
  app.require_subcommand(1);

  SimulateArgs sim;
  std::string sim_config;
  CLI::App* s = app.add_subcommand("simulate", "Draw ground-truth graphs and matrix-variate samples");
  s->add_option("--config", sim_config, "key=value file with defaults for any flag");
  s->add_option("--kind", sim.kind, "random or clustered");
  s->add_option("--p", sim.p, "Number of features (columns)");
  s->add_option("--q", sim.q, "Number of samples per observation (rows); default p");
  s->add_option("--nnz", sim.nnz, "Target nonzeros of theta, diagonal included (random kind; default 10p)");
  s->add_option("--nnz-psi", sim.nnz_psi, "Target nonzeros of psi (random kind; default nnz*q/p)");
  s->add_option("--blocks", sim.blocks, "Number of blocks (clustered kind; default 5)");
  s->add_option("--n", sim.n, "Number of observations");
  s->add_option("--seed", sim.seed, "Generator seed");
  s->add_option("--out", sim.out, "Output directory");

  EstimateArgs est;
  std::string est_config;
  CLI::App* e = app.add_subcommand("estimate", "Fit theta and psi to data");
  e->add_option("--config", est_config, "key=value file with defaults for any flag");
  e->add_option("--data", est.data, "Observation CSV (q x p); repeatable");
  est.solver.add_to(*e);
  e->add_flag("--record-time", est.record_time, "Write wall-clock seconds into trace.csv (otherwise 0)");
  e->add_option("--out", est.out, "Output directory");

  EvalArgs ev;
  std::string ev_config;
  CLI::App* v = app.add_subcommand("eval", "Fit over a regularization grid; BIC selection and PR curve");
  v->add_option("--config", ev_config, "key=value file with defaults for any flag");
  v->add_option("--data", ev.data, "Observation CSV (q x p); repeatable");
  v->add_option("--truth-theta", ev.truth_theta, "True theta CSV, enables the PR curve");
  v->add_option("--truth-psi", ev.truth_psi, "True psi CSV");
  v->add_option("--gamma-grid", ev.gamma_grid, "Comma-separated gamma values (gamma_theta = gamma_psi)")
      ->delimiter(',');
  v->add_option("--grid-count", ev.grid_count, "Log grid from the largest off-diagonal statistic downwards");
  v->add_option("--grid-min-ratio", ev.grid_min_ratio, "Smallest grid value relative to the largest (default 0.05)");
  ev.solver.add_to(*v);
  v->add_option("--jobs", ev.jobs, "Worker threads for grid fits");
  v->add_option("--out", ev.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  auto with_config = [](CLI::App& sub, const std::string& path) {
    if (!path.empty()) apply_config_file(sub, path);
  };
  if (s->parsed()) return guarded("simulate", [&] { with_config(*s, sim_config); return run_simulate(sim, args); });
  if (e->parsed()) return guarded("estimate", [&] { with_config(*e, est_config); return run_estimate(est, args); });
  return guarded("eval", [&] { with_config(*v, ev_config); return run_eval(ev, args); });
}

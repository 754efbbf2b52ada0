#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ksgl/simulate.hpp"
#include "ksgl/solver.hpp"

namespace CLI {
class App;
}

namespace ksgl::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kMaxIterations = 4,
  kNumerical = 5,
};

// Bad flag values or combinations detected after parsing.
struct UsageError : Error {
  using Error::Error;
};

// Solver flags shared by estimate and eval.
struct SolverFlags {
  std::optional<double> gamma;
  std::optional<double> gamma_theta;
  std::optional<double> gamma_psi;
  int k = 1;
  std::optional<double> rho;
  double eps = 1e-3;
  int max_iters = 100;
  std::uint64_t seed = 0;
  bool screening = false;
  std::optional<int> sweeps;

  void add_to(CLI::App& app);
  SolverConfig config() const;
};

struct SimulateArgs {
  std::string kind = "random";
  int p = 0;
  std::optional<int> q;
  std::optional<int> nnz;
  std::optional<int> nnz_psi;
  std::optional<int> blocks;
  int n = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

struct EstimateArgs {
  std::vector<std::filesystem::path> data;
  SolverFlags solver;
  bool record_time = false;
  std::filesystem::path out;
};

struct EvalArgs {
  std::vector<std::filesystem::path> data;
  std::optional<std::filesystem::path> truth_theta;
  std::optional<std::filesystem::path> truth_psi;
  std::vector<double> gamma_grid;
  std::optional<int> grid_count;
  double grid_min_ratio = 0.05;
  SolverFlags solver;
  int jobs = 1;
  std::filesystem::path out;
};

int run_simulate(const SimulateArgs& args, const std::vector<std::string>& argv);
int run_estimate(const EstimateArgs& args, const std::vector<std::string>& argv);
int run_eval(const EvalArgs& args, const std::vector<std::string>& argv);

// Fills options of `app` that were not given on the command line from a
// key=value file. Keys are long option names without the leading dashes;
// repeatable options take whitespace-separated values.
void apply_config_file(CLI::App& app, const std::filesystem::path& path);

}  // namespace ksgl::cli

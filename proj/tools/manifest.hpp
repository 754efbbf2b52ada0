#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ksgl/solver.hpp"

namespace ksgl::cli {

std::string sha256_file(const std::filesystem::path& path);
std::string utc_timestamp();
nlohmann::json config_json(const SolverConfig& cfg, std::optional<int> constant_sweeps);

// manifest.json for one output directory. Artifacts are checksummed when
// the manifest is written.
class Manifest {
 public:
  Manifest(std::string command, std::filesystem::path out_dir, const std::vector<std::string>& argv);

  void add_input(const std::filesystem::path& p);
  void add_artifact(const std::string& name);
  nlohmann::json& fields() { return extra_; }
  void fail(const std::string& kind, const std::string& message);

  // Writes <out_dir>/manifest.json, replacing any previous one.
  void write(int exit_code);

 private:
  std::string command_;
  std::filesystem::path out_dir_;
  std::vector<std::string> argv_;
  std::vector<std::string> inputs_;
  std::vector<std::string> artifacts_;
  std::string started_;
  nlohmann::json extra_ = nlohmann::json::object();
};

}  // namespace ksgl::cli

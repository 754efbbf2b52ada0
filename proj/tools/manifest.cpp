#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include "ksgl/errors.hpp"

namespace ksgl::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for checksumming");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 init failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json config_json(const SolverConfig& cfg, std::optional<int> constant_sweeps) {
  nlohmann::json j;
  j["gamma_theta"] = cfg.gamma_theta;
  j["gamma_psi"] = cfg.gamma_psi;
  j["k_trunc"] = cfg.k_trunc;
  j["rho"] = cfg.rho ? nlohmann::json(*cfg.rho) : nlohmann::json("q/p");
  j["epsilon"] = cfg.epsilon;
  j["consecutive_required"] = cfg.consecutive_required;
  j["max_newton_iters"] = cfg.max_newton_iters;
  j["sigma"] = cfg.sigma;
  j["beta"] = cfg.beta;
  j["max_backtracks"] = cfg.max_backtracks;
  j["sweep_schedule"] = constant_sweeps ? "constant:" + std::to_string(*constant_sweeps) : "min(1+floor(t/3),20)";
  j["rng_seed"] = cfg.rng_seed;
  j["screening"] = cfg.screening;
  return j;
}

Manifest::Manifest(std::string command, std::filesystem::path out_dir, const std::vector<std::string>& argv)
    : command_(std::move(command)), out_dir_(std::move(out_dir)), argv_(argv), started_(utc_timestamp()) {}

void Manifest::add_input(const std::filesystem::path& p) { inputs_.push_back(p.string()); }

void Manifest::add_artifact(const std::string& name) { artifacts_.push_back(name); }

void Manifest::fail(const std::string& kind, const std::string& message) {
  extra_["diagnostics"] = {{"error", kind}, {"message", message}};
}

void Manifest::write(int exit_code) {
  nlohmann::json j;
  j["command"] = command_;
  j["argv"] = argv_;
  j["output_dir"] = out_dir_.string();
  nlohmann::json inputs = nlohmann::json::array();
  for (const std::string& p : inputs_) {
    std::error_code ec;
    inputs.push_back({{"path", p}, {"sha256", std::filesystem::exists(p, ec) ? sha256_file(p) : ""}});
  }
  j["inputs"] = inputs;
  nlohmann::json arts = nlohmann::json::object();
  for (const std::string& a : artifacts_) arts[a] = sha256_file(out_dir_ / a);
  j["artifacts"] = arts;
  j["started_at"] = started_;
  j["finished_at"] = utc_timestamp();
  j["exit_code"] = exit_code;
  j.update(extra_);
  std::ofstream out(out_dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + (out_dir_ / "manifest.json").string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for manifest.json");
}

}  // namespace ksgl::cli

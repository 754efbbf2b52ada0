#include <sstream>

#include "CLI11.hpp"
#include "cli.hpp"
#include "ksgl/csv.hpp"

namespace ksgl::cli {

void apply_config_file(CLI::App& app, const std::filesystem::path& path) {
  for (const auto& [key, value] : read_key_values(path)) {
    if (key == "config") throw UsageError(path.string() + ": config files cannot nest");
    CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (!opt) throw UsageError(path.string() + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;  // command line wins
    std::istringstream words(value);
    std::string w;
    int added = 0;
    while (words >> w) {
      opt->add_result(w);
      ++added;
    }
    if (added == 0) throw UsageError(path.string() + ": empty value for '" + key + "'");
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(path.string() + ": " + e.what());
    }
  }
}

}  // namespace ksgl::cli

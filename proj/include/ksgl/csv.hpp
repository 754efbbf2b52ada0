#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "ksgl/core.hpp"

namespace ksgl {

// Headerless comma-separated numeric matrices, one row per line. Numbers are
// written in shortest round-trip form independent of the locale.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

std::string format_double(double v);

// key=value files: '#' starts a comment, blank lines are skipped.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);
void write_key_values(const std::filesystem::path& path, const std::map<std::string, std::string>& kv);

}  // namespace ksgl

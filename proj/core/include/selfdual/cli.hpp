#pragma once

#include "selfdual/calculus.hpp"
#include "selfdual/inverse.hpp"
#include "selfdual/io.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfdual::cli {

/// Config problem at a JSON location. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& what, int line = 0)
      : std::runtime_error(what), pointer_(std::move(pointer)), line_(line) {}
  const std::string& pointer() const { return pointer_; }
  int line() const { return line_; }
  /// "source:line: pointer: message"
  std::string format(const std::string& source) const;

 private:
  std::string pointer_;
  int line_;
};

const std::vector<std::string>& commands();

struct ExperimentConfig {
  std::string command;
  nlohmann::json problem = nlohmann::json::object();
  std::string report_path;  // stdout when empty
  std::string csv_path;     // no CSV when empty
  nlohmann::json tolerances = nlohmann::json::object();
  std::uint64_t seed = kDefaultSeed;
  std::string source = "<config>";
  std::string text;  // raw config, for error lines
};

/// Parses a config document. The command given on the command line wins over the one in the file.
/// Throws ConfigError with the line of the offending entry.
ExperimentConfig parse_config(const std::string& text, const std::string& source, const std::string& command = "");
ExperimentConfig load_config(const std::string& path, const std::string& command = "");

/// 1-based line of the value at a JSON pointer in text, 0 if not found.
int line_of(const std::string& text, const std::string& pointer);

// Builders from config JSON; `at` is the JSON pointer of j, used in errors.
ConvexFunction build_function(const nlohmann::json& j, const std::string& at);
MonotoneOperator build_operator(const nlohmann::json& j, const std::string& at);
Lagrangian build_lagrangian(const nlohmann::json& j, const std::string& at);
/// Number (constant), array (values at the nodes) or {constant, poly, sine} on a mesh.
Vec build_mesh_data(const nlohmann::json& j, const std::string& at, const Mesh1D& mesh);

/// Built-in operators, Lagrangian forms and functions with their parameters.
nlohmann::json catalog();

struct Outcome {
  int exit_code = 0;
  nlohmann::json report;
  std::optional<CsvTable> csv;
};

/// Runs the command of a parsed config without touching the file system.
/// Library errors of the invalid-input kinds become ConfigError; the others give exit 1
/// with the error in the report.
Outcome execute(const ExperimentConfig& cfg);

/// execute() plus output files. Returns 0 if every certificate met its tolerance, 1 otherwise,
/// 2 on invalid input (nothing written).
int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

/// Seed from the SELFdual_SEED environment variable, if set and valid.
std::optional<std::uint64_t> seed_from_env();

}  // namespace selfdual::cli

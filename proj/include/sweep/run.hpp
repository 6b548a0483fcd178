#pragma once

// Config-driven execution of solvers and experiments with JSON/CSV reports.
//
// A config is a JSON object:
//
//   {
//     "schema_version": 1,
//     "command": "balayage",            // optional when given on the command line
//     "instance": { ...InstanceSpec... }, // or "kernel" (+ "omega") or "kernel_csv"
//     "omega": [...], "A": [...],        // optional overrides
//     "tol": 1e-8,
//     ...command-specific keys...
//   }
//
// Reports are deterministic; wall-clock data goes to a meta.json sidecar.

#include <sweep/experiments.hpp>
#include <sweep/instances.hpp>
#include <sweep/io.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sweep::cli {

using io::json;

inline constexpr int kSchemaVersion = 1;

enum class Command {
  Balayage,
  Gauss,
  Capacity,
  Solvability,
  ConvergeUp,
  ConvergeDown,
  Thinness,
  Scan,
  Ugaheri,
  Verify,
};

std::string to_string(Command c);
std::optional<Command> command_from_string(const std::string& s);

enum ExitCode : int {
  kExitOk = 0,
  kExitViolation = 2,
  kExitSolver = 3,
  kExitConfig = 4,
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Kernel, charge and node set resolved from a config.
struct Problem {
  KernelMatrix kernel;
  Measure omega;
  SupportSet a;
  std::optional<InstanceSpec> spec;
  std::optional<Matrix> points;
  /// Ugaheri constant when the kernel is a known Riesz or logarithmic kernel.
  std::optional<double> h;
};

struct RunConfig {
  Command command = Command::Balayage;
  json document;
  double tol = kSolverTol;
  std::optional<std::filesystem::path> out;
  bool summary = false;
  /// Directory used to resolve relative paths inside the config.
  std::filesystem::path base_dir = ".";
};

/// Parses and validates; throws ConfigError naming the offending path.
RunConfig parse_config(const json& document, std::optional<Command> command = std::nullopt);
RunConfig load_config(const std::filesystem::path& file, std::optional<Command> command = std::nullopt);

Problem resolve_problem(const RunConfig& config);

/// FNV-1a 64 over the canonical serialization, as 16 hex digits.
std::string config_hash(const json& document);

struct Check {
  std::string name;
  bool passed = true;
  double value = 0.0;
  double limit = 0.0;
};

struct RunOutcome {
  int exit_code = kExitOk;
  json report;
  std::vector<Check> checks;
  std::string message;
  /// Flat CSV companion, empty when the command defines none.
  std::string csv;
};

/// Executes the command. Never throws: errors become exit codes and a message.
RunOutcome run(const RunConfig& config);

/// Writes report.json, report.csv (when present) and meta.json into `dir`.
void write_artifacts(const std::filesystem::path& dir, const RunConfig& config, const RunOutcome& outcome,
                     const std::string& started, const std::string& finished);

/// Throws ConfigError when `report` does not match the report schema.
void validate_report(const json& report);

/// One line per check plus the headline.
std::string summary_text(const RunOutcome& outcome);

/// Runs the invariant suite over every *.json fixture in `dir`.
RunOutcome verify(const std::filesystem::path& dir, double tol = kSolverTol);

/// Directory of the bundled fixtures.
std::filesystem::path default_fixture_dir();

}  // namespace sweep::cli

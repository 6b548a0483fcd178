// sweep: command-line front end for the pseudo-balayage and Gauss solvers.

#include <sweep/run.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iostream>

namespace {

using namespace sweep;
using namespace sweep::cli;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Flags {
  std::string config;
  std::optional<double> tol;
  std::string out;
  bool summary = false;
  std::string fixtures;
};

int emit(const RunConfig& config, const RunOutcome& outcome, const Flags& flags, const std::string& started) {
  try {
    if (!flags.out.empty()) {
      write_artifacts(flags.out, config, outcome, started, utc_now());
    } else {
      std::cout << outcome.report.dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (flags.summary) {
    std::cerr << summary_text(outcome);
  } else {
    std::cerr << outcome.report.value("command", std::string()) << ": " << outcome.report.value("status", std::string());
    if (!outcome.message.empty()) std::cerr << " - " << outcome.message;
    std::cerr << '\n';
  }
  return outcome.exit_code;
}

int run_command(Command command, const Flags& flags) {
  const std::string started = utc_now();
  RunConfig config;
  try {
    config = load_config(flags.config, command);
    if (flags.tol) {
      if (!(*flags.tol > 0.0)) throw ConfigError("--tol", "must be positive");
      config.tol = *flags.tol;
      config.document["tol"] = *flags.tol;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  config.summary = flags.summary;
  return emit(config, run(config), flags, started);
}

int run_verify(const Flags& flags) {
  const std::string started = utc_now();
  RunConfig config;
  config.command = Command::Verify;
  if (flags.tol) config.tol = *flags.tol;
  const std::filesystem::path dir = flags.fixtures.empty() ? default_fixture_dir() : std::filesystem::path(flags.fixtures);
  config.document = {{"command", "verify"}, {"fixtures", dir.string()}, {"tol", config.tol}};
  return emit(config, verify(dir, config.tol), flags, started);
}

int run_nodes(const Flags& flags) {
  try {
    const RunConfig config = load_config(flags.config, Command::Balayage);
    const Problem p = resolve_problem(config);
    if (!p.points) throw ConfigError("/instance", "node export needs an instance spec");
    const std::filesystem::path dir = flags.out.empty() ? std::filesystem::path(".") : std::filesystem::path(flags.out);
    std::filesystem::create_directories(dir);
    io::write_points_csv(dir / "points.csv", *p.points);
    std::cerr << "wrote " << (dir / "points.csv").string() << " (" << p.points->rows() << " points)\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-balayage and Gauss weighted-energy problems on finite node sets"};
  app.require_subcommand(1);
  Flags flags;
  int status = kExitOk;

  const auto common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", flags.config, "config JSON file");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--tol", flags.tol, "solver tolerance (default 1e-8)");
    sub->add_option("--out", flags.out, "output directory for report.json, report.csv and meta.json");
    sub->add_flag("--summary", flags.summary, "print pass/fail per invariant");
  };

  const std::pair<Command, const char*> commands[] = {
      {Command::Balayage, "inner pseudo-balayage of omega onto A"},
      {Command::Gauss, "Gauss weighted-energy problem on A"},
      {Command::Capacity, "capacitary measure and capacity of A"},
      {Command::Solvability, "solvability of the Gauss problem"},
      {Command::ConvergeUp, "pseudo-balayage along an increasing chain"},
      {Command::ConvergeDown, "pseudo-balayage along a decreasing chain"},
      {Command::Thinness, "thinness-at-infinity series of a shell union"},
      {Command::Scan, "solvability scan over truncations and charge scalings"},
      {Command::Ugaheri, "empirical lower bound for the maximum-principle constant"},
  };
  for (const auto& [command, help] : commands) {
    CLI::App* sub = app.add_subcommand(to_string(command), help);
    common(sub, true);
    sub->callback([&, command = command] { status = run_command(command, flags); });
  }

  CLI::App* verify_cmd = app.add_subcommand("verify", "invariant suite over the bundled fixtures");
  common(verify_cmd, false);
  verify_cmd->add_option("--fixtures", flags.fixtures, "fixture directory (default: bundled)");
  verify_cmd->callback([&] { status = run_verify(flags); });

  CLI::App* nodes_cmd = app.add_subcommand("nodes", "export the generated node set as CSV");
  common(nodes_cmd, true);
  nodes_cmd->callback([&] { status = run_nodes(flags); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  return status;
}

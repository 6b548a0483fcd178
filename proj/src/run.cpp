#include <sweep/parallel.hpp>
#include <sweep/run.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace sweep::cli {

namespace {

constexpr double kViolationFactor = 10.0;
/// Objective agreement with the enumeration oracle, relative to max(1, |value|).
constexpr double kOracleObjectiveTol = 1e-10;
constexpr double kOracleWeightTol = 1e-8;
constexpr double kMassOneTol = 1e-9;
constexpr double kMassOneDistance = 1e-7;
constexpr double kOrderingTol = 1e-10;
constexpr double kExpectedRelTol = 1e-6;
constexpr Index kFixtureOracleLimit = 12;

const std::set<std::string> kConfigKeys = {
    "schema_version", "command", "name",   "description", "instance", "kernel",
    "kernel_csv",     "omega",   "A",      "tol",         "capacity_finite",
    "chain",          "stages",  "truncations", "scalings", "trials",  "seed",
    "ugaheri_h",      "expected"};

struct Commands {
  Command command;
  const char* name;
};

constexpr Commands kCommands[] = {
    {Command::Balayage, "balayage"},        {Command::Gauss, "gauss"},
    {Command::Capacity, "capacity"},        {Command::Solvability, "solvability"},
    {Command::ConvergeUp, "converge-up"},   {Command::ConvergeDown, "converge-down"},
    {Command::Thinness, "thinness"},        {Command::Scan, "scan"},
    {Command::Ugaheri, "ugaheri"},          {Command::Verify, "verify"},
};

double positive_number(const json& doc, const std::string& key, double fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc[key];
  if (!v.is_number() || !(v.get<double>() > 0.0) || !std::isfinite(v.get<double>())) {
    throw ConfigError("/" + key, "expected a positive number");
  }
  return v.get<double>();
}

int positive_int(const json& doc, const std::string& key, int fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc[key];
  if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError("/" + key, "expected a positive integer");
  return v.get<int>();
}

json kkt_json(const qp::KktReport& r) {
  json j{{"stationarity_residual", r.stationarity_residual},
         {"complementarity_residual", r.complementarity_residual},
         {"feasibility_residual", r.feasibility_residual}};
  j["multiplier"] = r.multiplier ? json(*r.multiplier) : json(nullptr);
  return j;
}

json measure_json(const Measure& mu) { return io::measure_to_json(mu); }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

class Checks {
 public:
  /// Passes when value <= limit.
  void at_most(const std::string& name, double value, double limit) {
    list.push_back({name, value <= limit, value, limit});
  }
  void holds(const std::string& name, bool ok) { list.push_back({name, ok, ok ? 0.0 : 1.0, 0.0}); }

  std::vector<Check> list;
};

std::vector<SupportSet> prefix_chain(const SupportSet& a, int stages) {
  std::vector<SupportSet> chain;
  Index last = 0;
  for (int s = 1; s <= stages; ++s) {
    const auto size = static_cast<Index>(std::ceil(static_cast<double>(a.size()) * s / stages));
    if (size <= last) continue;
    std::vector<Index> idx(a.indices().begin(), a.indices().begin() + size);
    chain.emplace_back(std::move(idx), a.universe(), "K" + std::to_string(chain.size() + 1));
    last = size;
  }
  return chain;
}

std::vector<SupportSet> chain_from_config(const RunConfig& config, const Problem& p, bool increasing) {
  const json& doc = config.document;
  std::vector<SupportSet> chain;
  if (doc.contains("chain")) {
    const json& c = doc["chain"];
    if (!c.is_array() || c.empty()) throw ConfigError("/chain", "expected a nonempty array of index lists");
    for (std::size_t s = 0; s < c.size(); ++s) {
      try {
        chain.push_back(io::support_from_json(c[s], p.kernel.size(), "/chain/" + std::to_string(s)));
      } catch (const io::FormatError& e) {
        throw ConfigError(e.path(), e.what());
      } catch (const std::invalid_argument& e) {
        throw ConfigError("/chain/" + std::to_string(s), e.what());
      }
    }
    return chain;
  }
  chain = prefix_chain(p.a, positive_int(doc, "stages", 5));
  if (!increasing) std::reverse(chain.begin(), chain.end());
  return chain;
}

BalayageOptions balayage_options(const RunConfig& config, const Problem& p) {
  BalayageOptions o;
  o.tol = config.tol;
  o.ugaheri_h = p.h;
  return o;
}

GaussOptions gauss_options(const RunConfig& config) {
  GaussOptions o;
  o.tol = config.tol;
  return o;
}

json balayage_json(const BalayageResult& r) {
  return {{"measure", measure_json(r.measure)},
          {"value", r.value},
          {"mass", r.mass},
          {"mass_bound", opt(r.mass_bound)},
          {"kkt", kkt_json(r.kkt)},
          {"residuals",
           {{"domination", r.residuals.domination},
            {"support_equality", r.residuals.support_equality},
            {"energy_orthogonality", r.residuals.energy_orthogonality}}},
          {"iterations", r.iterations}};
}

json gauss_json(const GaussResult& g) {
  return {{"measure", measure_json(g.measure)},
          {"value", g.value},
          {"equilibrium_constant", g.equilibrium_constant},
          {"constant_integral", g.constant_integral},
          {"kkt", kkt_json(g.kkt)},
          {"inequality_residual", g.inequality_residual},
          {"equality_residual", g.equality_residual}};
}

double max_potential_on(const KernelMatrix& k, const Measure& mu, const SupportSet& a) {
  const Vector u = potential(k, mu);
  double best = 0.0;
  for (Index i : a.indices()) best = std::max(best, u[i]);
  return best;
}

void balayage_checks(Checks& c, const std::string& prefix, const KernelMatrix& k, const Measure& omega,
                     const SupportSet& a, const BalayageResult& r, double tol) {
  const double limit = kViolationFactor * tol;
  c.at_most(prefix + "U^ω̂ ≥ U^ω on A", -r.residuals.domination, limit);
  c.at_most(prefix + "U^ω̂ = U^ω on the support of ω̂", r.residuals.support_equality, limit);
  c.at_most(prefix + "∫U^{ω̂-ω} dω̂ = 0", std::abs(r.residuals.energy_orthogonality), limit);
  c.at_most(prefix + "complementarity", r.kkt.complementarity_residual, limit);
  c.at_most(prefix + "ŵ_f(A) ≤ 0", r.value, limit);
  const double floor = -2.0 * max_potential_on(k, omega.variation(), a) * r.mass;
  c.at_most(prefix + "ŵ_f(A) ≥ -2 max_A U^|ω| · ω̂(X)", floor - r.value, limit);
}

RunOutcome run_balayage(const RunConfig& config, const Problem& p) {
  const BalayageResult r = pseudo_balayage(p.kernel, p.omega, p.a, balayage_options(config, p));
  Checks c;
  balayage_checks(c, "", p.kernel, p.omega, p.a, r, config.tol);
  const MassBoundOutcome bound = mass_bound_check(r, p.h, p.omega);
  if (bound != MassBoundOutcome::SkippedNoH) {
    c.at_most("ω̂^A(X) ≤ h ω⁺(X) (1 + slack)", r.mass,
              *p.h * p.omega.positive_part().total_mass() * (1.0 + kDiscretizationSlack));
  }
  RunOutcome out;
  out.report = balayage_json(r);
  out.report["mass_bound_check"] = bound == MassBoundOutcome::Holds       ? "Holds"
                                   : bound == MassBoundOutcome::Violated ? "Violated"
                                                                         : "SkippedNoH";
  const Vector gap = potential(p.kernel, r.measure - p.omega);
  std::ostringstream csv;
  csv << "node,weight,potential_gap\n";
  for (Index i : p.a.indices()) csv << i << ',' << fmt(r.measure[i]) << ',' << fmt(gap[i]) << '\n';
  out.csv = csv.str();
  out.checks = std::move(c.list);
  return out;
}

RunOutcome run_gauss(const RunConfig& config, const Problem& p) {
  const GaussResult g = solve_gauss(p.kernel, p.omega, p.a, gauss_options(config));
  const BalayageResult b = pseudo_balayage(p.kernel, p.omega, p.a, balayage_options(config, p));
  const bool mass_one = std::abs(b.mass - 1.0) <= kMassOneTol;
  const double distance = strong_distance(p.kernel, g.measure, b.measure);

  Checks c;
  const double limit = kViolationFactor * config.tol;
  c.at_most("U_f^λ ≥ c_{A,f} on A", -g.inequality_residual, limit);
  c.at_most("U_f^λ = c_{A,f} on the support of λ", g.equality_residual, limit);
  c.at_most("multiplier equals ∫U_f^λ dλ", std::abs(g.equilibrium_constant - g.constant_integral), limit);
  c.at_most("ŵ_f(A) ≤ w_f(A)", b.value - g.value, kOrderingTol * std::max(1.0, std::abs(g.value)));
  if (mass_one) c.at_most("λ_{A,f} = ω̂^A when ω̂^A(X) = 1", distance, kMassOneDistance);

  RunOutcome out;
  out.report = gauss_json(g);
  out.report["balayage_mass"] = b.mass;
  out.report["balayage_value"] = b.value;
  out.report["lambda_is_balayage"] = mass_one && distance <= kMassOneDistance;
  out.report["distance_to_balayage"] = distance;
  const Vector weighted = potential(p.kernel, g.measure - p.omega);
  std::ostringstream csv;
  csv << "node,weight,weighted_potential\n";
  for (Index i : p.a.indices()) csv << i << ',' << fmt(g.measure[i]) << ',' << fmt(weighted[i]) << '\n';
  out.csv = csv.str();
  out.checks = std::move(c.list);
  return out;
}

RunOutcome run_capacity(const RunConfig& config, const Problem& p) {
  const CapacityResult cap = capacitary_measure(p.kernel, p.a, config.tol);
  Checks c;
  const double limit = kViolationFactor * config.tol * std::max(1.0, cap.capacity);
  c.at_most("U^γ ≥ 1 on Q", 1.0 - cap.potential_min, limit);
  c.at_most("γ(X) = c(Q)", std::abs(cap.gamma.total_mass() - cap.capacity), limit);
  RunOutcome out;
  out.report = {{"gamma", measure_json(cap.gamma)},
                {"capacity", cap.capacity},
                {"potential_min", cap.potential_min},
                {"potential_max", cap.potential_max},
                {"minimal_energy", cap.minimal_energy}};
  const Vector u = potential(p.kernel, cap.gamma);
  std::ostringstream csv;
  csv << "node,gamma,potential\n";
  for (Index i : p.a.indices()) csv << i << ',' << fmt(cap.gamma[i]) << ',' << fmt(u[i]) << '\n';
  out.csv = csv.str();
  out.checks = std::move(c.list);
  return out;
}

RunOutcome run_solvability(const RunConfig& config, const Problem& p) {
  bool finite = true;
  if (config.document.contains("capacity_finite")) {
    if (!config.document["capacity_finite"].is_boolean()) {
      throw ConfigError("/capacity_finite", "expected a boolean");
    }
    finite = config.document["capacity_finite"].get<bool>();
  }
  const SolvabilityOutcome s = solvability_check(p.kernel, p.omega, p.a, finite, config.tol);
  RunOutcome out;
  out.report = {{"verdict", to_string(s.verdict)},
                {"reason", s.reason},
                {"capacity_finite", finite},
                {"lambda_is_balayage", s.lambda_is_balayage},
                {"balayage_mass", s.balayage->mass},
                {"balayage_value", s.balayage->value}};
  out.report["gauss"] = s.gauss ? gauss_json(*s.gauss) : json(nullptr);
  Checks c;
  if (!finite && s.verdict == Solvability::Unsolvable) {
    c.at_most("ξ(X) = ω̂^A(X) < 1", s.balayage->mass, 1.0);
  }
  if (config.document.contains("chain") || config.document.contains("stages")) {
    const ExtremalDiagnostic d =
        extremal_diagnostic(p.kernel, p.omega, chain_from_config(config, p, true), config.tol);
    out.report["extremal"] = {{"sequence_values", d.sequence_values},
                              {"constants", d.constants},
                              {"masses", d.masses},
                              {"limit_measure", measure_json(d.limit_measure)},
                              {"limit_mass", d.limit_mass},
                              {"c_xi", d.c_xi},
                              {"constant_gap", d.constant_gap}};
    for (std::size_t j = 1; j < d.sequence_values.size(); ++j) {
      c.at_most("w_f(K) nonincreasing at stage " + std::to_string(j + 1),
                d.sequence_values[j] - d.sequence_values[j - 1], kOrderingTol);
    }
    c.at_most("ξ(X) ≤ 1", d.limit_mass, 1.0 + config.tol);
    std::ostringstream csv;
    csv << "stage,value,constant,mass\n";
    for (std::size_t j = 0; j < d.sequence_values.size(); ++j) {
      csv << j + 1 << ',' << fmt(d.sequence_values[j]) << ',' << fmt(d.constants[j]) << ','
          << fmt(d.masses[j]) << '\n';
    }
    out.csv = csv.str();
  }
  out.checks = std::move(c.list);
  return out;
}

RunOutcome run_converge(const RunConfig& config, const Problem& p, bool up) {
  const std::vector<SupportSet> chain = chain_from_config(config, p, up);
  const experiments::ConvergenceReport r =
      up ? experiments::monotone_up(p.kernel, p.omega, chain, config.tol)
         : experiments::monotone_down(p.kernel, p.omega, chain, config.tol);
  Checks c;
  for (std::size_t j = 0; j < r.chain_slack.size(); ++j) {
    c.at_most("‖ω̂^K - ω̂^K'‖² ≤ 2I_f(ω̂^K) - 2I_f(ω̂^K') at pair " + std::to_string(j + 1),
              -r.chain_slack[j], config.tol);
  }
  for (std::size_t j = 1; j < r.stage_values.size(); ++j) {
    const double step = r.stage_values[j] - r.stage_values[j - 1];
    c.at_most(std::string(up ? "ŵ_f nonincreasing" : "ŵ_f nondecreasing") + " at stage " +
                  std::to_string(j + 1),
              up ? step : -step, kOrderingTol);
    if (up) {
      c.at_most("w_f nonincreasing at stage " + std::to_string(j + 1),
                r.gauss_values[j] - r.gauss_values[j - 1], kOrderingTol);
    }
  }
  c.at_most("final strong distance to ω̂^A", r.stage_norms.back(), config.tol);

  RunOutcome out;
  json sizes = json::array();
  for (const SupportSet& s : chain) sizes.push_back(s.size());
  out.report = {{"direction", experiments::to_string(r.direction)},
                {"stage_sizes", sizes},
                {"stage_norms", r.stage_norms},
                {"stage_values", r.stage_values},
                {"stage_masses", r.stage_masses},
                {"gauss_values", r.gauss_values},
                {"chain_slack", r.chain_slack},
                {"limit", measure_json(r.limit)}};
  std::ostringstream csv;
  csv << "stage,size,norm,value,mass,gauss_value,chain_slack\n";
  for (std::size_t j = 0; j < chain.size(); ++j) {
    csv << j + 1 << ',' << chain[j].size() << ',' << fmt(r.stage_norms[j]) << ',' << fmt(r.stage_values[j])
        << ',' << fmt(r.stage_masses[j]) << ',' << fmt(r.gauss_values[j]) << ','
        << (j < r.chain_slack.size() ? fmt(r.chain_slack[j]) : std::string()) << '\n';
  }
  out.csv = csv.str();
  out.checks = std::move(c.list);
  return out;
}

InstanceSpec require_spec(const RunConfig& config) {
  if (!config.document.contains("instance")) throw ConfigError("/instance", "this command needs an instance spec");
  try {
    return instance_spec_from_json(config.document["instance"], "/instance");
  } catch (const io::FormatError& e) {
    throw ConfigError(e.path(), e.what());
  }
}

RunOutcome run_thinness(const RunConfig& config) {
  const ThinnessReport r = thinness_series(require_spec(config), config.tol);
  Checks c;
  for (std::size_t j = 1; j < r.partial_sums.size(); ++j) {
    c.at_most("partial sums nondecreasing at shell " + std::to_string(r.shells[j]),
              r.partial_sums[j - 1] - r.partial_sums[j], 0.0);
  }
  RunOutcome out;
  out.report = {{"q", r.q},
                {"shells", r.shells},
                {"shell_capacities", r.shell_capacities},
                {"partial_sums", r.partial_sums},
                {"fitted_exponent", r.fitted_exponent},
                {"verdict", to_string(r.verdict)}};
  std::ostringstream csv;
  csv << "shell,capacity,partial_sum\n";
  for (std::size_t j = 0; j < r.shells.size(); ++j) {
    csv << r.shells[j] << ',' << fmt(r.shell_capacities[j]) << ',' << fmt(r.partial_sums[j]) << '\n';
  }
  out.csv = csv.str();
  out.checks = std::move(c.list);
  return out;
}

template <class T>
std::vector<T> list_of(const json& doc, const std::string& key, std::vector<T> fallback) {
  if (!doc.contains(key)) return fallback;
  const json& v = doc[key];
  if (!v.is_array() || v.empty()) throw ConfigError("/" + key, "expected a nonempty array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool ok = std::is_integral_v<T> ? v[i].is_number_integer() : v[i].is_number();
    if (!ok) throw ConfigError("/" + key + "/" + std::to_string(i), "wrong element type");
    out.push_back(v[i].get<T>());
  }
  return out;
}

RunOutcome run_scan(const RunConfig& config) {
  const InstanceSpec spec = require_spec(config);
  const std::vector<int> truncations = list_of<int>(config.document, "truncations", {3, 4, 5, 6});
  const std::vector<double> scalings = list_of<double>(config.document, "scalings", {0.0, 0.5, 2.0});
  const experiments::ScanTable t = experiments::solvability_scan(spec, truncations, scalings, config.tol);

  Checks c;
  RunOutcome out;
  json rows = json::array();
  std::ostringstream csv;
  csv << "scaling,truncation,balayage_mass,balayage_value,gauss_value,equilibrium_constant,leak_fraction\n";
  for (const experiments::ScanRow& row : t.rows) {
    json cells = json::array();
    for (const experiments::ScanCell& cell : row.cells) {
      cells.push_back({{"truncation", cell.truncation},
                       {"balayage_mass", cell.balayage_mass},
                       {"balayage_value", cell.balayage_value},
                       {"gauss_value", cell.gauss_value},
                       {"equilibrium_constant", cell.equilibrium_constant},
                       {"leak_fraction", cell.leak_fraction},
                       {"lambda_is_balayage", cell.lambda_is_balayage}});
      csv << fmt(row.scaling) << ',' << cell.truncation << ',' << fmt(cell.balayage_mass) << ','
          << fmt(cell.balayage_value) << ',' << fmt(cell.gauss_value) << ','
          << fmt(cell.equilibrium_constant) << ',' << fmt(cell.leak_fraction) << '\n';
    }
    rows.push_back({{"scaling", row.scaling},
                    {"omega_mass", row.omega_mass},
                    {"omega_positive_mass", row.omega_positive_mass},
                    {"pattern", experiments::to_string(row.pattern)},
                    {"cells", cells}});
    const std::string label = "row q=" + fmt(row.scaling);
    if (row.omega_mass >= 1.0) {
      c.holds(label + " stabilizes (ω(X) ≥ 1)", row.pattern == experiments::ScanPattern::Stabilizes);
    } else if (row.omega_positive_mass < 1.0) {
      c.holds(label + " leaks (ω⁺(X) < 1)", row.pattern == experiments::ScanPattern::Leaks);
    }
  }
  out.report = {{"truncations", t.truncations}, {"rows", rows}};
  out.csv = csv.str();
  out.checks = std::move(c.list);
  return out;
}

RunOutcome run_ugaheri(const RunConfig& config, const Problem& p) {
  const int trials = positive_int(config.document, "trials", 100);
  std::uint64_t seed = 1;
  if (config.document.contains("seed")) {
    if (!config.document["seed"].is_number_unsigned()) throw ConfigError("/seed", "expected a nonnegative integer");
    seed = config.document["seed"].get<std::uint64_t>();
  }
  const experiments::UgaheriEstimate e = experiments::ugaheri_estimate(p.kernel, trials, seed, {}, config.tol);
  Checks c;
  c.at_most("ĥ ≥ 1", 1.0 - e.h_hat, 0.0);
  if (p.h) c.at_most("ĥ ≤ h (1 + slack)", e.h_hat, *p.h * (1.0 + kDiscretizationSlack));
  RunOutcome out;
  json witnesses = json::array();
  for (const experiments::UgaheriWitness& w : e.witnesses) {
    witnesses.push_back({{"subset", w.subset}, {"ratio", w.ratio}});
  }
  out.report = {{"h_hat", e.h_hat}, {"samples", e.samples}, {"witnesses", witnesses}, {"h", opt(p.h)}};
  out.checks = std::move(c.list);
  return out;
}

const char* status_for(int code) {
  switch (code) {
    case kExitOk:
      return "ok";
    case kExitViolation:
      return "violation";
    case kExitSolver:
      return "solver_failure";
    default:
      return "config_error";
  }
}

json check_json(const Check& c) {
  return {{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"limit", c.limit}};
}

void finish(RunOutcome& out, Command command, const std::string& hash, double tol) {
  const json result = out.report;
  if (out.exit_code == kExitOk) {
    for (const Check& c : out.checks) {
      if (!c.passed) {
        out.exit_code = kExitViolation;
        out.message = "invariant violated: " + c.name + " (value " + fmt(c.value) + ", limit " + fmt(c.limit) + ")";
        break;
      }
    }
  }
  json checks = json::array();
  for (const Check& c : out.checks) checks.push_back(check_json(c));
  out.report = {{"schema", "sweep-report"},
                {"schema_version", kSchemaVersion},
                {"command", to_string(command)},
                {"config_hash", hash},
                {"tol", tol},
                {"status", status_for(out.exit_code)},
                {"exit_code", out.exit_code},
                {"message", out.message},
                {"checks", checks},
                {"result", result}};
}

template <class F>
RunOutcome guarded(F&& body) {
  RunOutcome out;
  try {
    out = body();
  } catch (const CharacterizationViolated& e) {
    out = {};
    out.exit_code = kExitViolation;
    out.message = e.what();
  } catch (const ConfigError& e) {
    out = {};
    out.exit_code = kExitConfig;
    out.message = e.what();
  } catch (const io::FormatError& e) {
    out = {};
    out.exit_code = kExitConfig;
    out.message = e.what();
  } catch (const NotPositiveDefinite& e) {
    out = {};
    out.exit_code = kExitConfig;
    out.message = std::string("kernel rejected: ") + e.what();
  } catch (const std::invalid_argument& e) {
    out = {};
    out.exit_code = kExitConfig;
    out.message = e.what();
  } catch (const std::exception& e) {
    out = {};
    out.exit_code = kExitSolver;
    out.message = std::string("solver failure: ") + e.what();
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::string path, const std::string& message)
    : std::runtime_error(path + ": " + message), path_(std::move(path)) {}

std::string to_string(Command c) {
  for (const auto& entry : kCommands) {
    if (entry.command == c) return entry.name;
  }
  return "unknown";
}

std::optional<Command> command_from_string(const std::string& s) {
  for (const auto& entry : kCommands) {
    if (s == entry.name) return entry.command;
  }
  return std::nullopt;
}

RunConfig parse_config(const json& document, std::optional<Command> command) {
  if (!document.is_object()) throw ConfigError("", "config must be a JSON object");
  for (const auto& [key, value] : document.items()) {
    if (!kConfigKeys.contains(key)) throw ConfigError("/" + key, "unknown key");
  }
  if (!document.contains("schema_version")) throw ConfigError("/schema_version", "missing");
  if (!document["schema_version"].is_number_integer() || document["schema_version"].get<int>() != kSchemaVersion) {
    throw ConfigError("/schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  RunConfig config;
  if (document.contains("command")) {
    if (!document["command"].is_string()) throw ConfigError("/command", "expected a string");
    const auto named = command_from_string(document["command"].get<std::string>());
    if (!named) throw ConfigError("/command", "unknown command '" + document["command"].get<std::string>() + "'");
    config.command = *named;
  } else if (!command) {
    throw ConfigError("/command", "missing");
  }
  if (command) config.command = *command;

  int sources = 0;
  for (const char* key : {"instance", "kernel", "kernel_csv"}) sources += document.contains(key) ? 1 : 0;
  const bool spec_only = config.command == Command::Thinness || config.command == Command::Scan;
  if (config.command != Command::Verify) {
    if (sources != 1) throw ConfigError("", "exactly one of instance, kernel, kernel_csv is required");
    if (spec_only && !document.contains("instance")) {
      throw ConfigError("/instance", to_string(config.command) + " needs an instance spec");
    }
  }
  config.tol = positive_number(document, "tol", kSolverTol);
  config.document = document;
  config.document["tol"] = config.tol;
  config.document["command"] = to_string(config.command);
  return config;
}

RunConfig load_config(const std::filesystem::path& file, std::optional<Command> command) {
  json doc;
  try {
    doc = io::read_json_file(file);
  } catch (const std::exception& e) {
    throw ConfigError("", e.what());
  }
  RunConfig config = parse_config(doc, command);
  config.base_dir = file.parent_path().empty() ? std::filesystem::path(".") : file.parent_path();
  return config;
}

Problem resolve_problem(const RunConfig& config) {
  const json& doc = config.document;
  try {
    std::optional<Problem> p;
    if (doc.contains("instance")) {
      const InstanceSpec spec = instance_spec_from_json(doc["instance"], "/instance");
      Instance inst = build_instance(spec);
      p.emplace(Problem{std::move(inst.kernel), std::move(inst.omega), std::move(inst.nodes), spec,
                        std::move(inst.points), inst.ugaheri_h});
    } else {
      KernelMatrix k = doc.contains("kernel")
                           ? io::kernel_from_json(doc["kernel"], "/kernel")
                           : [&] {
                               if (!doc["kernel_csv"].is_string()) {
                                 throw ConfigError("/kernel_csv", "expected a path");
                               }
                               std::filesystem::path file = doc["kernel_csv"].get<std::string>();
                               if (file.is_relative()) file = config.base_dir / file;
                               return KernelMatrix(io::load_matrix_csv(file));
                             }();
      const Index m = k.size();
      p.emplace(Problem{std::move(k), Measure::zero(m), SupportSet::all(m, "A"), std::nullopt, std::nullopt,
                        std::nullopt});
    }
    const Index m = p->kernel.size();
    if (doc.contains("omega")) p->omega = io::measure_from_json(doc["omega"], m, "/omega");
    if (doc.contains("A")) p->a = io::support_from_json(doc["A"], m, "/A");
    if (doc.contains("ugaheri_h")) {
      p->h = positive_number(doc, "ugaheri_h", 1.0);
      if (*p->h < 1.0) throw ConfigError("/ugaheri_h", "must be at least 1");
    }
    return std::move(*p);
  } catch (const io::FormatError& e) {
    throw ConfigError(e.path(), e.what());
  }
}

std::string config_hash(const json& document) {
  const std::string text = document.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

RunOutcome run(const RunConfig& config) {
  if (config.command == Command::Verify) {
    std::filesystem::path dir = default_fixture_dir();
    return verify(dir, config.tol);
  }
  RunOutcome out = guarded([&]() -> RunOutcome {
    switch (config.command) {
      case Command::Thinness:
        return run_thinness(config);
      case Command::Scan:
        return run_scan(config);
      default:
        break;
    }
    const Problem p = resolve_problem(config);
    switch (config.command) {
      case Command::Balayage:
        return run_balayage(config, p);
      case Command::Gauss:
        return run_gauss(config, p);
      case Command::Capacity:
        return run_capacity(config, p);
      case Command::Solvability:
        return run_solvability(config, p);
      case Command::ConvergeUp:
        return run_converge(config, p, true);
      case Command::ConvergeDown:
        return run_converge(config, p, false);
      case Command::Ugaheri:
        return run_ugaheri(config, p);
      default:
        throw ConfigError("/command", "not runnable here");
    }
  });
  finish(out, config.command, config_hash(config.document), config.tol);
  return out;
}

void write_artifacts(const std::filesystem::path& dir, const RunConfig& config, const RunOutcome& outcome,
                     const std::string& started, const std::string& finished) {
  std::filesystem::create_directories(dir);
  io::write_json_file(dir / "report.json", outcome.report);
  if (!outcome.csv.empty()) {
    std::ofstream csv(dir / "report.csv");
    if (!csv) throw std::runtime_error("cannot write " + (dir / "report.csv").string());
    csv << outcome.csv;
  }
  io::write_json_file(dir / "meta.json", {{"config_hash", config_hash(config.document)},
                                          {"started", started},
                                          {"finished", finished},
                                          {"threads", thread_count()}});
}

void validate_report(const json& report) {
  const auto need = [&](const json& obj, const std::string& path, const std::string& key, auto predicate,
                        const char* what) {
    if (!obj.is_object() || !obj.contains(key) || !predicate(obj[key])) {
      throw ConfigError(path + "/" + key, std::string("expected ") + what);
    }
  };
  const auto is_string = [](const json& v) { return v.is_string(); };
  const auto is_number = [](const json& v) { return v.is_number(); };
  const auto is_array = [](const json& v) { return v.is_array(); };
  const auto is_int = [](const json& v) { return v.is_number_integer(); };

  need(report, "", "schema", [](const json& v) { return v == "sweep-report"; }, "\"sweep-report\"");
  need(report, "", "schema_version", [](const json& v) { return v == kSchemaVersion; }, "version 1");
  need(report, "", "command", [](const json& v) {
    return v.is_string() && command_from_string(v.get<std::string>()).has_value();
  }, "a known command");
  need(report, "", "config_hash", [](const json& v) {
    return v.is_string() && v.get<std::string>().size() == 16 &&
           v.get<std::string>().find_first_not_of("0123456789abcdef") == std::string::npos;
  }, "16 hex digits");
  need(report, "", "tol", is_number, "a number");
  need(report, "", "exit_code", is_int, "an integer");
  need(report, "", "status", [&](const json& v) {
    return v.is_string() && v.get<std::string>() == status_for(report["exit_code"].get<int>());
  }, "the status matching exit_code");
  need(report, "", "message", is_string, "a string");
  need(report, "", "checks", is_array, "an array");
  for (std::size_t i = 0; i < report["checks"].size(); ++i) {
    const std::string path = "/checks/" + std::to_string(i);
    const json& c = report["checks"][i];
    need(c, path, "name", is_string, "a string");
    need(c, path, "passed", [](const json& v) { return v.is_boolean(); }, "a boolean");
    need(c, path, "value", is_number, "a number");
    need(c, path, "limit", is_number, "a number");
  }
  if (!report.contains("result")) throw ConfigError("/result", "missing");
  if (report["exit_code"] != kExitOk) return;

  const json& r = report["result"];
  static const std::map<std::string, std::vector<std::string>> kResultKeys = {
      {"balayage", {"measure", "value", "mass", "kkt", "residuals"}},
      {"gauss", {"measure", "value", "equilibrium_constant", "constant_integral", "kkt", "lambda_is_balayage"}},
      {"capacity", {"gamma", "capacity", "potential_min", "potential_max"}},
      {"solvability", {"verdict", "reason", "balayage_mass", "gauss"}},
      {"converge-up", {"direction", "stage_norms", "stage_values", "chain_slack"}},
      {"converge-down", {"direction", "stage_norms", "stage_values", "chain_slack"}},
      {"thinness", {"q", "shells", "shell_capacities", "partial_sums", "fitted_exponent", "verdict"}},
      {"scan", {"truncations", "rows"}},
      {"ugaheri", {"h_hat", "samples", "witnesses"}},
      {"verify", {"fixtures"}},
  };
  for (const std::string& key : kResultKeys.at(report["command"].get<std::string>())) {
    if (!r.is_object() || !r.contains(key)) throw ConfigError("/result/" + key, "missing");
  }
  for (const char* key : {"measure", "gamma"}) {
    if (r.contains(key)) {
      try {
        io::measure_from_json(r[key], r[key].value("m", Index{0}), std::string("/result/") + key);
      } catch (const io::FormatError& e) {
        throw ConfigError(e.path(), e.what());
      }
    }
  }
}

std::string summary_text(const RunOutcome& outcome) {
  std::ostringstream s;
  const json& r = outcome.report;
  s << r.value("command", std::string("?")) << ": " << r.value("status", std::string("?"));
  if (!outcome.message.empty()) s << " - " << outcome.message;
  s << '\n';
  for (const Check& c : outcome.checks) {
    s << (c.passed ? "  PASS " : "  FAIL ") << c.name << " (value " << fmt(c.value) << ", limit " << fmt(c.limit)
      << ")\n";
  }
  return s.str();
}

std::filesystem::path default_fixture_dir() { return SWEEP_FIXTURES_DIR; }

RunOutcome verify(const std::filesystem::path& dir, double tol) {
  RunOutcome out;
  const auto fail_config = [&](const std::string& message) {
    out.exit_code = kExitConfig;
    out.message = message;
  };
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) {
    fail_config("fixture directory not found: " + dir.string());
  } else {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) fail_config("no fixtures in " + dir.string());
  }

  json names = json::array();
  Checks c;
  const double limit = kViolationFactor * tol;
  for (const auto& file : files) {
    const std::string name = file.stem().string();
    names.push_back(name);
    const std::string pre = name + ": ";
    try {
      const RunConfig config = load_config(file, Command::Balayage);
      const Problem p = resolve_problem(config);
      BalayageOptions bo;
      bo.tol = tol;
      bo.ugaheri_h = p.h;
      const BalayageResult b = pseudo_balayage(p.kernel, p.omega, p.a, bo);
      balayage_checks(c, pre, p.kernel, p.omega, p.a, b, tol);
      c.holds(pre + "variational characterization", verify_ii1(p.kernel, p.omega, p.a, b.measure, tol).holds);

      GaussOptions go;
      go.tol = tol;
      const GaussResult g = solve_gauss(p.kernel, p.omega, p.a, go);
      c.at_most(pre + "ŵ_f(A) ≤ w_f(A)", b.value - g.value, kOrderingTol * std::max(1.0, std::abs(g.value)));
      c.at_most(pre + "multiplier equals ∫U_f^λ dλ", std::abs(g.equilibrium_constant - g.constant_integral),
                limit);

      if (p.a.size() <= kFixtureOracleLimit) {
        const qp::ConeQpProblem cone(p.kernel.restricted(p.a), Measure(potential(p.kernel, p.omega)).restricted(p.a));
        const Vector wc = qp::brute_force_cone(cone);
        c.at_most(pre + "cone solver matches enumeration oracle",
                  (b.measure.restricted(p.a) - wc).lpNorm<Eigen::Infinity>(), kOracleWeightTol);
        c.at_most(pre + "cone objective matches enumeration oracle", std::abs(b.value - cone.objective(wc)),
                  kOracleObjectiveTol * std::max(1.0, std::abs(b.value)));
        const qp::SimplexQpProblem simplex(p.kernel.restricted(p.a),
                                           -Measure(potential(p.kernel, p.omega)).restricted(p.a));
        const Vector ws = qp::brute_force_simplex(simplex);
        c.at_most(pre + "simplex solver matches enumeration oracle",
                  (g.measure.restricted(p.a) - ws).lpNorm<Eigen::Infinity>(), kOracleWeightTol);
        c.at_most(pre + "simplex objective matches enumeration oracle", std::abs(g.value - simplex.objective(ws)),
                  kOracleObjectiveTol * std::max(1.0, std::abs(g.value)));
      }

      const std::vector<SupportSet> chain = prefix_chain(p.a, 3);
      const experiments::ConvergenceReport up = experiments::monotone_up(p.kernel, p.omega, chain, tol);
      for (double slack : up.chain_slack) c.at_most(pre + "strong Cauchy inequality", -slack, tol);
      c.at_most(pre + "final strong distance", up.stage_norms.back(), tol);

      const MassBoundOutcome bound = mass_bound_check(b, p.h, p.omega);
      if (bound != MassBoundOutcome::SkippedNoH) c.holds(pre + "ω̂^A(X) ≤ h ω⁺(X)", bound == MassBoundOutcome::Holds);

      if (config.document.contains("expected")) {
        const json& e = config.document["expected"];
        const auto compare = [&](const std::string& key, double actual) {
          if (!e.contains(key)) return;
          if (!e[key].is_number()) throw ConfigError("/expected/" + key, "expected a number");
          const double want = e[key].get<double>();
          c.at_most(pre + "expected " + key, std::abs(actual - want), kExpectedRelTol * std::max(1.0, std::abs(want)));
        };
        compare("balayage_mass", b.mass);
        compare("balayage_value", b.value);
        compare("gauss_value", g.value);
        compare("equilibrium_constant", g.equilibrium_constant);
        if (e.contains("lambda_is_balayage")) {
          const bool flag = std::abs(b.mass - 1.0) <= kMassOneTol &&
                            strong_distance(p.kernel, g.measure, b.measure) <= kMassOneDistance;
          c.holds(pre + "expected lambda_is_balayage", flag == e["lambda_is_balayage"].get<bool>());
        }
      }
    } catch (const CharacterizationViolated& e) {
      c.holds(pre + e.invariant(), false);
    } catch (const std::exception& e) {
      c.holds(pre + "fixture is well-formed and solvable (" + e.what() + ")", false);
    }
  }

  out.report = {{"fixtures", names}};
  out.checks = std::move(c.list);
  finish(out, Command::Verify, config_hash({{"command", "verify"}, {"fixtures", names}, {"tol", tol}}), tol);
  return out;
}

}  // namespace sweep::cli

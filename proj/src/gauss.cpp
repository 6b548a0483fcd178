#include <sweep/gauss.hpp>

#include <cmath>
#include <limits>

namespace sweep {

namespace {

constexpr double kViolationFactor = 10.0;

void require_limit(const std::string& invariant, double residual, double limit) {
  if (!(residual <= limit)) throw CharacterizationViolated(invariant, residual, limit);
}

Vector restricted_potential(const KernelMatrix& k, const Measure& mu, const SupportSet& a) {
  const Vector u = potential(k, mu);
  Vector out(a.size());
  for (Index r = 0; r < a.size(); ++r) out[r] = u[a.indices()[r]];
  return out;
}

}  // namespace

std::string to_string(Solvability s) {
  switch (s) {
    case Solvability::Solvable:
      return "Solvable";
    case Solvability::SolvableViaBalayage:
      return "SolvableViaBalayage";
    case Solvability::Unsolvable:
      return "Unsolvable";
  }
  return "Unknown";
}

GaussResult solve_gauss(const KernelMatrix& k, const Measure& omega, const SupportSet& a,
                        const GaussOptions& options) {
  if (omega.size() != k.size()) throw SizeMismatch(k.size(), omega.size(), "charge");
  const qp::SimplexQpProblem problem(k.restricted(a), -restricted_potential(k, omega, a));
  qp::SolverOptions solver;
  solver.tol = options.tol;
  solver.start = options.start;
  const qp::Solution sol = qp::solve_simplex_qp(problem, solver);

  GaussResult out;
  out.measure = Measure::embed(sol.weights, a);
  out.value = sol.objective;
  out.kkt = sol.kkt;
  out.equilibrium_constant = sol.kkt.multiplier.value_or(0.0);
  out.constant_integral = problem.integral_constant(sol.weights);

  const Vector weighted = problem.weighted_gradient(sol.weights);
  out.inequality_residual = std::numeric_limits<double>::infinity();
  for (Index r = 0; r < a.size(); ++r) {
    const double gap = weighted[r] - out.equilibrium_constant;
    out.inequality_residual = std::min(out.inequality_residual, gap);
    if (sol.weights[r] > kViolationFactor * options.tol) {
      out.equality_residual = std::max(out.equality_residual, std::abs(gap));
    }
  }

  const double limit = kViolationFactor * options.tol;
  require_limit("λ is a probability measure", sol.kkt.feasibility_residual, limit);
  require_limit("U_f^λ ≥ c_{A,f} on A", -out.inequality_residual, limit);
  require_limit("U_f^λ = c_{A,f} on the support of λ", out.equality_residual, limit);
  require_limit("multiplier equals ∫U_f^λ dλ",
                std::abs(out.equilibrium_constant - out.constant_integral), limit);
  return out;
}

CapacityResult capacitary_measure(const KernelMatrix& k, const SupportSet& q, double tol) {
  GaussOptions opts;
  opts.tol = tol;
  const GaussResult eq = solve_gauss(k, Measure::zero(k.size()), q, opts);
  CapacityResult out;
  out.gamma = (1.0 / eq.value) * eq.measure;
  out.minimal_energy = eq.value;
  out.capacity = 1.0 / eq.value;

  const Vector u = restricted_potential(k, out.gamma, q);
  out.potential_min = u.minCoeff();
  out.potential_max = u.maxCoeff();
  double support_gap = 0.0;
  for (Index r = 0; r < q.size(); ++r) {
    if (eq.measure[q.indices()[r]] > kViolationFactor * tol) {
      support_gap = std::max(support_gap, std::abs(u[r] - 1.0));
    }
  }
  // Residuals of μ* are amplified by the capacity when rescaling to γ.
  const double limit = kViolationFactor * tol * std::max(1.0, out.capacity);
  require_limit("U^γ ≥ 1 on Q", 1.0 - out.potential_min, limit);
  require_limit("U^γ = 1 on the support of γ", support_gap, limit);
  return out;
}

SolvabilityOutcome solvability_check(const KernelMatrix& k, const Measure& omega,
                                     const SupportSet& a, bool capacity_finite, double tol) {
  SolvabilityOutcome out;
  BalayageOptions bopts;
  bopts.tol = tol;
  out.balayage = pseudo_balayage(k, omega, a, bopts);
  const double mass = out.balayage->mass;
  GaussOptions gopts;
  gopts.tol = tol;

  if (capacity_finite) {
    out.verdict = Solvability::Solvable;
    out.gauss = solve_gauss(k, omega, a, gopts);
    out.reason = "set of finite capacity";
    return out;
  }
  if (mass >= 1.0 - tol) {
    out.verdict = Solvability::SolvableViaBalayage;
    if (std::abs(mass - 1.0) <= tol) {
      // λ_{A,f} = ω̂^A; U_f^λ vanishes on its support, so c_{A,f} = 0.
      GaussResult g;
      g.measure = out.balayage->measure;
      g.value = out.balayage->value;
      g.kkt = out.balayage->kkt;
      g.constant_integral = out.balayage->residuals.energy_orthogonality;
      g.equilibrium_constant = 0.0;
      g.inequality_residual = out.balayage->residuals.domination;
      g.equality_residual = out.balayage->residuals.support_equality;
      out.gauss = std::move(g);
      out.lambda_is_balayage = true;
      out.reason = "ω̂^A has unit mass";
    } else {
      out.gauss = solve_gauss(k, omega, a, gopts);
      out.reason = "ω̂^A has mass at least one";
    }
    return out;
  }
  out.verdict = Solvability::Unsolvable;
  out.reason = "infinite-capacity regime and ω̂^A(X) = " + std::to_string(mass) +
               " < 1; the extremal measure is ω̂^A";
  return out;
}

ExtremalDiagnostic extremal_diagnostic(const KernelMatrix& k, const Measure& omega,
                                       const std::vector<SupportSet>& nested, double tol) {
  require_nested(nested, ChainDirection::Increasing);
  ExtremalDiagnostic out;
  std::optional<Measure> previous;
  GaussResult last;
  for (const SupportSet& stage : nested) {
    GaussOptions opts;
    opts.tol = tol;
    if (previous) opts.start = previous->restricted(stage);
    last = solve_gauss(k, omega, stage, opts);
    out.sequence_values.push_back(last.value);
    out.constants.push_back(last.equilibrium_constant);
    out.masses.push_back(last.measure.total_mass());
    previous = last.measure;
  }
  out.limit_measure = last.measure;
  out.limit_mass = last.measure.total_mass();
  const Vector weighted = potential(k, out.limit_measure - omega);
  out.c_xi = out.limit_measure.weights().dot(weighted);
  out.constant_gap = std::abs(out.constants.back() - out.c_xi);
  require_limit("lim c_{K,f} = C_ξ", out.constant_gap, kViolationFactor * tol);
  return out;
}

}  // namespace sweep

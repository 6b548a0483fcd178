#include <sweep/balayage.hpp>

#include <cmath>
#include <limits>

namespace sweep {

namespace {

constexpr double kViolationFactor = 10.0;

void require_limit(const std::string& invariant, double residual, double limit) {
  if (!(residual <= limit)) throw CharacterizationViolated(invariant, residual, limit);
}

}  // namespace

CharacterizationViolated::CharacterizationViolated(const std::string& invariant, double residual,
                                                   double limit)
    : std::runtime_error("characterization violated: " + invariant + " residual " +
                         std::to_string(residual) + " exceeds " + std::to_string(limit)),
      invariant_(invariant),
      residual_(residual) {}

BalayageResiduals balayage_residuals(const KernelMatrix& k, const Measure& omega,
                                     const SupportSet& a, const Measure& candidate, double tol) {
  const Vector diff = potential(k, candidate - omega);
  BalayageResiduals r;
  r.domination = std::numeric_limits<double>::infinity();
  for (Index i : a.indices()) {
    r.domination = std::min(r.domination, diff[i]);
    if (candidate[i] > kViolationFactor * tol) {
      r.support_equality = std::max(r.support_equality, std::abs(diff[i]));
    }
  }
  r.energy_orthogonality = candidate.weights().dot(diff);
  return r;
}

BalayageResult pseudo_balayage(const KernelMatrix& k, const Measure& omega, const SupportSet& a,
                               const BalayageOptions& options) {
  if (omega.size() != k.size()) throw SizeMismatch(k.size(), omega.size(), "charge");
  const Vector u_omega = potential(k, omega);
  Vector b(a.size());
  for (Index r = 0; r < a.size(); ++r) b[r] = u_omega[a.indices()[r]];

  const qp::ConeQpProblem problem(k.restricted(a), std::move(b));
  qp::SolverOptions solver;
  solver.tol = options.tol;
  solver.start = options.start;
  const qp::Solution sol = qp::solve_cone_qp(problem, solver);

  BalayageResult out;
  out.measure = Measure::embed(sol.weights, a);
  out.value = sol.objective;
  out.kkt = sol.kkt;
  out.mass = out.measure.total_mass();
  out.iterations = sol.gradient_iterations + sol.active_set_iterations;
  out.residuals = balayage_residuals(k, omega, a, out.measure, options.tol);
  if (options.ugaheri_h) out.mass_bound = *options.ugaheri_h * omega.positive_part().total_mass();

  const double limit = kViolationFactor * options.tol;
  require_limit("U^ω̂ ≥ U^ω on A", -out.residuals.domination, limit);
  require_limit("U^ω̂ = U^ω on the support of ω̂", out.residuals.support_equality, limit);
  require_limit("∫U^{ω̂-ω} dω̂ = 0", std::abs(out.residuals.energy_orthogonality), limit);
  require_limit("ŵ_f(A) ≤ 0", out.value, limit);
  require_limit("ŵ_f(A) = I_f(ω̂)",
                std::abs(out.value - gauss_functional(k, omega, out.measure)),
                limit * std::max(1.0, std::abs(out.value)));
  return out;
}

Ii1Check verify_ii1(const KernelMatrix& k, const Measure& omega, const SupportSet& a,
                    const Measure& nu, double tol) {
  Ii1Check check;
  if (nu.size() != k.size() || omega.size() != k.size()) {
    check.rejected = "size mismatch";
    return check;
  }
  if (!nu.is_positive()) {
    check.rejected = "candidate is not a positive measure";
    return check;
  }
  if (!nu.supported_on(a)) {
    check.rejected = "candidate charges nodes outside A";
    return check;
  }
  const Vector diff = potential(k, nu - omega);
  check.atom_minimum = std::numeric_limits<double>::infinity();
  for (Index i : a.indices()) check.atom_minimum = std::min(check.atom_minimum, diff[i]);
  check.self_integral = nu.weights().dot(diff);
  check.holds = check.atom_minimum >= -tol && std::abs(check.self_integral) <= tol;
  return check;
}

MassBoundOutcome mass_bound_check(const BalayageResult& result, std::optional<double> h,
                                  const Measure& omega, double slack) {
  if (!h) return MassBoundOutcome::SkippedNoH;
  const double bound = *h * omega.positive_part().total_mass() * (1.0 + slack);
  return result.mass <= bound ? MassBoundOutcome::Holds : MassBoundOutcome::Violated;
}

double restricted_problem_value(const KernelMatrix& k, const Measure& omega, const SupportSet& a,
                                double mass_limit, double tol) {
  if (!(mass_limit >= 0.0)) throw std::invalid_argument("mass limit must be nonnegative");
  if (mass_limit == 0.0) return 0.0;
  const Vector u_omega = potential(k, omega);
  Vector b(a.size());
  for (Index r = 0; r < a.size(); ++r) b[r] = u_omega[a.indices()[r]];
  const Matrix q = k.restricted(a);

  qp::SolverOptions solver;
  solver.tol = tol;
  const qp::Solution free = qp::solve_cone_qp(qp::ConeQpProblem(q, b), solver);
  if (free.weights.sum() <= mass_limit) return free.objective;

  // The mass constraint binds: substitute μ = L·ν with ν a probability measure.
  const qp::Solution bound =
      qp::solve_simplex_qp(qp::SimplexQpProblem(q, -b / mass_limit), solver);
  return mass_limit * mass_limit * bound.objective;
}

}  // namespace sweep

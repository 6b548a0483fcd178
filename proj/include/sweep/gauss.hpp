#pragma once

// Gauss variational problem: minimize I_f(μ) = ‖μ‖² - 2∫U^ω dμ over
// probability measures carried by A. The minimizer λ_{A,f} is characterized
// by the f-weighted potential U_f^λ = U^λ - U^ω being ≥ c_{A,f} at every node
// of A, with equality on the support of λ, where c_{A,f} = ∫U_f^λ dλ.

#include <sweep/balayage.hpp>
#include <sweep/core.hpp>
#include <sweep/qp.hpp>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sweep {

struct GaussResult {
  Measure measure;
  /// w_f(A) = I_f(λ_{A,f}).
  double value = 0.0;
  /// c_{A,f}, recovered as the multiplier of the mass constraint.
  double equilibrium_constant = 0.0;
  /// ∫U_f^λ dλ, the same constant by integration.
  double constant_integral = 0.0;
  qp::KktReport kkt;
  /// min over A of U_f^λ - c_{A,f}.
  double inequality_residual = 0.0;
  /// max |U_f^λ - c_{A,f}| over the support of λ.
  double equality_residual = 0.0;
};

struct GaussOptions {
  double tol = kSolverTol;
  /// Warm start, indexed like A.
  std::optional<Vector> start;
};

GaussResult solve_gauss(const KernelMatrix& k, const Measure& omega, const SupportSet& a,
                        const GaussOptions& options = {});

struct CapacityResult {
  /// Capacitary measure γ_Q = μ*/‖μ*‖².
  Measure gamma;
  /// c(Q) = γ(X) = 1/‖μ*‖².
  double capacity = 0.0;
  /// Range of U^γ over Q.
  double potential_min = 0.0;
  double potential_max = 0.0;
  /// ‖μ*‖² for the minimal-energy probability measure μ* on Q.
  double minimal_energy = 0.0;
};

CapacityResult capacitary_measure(const KernelMatrix& k, const SupportSet& q,
                                  double tol = kSolverTol);

enum class Solvability { Solvable, SolvableViaBalayage, Unsolvable };

std::string to_string(Solvability s);

struct SolvabilityOutcome {
  Solvability verdict = Solvability::Solvable;
  /// Present unless the verdict is Unsolvable.
  std::optional<GaussResult> gauss;
  /// ω̂^A; in the truncation regime it is the extremal measure when the
  /// problem is unsolvable.
  std::optional<BalayageResult> balayage;
  /// Set when λ_{A,f} was identified with ω̂^A.
  bool lambda_is_balayage = false;
  std::string reason;
};

/// `capacity_finite = false` declares the instance a stage of a growing
/// family that stands in for a set of infinite capacity.
SolvabilityOutcome solvability_check(const KernelMatrix& k, const Measure& omega,
                                     const SupportSet& a, bool capacity_finite,
                                     double tol = kSolverTol);

struct ExtremalDiagnostic {
  std::vector<double> sequence_values;
  std::vector<double> constants;
  std::vector<double> masses;
  Measure limit_measure;
  double limit_mass = 0.0;
  /// C_ξ = ∫U_f^ξ dξ.
  double c_xi = 0.0;
  /// |c_{K_last,f} - C_ξ|.
  double constant_gap = 0.0;
};

/// Solves the Gauss problem along an increasing chain ending at A, warm
/// starting each stage from the previous one.
ExtremalDiagnostic extremal_diagnostic(const KernelMatrix& k, const Measure& omega,
                                       const std::vector<SupportSet>& nested,
                                       double tol = kSolverTol);

}  // namespace sweep

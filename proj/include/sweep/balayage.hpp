#pragma once

// Inner pseudo-balayage of a signed charge ω onto a node subset A.
//
// ω̂^A is the unique minimizer of the Gauss functional
//     I_f(μ) = ‖μ‖² - 2∫U^ω dμ
// over positive measures carried by A. It is characterized by
//     U^{ω̂} ≥ U^ω at every node of A,  U^{ω̂} = U^ω on the support of ω̂,
// or equivalently by ∫U^{ω̂-ω} dμ ≥ 0 for every positive μ on A together with
// ∫U^{ω̂-ω} dω̂ = 0. The outer pseudo-balayage coincides with the inner one, so
// only one object is computed.

#include <sweep/core.hpp>
#include <sweep/qp.hpp>

#include <optional>
#include <stdexcept>
#include <string>

namespace sweep {

/// Residuals of the two equivalent characterizations of ω̂^A.
struct BalayageResiduals {
  /// min over i ∈ A of (U^{ω̂} - U^ω)_i; should be ≥ -tol.
  double domination = 0.0;
  /// max |(U^{ω̂} - U^ω)_i| over nodes where ω̂_i > 10·tol.
  double support_equality = 0.0;
  /// ∫U^{ω̂-ω} dω̂; should vanish.
  double energy_orthogonality = 0.0;
};

struct BalayageResult {
  Measure measure;
  /// ŵ_f(A) = I_f(ω̂^A) ∈ (-∞, 0].
  double value = 0.0;
  qp::KktReport kkt;
  BalayageResiduals residuals;
  /// ω̂^A(X).
  double mass = 0.0;
  /// h·ω⁺(X) when an Ugaheri constant is known for the kernel.
  std::optional<double> mass_bound;
  int iterations = 0;
};

/// Post-hoc residuals exceeded their limit; carries the offending report.
class CharacterizationViolated : public std::runtime_error {
 public:
  CharacterizationViolated(const std::string& invariant, double residual, double limit);
  const std::string& invariant() const { return invariant_; }
  double residual() const { return residual_; }

 private:
  std::string invariant_;
  double residual_;
};

struct BalayageOptions {
  double tol = kSolverTol;
  std::optional<double> ugaheri_h;
  /// Warm start, indexed like A.
  std::optional<Vector> start;
};

BalayageResult pseudo_balayage(const KernelMatrix& k, const Measure& omega, const SupportSet& a,
                               const BalayageOptions& options = {});

BalayageResiduals balayage_residuals(const KernelMatrix& k, const Measure& omega,
                                     const SupportSet& a, const Measure& candidate, double tol);

struct Ii1Check {
  bool holds = false;
  /// min over unit atoms μ at nodes of A of ∫U^{ν-ω} dμ.
  double atom_minimum = 0.0;
  /// ∫U^{ν-ω} dν.
  double self_integral = 0.0;
  /// Set when ν is not a positive measure carried by A.
  std::string rejected;
};

/// Checks the variational characterization for a candidate ν.
Ii1Check verify_ii1(const KernelMatrix& k, const Measure& omega, const SupportSet& a,
                    const Measure& nu, double tol);

enum class MassBoundOutcome { Holds, Violated, SkippedNoH };

/// Default relative slack for kernels that satisfy a maximum principle only
/// approximately after discretization.
inline constexpr double kDiscretizationSlack = 0.02;

/// ω̂^A(X) ≤ h·ω⁺(X)·(1 + slack). Skipped when h is unknown.
MassBoundOutcome mass_bound_check(const BalayageResult& result, std::optional<double> h,
                                  const Measure& omega, double slack = kDiscretizationSlack);

/// Minimum of I_f over {μ ≥ 0 on A, μ(X) ≤ mass_limit}.
double restricted_problem_value(const KernelMatrix& k, const Measure& omega, const SupportSet& a,
                                double mass_limit, double tol = kSolverTol);

}  // namespace sweep

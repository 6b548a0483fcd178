#pragma once

// Strictly convex quadratic programs over the nonnegative cone and over the
// probability simplex.
//
//   cone:     minimize wᵀQw - 2bᵀw  subject to w ≥ 0
//   simplex:  minimize wᵀQw + 2fᵀw  subject to w ≥ 0, Σw = 1
//
// The solvers run a monotone projected-gradient phase with Barzilai-Borwein
// steps and then a primal active-set phase that solves the reduced linear
// system on the detected support exactly. All residuals are reported on the
// potential scale, i.e. for half the objective gradient: r = Qw - b (cone)
// and r = Qw + f - c (simplex, c the multiplier of the mass constraint).

#include <sweep/core.hpp>

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sweep::qp {

struct KktReport {
  /// max_i max(-r_i, 0): how far the reduced gradient is from dual feasibility.
  double stationarity_residual = 0.0;
  /// max_i |w_i r_i|.
  double complementarity_residual = 0.0;
  /// max_i max(-w_i, 0), plus |Σw - 1| for the simplex problem.
  double feasibility_residual = 0.0;
  /// Lagrange constant c of the mass constraint (simplex only).
  std::optional<double> multiplier;

  double worst() const {
    return std::max({stationarity_residual, complementarity_residual, feasibility_residual});
  }
};

struct SolverOptions {
  double tol = kSolverTol;
  int max_iter = 20000;
  /// Index i is treated as active when w_i ≤ active_factor · tol.
  double active_factor = 10.0;
  /// Upper bound on projected-gradient iterations before the active-set phase.
  int max_gradient_iter = 3000;
  /// Feasible or infeasible starting point; projected before use.
  std::optional<Vector> start;
};

struct Solution {
  Vector weights;
  double objective = 0.0;
  KktReport kkt;
  /// Objective after every accepted step, starting with the initial point.
  std::vector<double> trace;
  int gradient_iterations = 0;
  int active_set_iterations = 0;
};

class MaxIterExceeded : public std::runtime_error {
 public:
  MaxIterExceeded(Vector best, KktReport report);
  const Vector& best() const { return best_; }
  const KktReport& report() const { return report_; }

 private:
  Vector best_;
  KktReport report_;
};

class TooLarge : public std::invalid_argument {
 public:
  explicit TooLarge(Index k);
};

class ConeQpProblem {
 public:
  /// Throws NotPositiveDefinite when Q fails the energy principle.
  ConeQpProblem(Matrix q, Vector b);

  Index size() const { return b_.size(); }
  const Matrix& q() const { return q_; }
  const Vector& b() const { return b_; }

  double objective(const Vector& w) const;
  Vector reduced_gradient(const Vector& w) const;
  KktReport kkt(const Vector& w) const;

 private:
  Matrix q_;
  Vector b_;
};

class SimplexQpProblem {
 public:
  SimplexQpProblem(Matrix q, Vector f);

  Index size() const { return f_.size(); }
  const Matrix& q() const { return q_; }
  const Vector& f() const { return f_; }

  double objective(const Vector& w) const;
  /// Qw + f.
  Vector weighted_gradient(const Vector& w) const;
  /// ∫(Qw + f) dw, the multiplier recovered by integration.
  double integral_constant(const Vector& w) const;
  KktReport kkt(const Vector& w, double multiplier) const;

 private:
  Matrix q_;
  Vector f_;
};

Solution solve_cone_qp(const ConeQpProblem& p, const SolverOptions& options = {});
Solution solve_simplex_qp(const SimplexQpProblem& p, const SolverOptions& options = {});

/// Euclidean projection onto the probability simplex (sort based).
Vector project_to_simplex(const Vector& v);

/// Exhaustive oracles: enumerate every support, solve the reduced system and
/// keep the cheapest candidate that satisfies the KKT sign conditions.
/// Exponential in k; limited to k ≤ 14.
Vector brute_force_cone(const ConeQpProblem& p);
Vector brute_force_simplex(const SimplexQpProblem& p);

inline constexpr Index kBruteForceLimit = 14;

}  // namespace sweep::qp

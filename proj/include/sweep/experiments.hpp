#pragma once

// Scripted checks of the convergence, inequality and solvability statements
// for pseudo-balayage and the Gauss problem on finite node sets.

#include <sweep/balayage.hpp>
#include <sweep/core.hpp>
#include <sweep/gauss.hpp>
#include <sweep/instances.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sweep::experiments {

enum class Direction { Up, Down };

std::string to_string(Direction d);

struct ConvergenceReport {
  Direction direction = Direction::Up;
  /// ‖ω̂^{K_j} - ω̂^A‖ per stage.
  std::vector<double> stage_norms;
  /// ŵ_f(K_j) per stage.
  std::vector<double> stage_values;
  std::vector<double> stage_masses;
  /// w_f(K_j) per stage.
  std::vector<double> gauss_values;
  /// 2I_f(ω̂^K) - 2I_f(ω̂^{K'}) - ‖ω̂^K - ω̂^{K'}‖² for each adjacent pair with
  /// K ⊂ K'; nonnegative up to rounding.
  std::vector<double> chain_slack;
  Measure limit;
};

/// Increasing chain K_1 ⊂ ... ⊂ K_last = A.
ConvergenceReport monotone_up(const KernelMatrix& k, const Measure& omega,
                              const std::vector<SupportSet>& chain, double tol = kSolverTol);

/// Decreasing chain A_1 ⊃ ... ⊃ A_last; the intersection A is the last set.
ConvergenceReport monotone_down(const KernelMatrix& k, const Measure& omega,
                                const std::vector<SupportSet>& chain, double tol = kSolverTol);

/// Fraction of λ-mass that the leakage signature looks at: the outermost 20%
/// of nodes by distance from the origin.
inline constexpr double kOuterNodeFraction = 0.2;
/// Leak fraction at or above which a truncation shows escaping mass.
inline constexpr double kLeakThreshold = 0.5;

struct ScanCell {
  int truncation = 0;
  double balayage_mass = 0.0;
  double balayage_value = 0.0;
  double gauss_value = 0.0;
  double equilibrium_constant = 0.0;
  /// λ-mass on the outermost nodes.
  double leak_fraction = 0.0;
  bool lambda_is_balayage = false;
};

enum class ScanPattern { Stabilizes, Leaks, Mixed };

std::string to_string(ScanPattern p);

struct ScanRow {
  double scaling = 1.0;
  double omega_positive_mass = 0.0;
  double omega_mass = 0.0;
  std::vector<ScanCell> cells;
  ScanPattern pattern = ScanPattern::Mixed;
};

struct ScanTable {
  std::vector<int> truncations;
  std::vector<ScanRow> rows;
};

/// For each truncation j_max of the shell-union family and each scaling q of
/// the charge, solves ω̂ and λ and records the leakage signature. A row
/// stabilizes when the leak fraction stays below the threshold at the last
/// two truncations and leaks when it stays at or above it.
ScanTable solvability_scan(const InstanceSpec& family, std::span<const int> truncations,
                           std::span<const double> scalings, double tol = kSolverTol);

/// Fraction of `lambda` carried by the outermost kOuterNodeFraction of the
/// nodes in `a`, ranked by Euclidean norm of `points` rows.
double leak_fraction(const Measure& lambda, const SupportSet& a, const Matrix& points);

struct UgaheriWitness {
  std::vector<Index> subset;
  double ratio = 1.0;
};

struct UgaheriEstimate {
  /// Running maximum of max_X U^μ / max_{S(μ)} U^μ; a lower bound for any
  /// valid Ugaheri constant.
  double h_hat = 1.0;
  std::vector<UgaheriWitness> witnesses;
  int samples = 0;
};

/// Deterministic subset sampler (splitmix64) so that estimates reproduce
/// across platforms.
class SubsetSampler {
 public:
  explicit SubsetSampler(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  /// Random nonempty subset of [0, m), sorted.
  std::vector<Index> subset(Index m);

 private:
  std::uint64_t state_;
};

inline constexpr int kUgaheriWitnesses = 5;

/// Probes the maximum principle on capacitary measures of `trials` sampled
/// subsets plus any `extra` positive measures, over all nodes.
UgaheriEstimate ugaheri_estimate(const KernelMatrix& k, int trials, std::uint64_t seed = 1,
                                 std::span<const Measure> extra = {}, double tol = kSolverTol);

}  // namespace sweep::experiments

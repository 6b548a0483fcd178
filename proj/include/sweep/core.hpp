#pragma once

// Finite-state potential theory on a node set with the discrete topology.
//
// Every subset of nodes is compact and every nonempty subset has positive
// capacity under a strictly positive definite kernel, so "nearly everywhere"
// and "quasi-everywhere" statements reduce to "at every node". Vague and
// strong convergence coincide with convergence in the energy norm.

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sweep {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Default tolerance for plain arithmetic identities.
inline constexpr double kArithmeticTol = 1e-10;
/// Default tolerance for solver KKT residuals.
inline constexpr double kSolverTol = 1e-8;

class SizeMismatch : public std::invalid_argument {
 public:
  SizeMismatch(Index expected, Index got, const std::string& what);
};

/// Entries that are not symmetric, negative or non-finite.
class InvalidKernel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when the energy principle fails. The witness w has wᵀKw ≤ 0 and is
/// scaled so that its largest-magnitude entry equals +1.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(Vector witness, double quadratic_form);

  const Vector& witness() const { return witness_; }
  double quadratic_form() const { return quadratic_form_; }

 private:
  Vector witness_;
  double quadratic_form_;
};

struct PdCertificate {
  /// Smallest pivot of the completed Cholesky factorization.
  double min_pivot = 0.0;
  /// Smallest eigenvalue, only computed for small matrices.
  std::optional<double> min_eigenvalue;
};

/// Verifies the energy principle by Cholesky factorization. Throws
/// NotPositiveDefinite with an eigenvector witness on failure.
PdCertificate check_energy_principle(const Matrix& entries);

/// A chain of support sets that is not strictly monotone.
class NotNested : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyIntersection : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SupportSet {
 public:
  /// `indices` must be strictly increasing, nonempty and inside [0, universe).
  SupportSet(std::vector<Index> indices, Index universe, std::string label = {});

  static SupportSet all(Index universe, std::string label = {});
  static SupportSet range(Index first, Index last, Index universe,
                          std::string label = {});

  const std::vector<Index>& indices() const { return indices_; }
  Index size() const { return static_cast<Index>(indices_.size()); }
  Index universe() const { return universe_; }
  const std::string& label() const { return label_; }

  bool contains(Index i) const;
  bool is_subset_of(const SupportSet& other) const;
  bool operator==(const SupportSet& other) const {
    return indices_ == other.indices_ && universe_ == other.universe_;
  }

 private:
  std::vector<Index> indices_;
  Index universe_;
  std::string label_;
};

enum class ChainDirection { Increasing, Decreasing };

/// Throws NotNested unless each set strictly contains (or is strictly
/// contained in) its predecessor.
void require_nested(const std::vector<SupportSet>& chain, ChainDirection direction);

/// Symmetric, nonnegative, strictly positive definite matrix of kernel values.
class KernelMatrix {
 public:
  explicit KernelMatrix(Matrix entries);

  Index size() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }
  double operator()(Index i, Index j) const { return entries_(i, j); }
  const PdCertificate& certificate() const { return certificate_; }

  /// Principal submatrix K[A, A].
  Matrix restricted(const SupportSet& a) const;

 private:
  Matrix entries_;
  PdCertificate certificate_;
};

/// Signed measure as atom masses per node.
class Measure {
 public:
  Measure() = default;
  explicit Measure(Vector weights) : weights_(std::move(weights)) {}

  static Measure zero(Index m) { return Measure(Vector::Zero(m)); }
  static Measure atom(Index m, Index node, double mass = 1.0);
  /// Embeds `local` (indexed like `a`) into the full node space.
  static Measure embed(const Vector& local, const SupportSet& a);

  Index size() const { return weights_.size(); }
  const Vector& weights() const { return weights_; }
  double operator[](Index i) const { return weights_[i]; }

  Measure positive_part() const;
  Measure negative_part() const;
  Measure variation() const;
  double total_mass() const { return weights_.sum(); }
  bool is_positive() const { return (weights_.array() >= 0.0).all(); }
  /// True when every node outside `a` carries zero weight.
  bool supported_on(const SupportSet& a) const;
  Vector restricted(const SupportSet& a) const;

  friend Measure operator+(const Measure& a, const Measure& b);
  friend Measure operator-(const Measure& a, const Measure& b);
  friend Measure operator*(double s, const Measure& a);

 private:
  Vector weights_;
};

enum class FieldOrigin { FromCharge, Direct };

/// External field f on the node set. A field generated by a charge ω is
/// f = -U^ω.
class Field {
 public:
  Field(Vector values, FieldOrigin origin) : values_(std::move(values)), origin_(origin) {}

  static Field from_charge(const KernelMatrix& k, const Measure& omega);
  static Field direct(Vector values);

  const Vector& values() const { return values_; }
  FieldOrigin origin() const { return origin_; }

 private:
  Vector values_;
  FieldOrigin origin_;
};

/// U^μ = K μ.
Vector potential(const KernelMatrix& k, const Measure& mu);
/// I(μ, ν) = μᵀ K ν.
double mutual_energy(const KernelMatrix& k, const Measure& mu, const Measure& nu);
/// ‖μ‖² = I(μ, μ).
double energy(const KernelMatrix& k, const Measure& mu);
/// ‖μ - ν‖ in the energy norm.
double strong_distance(const KernelMatrix& k, const Measure& mu, const Measure& nu);
/// I_f(μ) = ‖μ‖² + 2∫f dμ with f = -U^ω, i.e. ‖μ‖² - 2 I(μ, ω).
double gauss_functional(const KernelMatrix& k, const Measure& omega, const Measure& mu);
/// U_f^μ = U^μ + f.
Vector weighted_potential(const KernelMatrix& k, const Field& f, const Measure& mu);

}  // namespace sweep

#pragma once

// Deterministic discretizations of Riesz, Newtonian and logarithmic potential
// problems in R^n.
//
// Off-diagonal entries are exact kernel values κ(x_i, x_j). The kernels are
// infinite on the diagonal, so K_ii is the self-interaction at the local
// scale r_i: r_i^{α-n} (Riesz) or -log r_i (logarithmic), where r_i is half
// the distance to the nearest other node or a fixed length.

#include <sweep/core.hpp>
#include <sweep/io.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sweep {

struct RieszKernel {
  double alpha = 2.0;
};

/// -log|x - y| restricted to a closed disc of radius < 1 in R².
struct LogKernel {
  double radius = 0.4;
};

using KernelDescriptor = std::variant<RieszKernel, LogKernel>;

struct SphereGeometry {
  double radius = 1.0;
  int m = 100;
  std::vector<double> center;  // empty means the origin
};

struct BallGeometry {
  double radius = 1.0;
  int m = 100;
};

struct SegmentGeometry {
  std::vector<double> a;
  std::vector<double> b;
  int m = 10;
};

/// {r ≤ |x| ≤ R}, sampled by concentric circles (n = 2) or spheres (n = 3).
struct AnnulusGeometry {
  double inner = 0.5;
  double outer = 1.0;
  int m = 100;
};

/// Union of spheres A_j ⊂ {q^j ≤ |x| < q^{j+1}}, j = j_min..j_max. Shell j is
/// a sphere of radius scale·q^{exponent·j}; with exponent 1 it is centered at
/// the origin, otherwise at distance q^j(1 + q)/2 along the first axis.
/// Shells with zero nodes are empty.
struct ShellUnionGeometry {
  double q = 2.0;
  int j_min = 0;
  int j_max = 3;
  std::vector<int> per_shell_m{100};
  double scale = 1.5;
  double exponent = 1.0;

  int nodes_in_shell(int j) const;
  double shell_radius(int j) const;
  std::vector<double> shell_center(int j, int dimension) const;
};

using Geometry = std::variant<SphereGeometry, BallGeometry, SegmentGeometry, AnnulusGeometry,
                              ShellUnionGeometry>;

struct NearestNeighborHalf {};
struct FixedLength {
  double length = 0.01;
};
using Regularization = std::variant<NearestNeighborHalf, FixedLength>;

struct ChargeAtom {
  std::vector<double> point;
  double mass = 1.0;
};

struct InstanceSpec {
  int dimension = 3;
  KernelDescriptor kernel = RieszKernel{2.0};
  Geometry geometry = SphereGeometry{};
  Regularization regularization = NearestNeighborHalf{};
  std::vector<ChargeAtom> charge;
  /// Require the charge to sit away from the node set.
  bool charge_off_closure = true;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// h for the kernel's maximum principle: 1 for α ≤ 2 and for the
  /// logarithmic kernel, 2^{n-α} for 2 < α < n.
  double ugaheri_constant() const;
};

class DuplicatePoints : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ChargeOnNode : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Node coordinates, one point per row, after any logarithmic rescaling.
Matrix generate_nodes(const InstanceSpec& spec);

/// Kernel matrix on the node set alone.
KernelMatrix build_kernel_matrix(const InstanceSpec& spec);

/// Nodes followed by the charge atoms as auxiliary nodes. The support set
/// `nodes` plays the role of A; ω lives on the auxiliary nodes.
struct Instance {
  Matrix points;
  KernelMatrix kernel;
  Measure omega;
  SupportSet nodes;
  double ugaheri_h = 1.0;
  /// Shell index per node for shell unions, otherwise empty.
  std::vector<int> shell_of_node;
};

Instance build_instance(const InstanceSpec& spec);

struct ChargeField {
  Measure omega;
  /// f_i = -Σ_k mass_k κ(x_i, y_k) on the nodes.
  Field field;
};

/// Field of the charge on the node set, summed directly from the geometry.
ChargeField field_from_charge(const InstanceSpec& spec, const Instance& instance);

/// Exact kernel value for distinct points.
double kernel_value(const KernelDescriptor& kernel, int dimension, double distance);

enum class ThinnessVerdict { ApparentlyThin, ApparentlyNotThin };

std::string to_string(ThinnessVerdict v);

struct ThinnessReport {
  double q = 2.0;
  std::vector<int> shells;
  std::vector<double> shell_capacities;
  std::vector<double> partial_sums;
  /// Least-squares slope of log c(A_j) against j·(n-α)·log q; 1 means the
  /// capacities grow exactly like q^{j(n-α)}.
  double fitted_exponent = 0.0;
  ThinnessVerdict verdict = ThinnessVerdict::ApparentlyThin;
};

/// Heuristic thinness-at-infinity verdict from the Wiener-type series
/// Σ c(A_j)/q^{j(n-α)} over the shells of a Riesz shell union.
ThinnessReport thinness_series(const InstanceSpec& spec, double tol = kSolverTol);

/// Relative growth exponent above which a shell family is declared not thin.
inline constexpr double kNotThinExponent = 0.9;

io::json instance_spec_to_json(const InstanceSpec& spec);
InstanceSpec instance_spec_from_json(const io::json& j, const std::string& path = "/instance/spec");

}  // namespace sweep

#include <sweep/gauss.hpp>
#include <sweep/instances.hpp>
#include <sweep/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sweep {

namespace {

constexpr double kGoldenAngle = std::numbers::pi * (3.0 - 2.2360679774997896964);

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void fail(const std::string& path, const std::string& message) {
  throw std::invalid_argument(path + ": " + message);
}

// Points on the unit sphere (n = 3, Fibonacci lattice) or unit circle (n = 2).
// `twist` rotates the lattice so stacked shells do not align.
Matrix unit_sphere(int dimension, int m, double twist = 0.0) {
  Matrix p(m, dimension);
  for (int i = 0; i < m; ++i) {
    if (dimension == 2) {
      const double t = 2.0 * std::numbers::pi * (i + 0.5 * twist) / m;
      p(i, 0) = std::cos(t);
      p(i, 1) = std::sin(t);
    } else {
      const double z = 1.0 - (2.0 * i + 1.0) / m;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = kGoldenAngle * i + 2.0 * std::numbers::pi * twist;
      p(i, 0) = rho * std::cos(phi);
      p(i, 1) = rho * std::sin(phi);
      p(i, 2) = z;
    }
  }
  return p;
}

// Concentric shells at the given radii with node counts proportional to the
// shell measure r^{n-1}.
Matrix stratified_shells(int dimension, int m, const std::vector<double>& radii) {
  double total = 0.0;
  for (double r : radii) total += std::pow(r, dimension - 1);
  std::vector<int> counts;
  int assigned = 0;
  for (std::size_t l = 0; l < radii.size(); ++l) {
    int c = std::max(1, static_cast<int>(std::lround(m * std::pow(radii[l], dimension - 1) / total)));
    counts.push_back(c);
    assigned += c;
  }
  // Absorb rounding in the outermost shell.
  counts.back() = std::max(1, counts.back() + (m - assigned));
  int rows = 0;
  for (int c : counts) rows += c;
  Matrix p(rows, dimension);
  int at = 0;
  for (std::size_t l = 0; l < radii.size(); ++l) {
    const Matrix shell = unit_sphere(dimension, counts[l], 0.381966 * static_cast<double>(l));
    p.middleRows(at, counts[l]) = radii[l] * shell;
    at += counts[l];
  }
  return p;
}

Matrix ball_nodes(int dimension, double radius, int m) {
  if (dimension == 2) {
    // Vogel sunflower: equal-area radial stratification of the disc.
    Matrix p(m, 2);
    for (int i = 0; i < m; ++i) {
      const double r = radius * std::sqrt((i + 0.5) / m);
      p(i, 0) = r * std::cos(kGoldenAngle * i);
      p(i, 1) = r * std::sin(kGoldenAngle * i);
    }
    return p;
  }
  const double volume = 4.0 / 3.0 * std::numbers::pi * std::pow(radius, 3);
  const double spacing = std::cbrt(volume / m);
  const int layers = std::max(1, static_cast<int>(std::lround(radius / spacing)));
  std::vector<double> radii;
  for (int l = 0; l < layers; ++l) radii.push_back((l + 0.5) * radius / layers);
  return stratified_shells(dimension, m, radii);
}

Matrix annulus_nodes(int dimension, double inner, double outer, int m) {
  const double measure = dimension == 2
                             ? std::numbers::pi * (outer * outer - inner * inner)
                             : 4.0 / 3.0 * std::numbers::pi * (std::pow(outer, 3) - std::pow(inner, 3));
  const double spacing = std::pow(measure / m, 1.0 / dimension);
  const int layers = std::max(1, static_cast<int>(std::lround((outer - inner) / spacing)));
  std::vector<double> radii;
  for (int l = 0; l < layers; ++l) radii.push_back(inner + (l + 0.5) * (outer - inner) / layers);
  return stratified_shells(dimension, m, radii);
}

Eigen::RowVectorXd as_row(const std::vector<double>& v, int dimension) {
  Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(dimension);
  for (std::size_t i = 0; i < v.size(); ++i) r[static_cast<Index>(i)] = v[i];
  return r;
}

Matrix raw_nodes(const InstanceSpec& spec, std::vector<int>* shells) {
  const int n = spec.dimension;
  return std::visit(
      Overloaded{
          [&](const SphereGeometry& g) -> Matrix {
            Matrix p = g.radius * unit_sphere(n, g.m);
            p.rowwise() += as_row(g.center, n);
            return p;
          },
          [&](const BallGeometry& g) -> Matrix { return ball_nodes(n, g.radius, g.m); },
          [&](const SegmentGeometry& g) -> Matrix {
            Matrix p(g.m, n);
            const Eigen::RowVectorXd a = as_row(g.a, n);
            const Eigen::RowVectorXd b = as_row(g.b, n);
            for (int i = 0; i < g.m; ++i) {
              const double t = g.m == 1 ? 0.5 : static_cast<double>(i) / (g.m - 1);
              p.row(i) = a + t * (b - a);
            }
            return p;
          },
          [&](const AnnulusGeometry& g) -> Matrix { return annulus_nodes(n, g.inner, g.outer, g.m); },
          [&](const ShellUnionGeometry& g) -> Matrix {
            int rows = 0;
            for (int j = g.j_min; j <= g.j_max; ++j) rows += g.nodes_in_shell(j);
            Matrix p(rows, n);
            int at = 0;
            for (int j = g.j_min; j <= g.j_max; ++j) {
              const int c = g.nodes_in_shell(j);
              if (c == 0) continue;
              Matrix shell = g.shell_radius(j) * unit_sphere(n, c, 0.381966 * j);
              shell.rowwise() += as_row(g.shell_center(j, n), n);
              p.middleRows(at, c) = shell;
              if (shells) shells->insert(shells->end(), static_cast<std::size_t>(c), j);
              at += c;
            }
            return p;
          },
      },
      spec.geometry);
}

Matrix charge_points(const InstanceSpec& spec) {
  Matrix p(static_cast<Index>(spec.charge.size()), spec.dimension);
  for (std::size_t k = 0; k < spec.charge.size(); ++k) {
    p.row(static_cast<Index>(k)) = as_row(spec.charge[k].point, spec.dimension);
  }
  return p;
}

// Uniform scale that moves every point into the closed disc of the
// logarithmic kernel; 1 when already inside.
double log_rescale(const InstanceSpec& spec, const Matrix& nodes, const Matrix& charges) {
  const auto* log = std::get_if<LogKernel>(&spec.kernel);
  if (!log) return 1.0;
  double reach = 0.0;
  if (nodes.rows()) reach = nodes.rowwise().norm().maxCoeff();
  if (charges.rows()) reach = std::max(reach, charges.rowwise().norm().maxCoeff());
  return reach > log->radius ? log->radius / reach : 1.0;
}

double diagonal_value(const KernelDescriptor& kernel, int dimension, double scale) {
  if (const auto* r = std::get_if<RieszKernel>(&kernel)) return std::pow(scale, r->alpha - dimension);
  return -std::log(scale);
}

// Half the distance from each point in `from` to the nearest other point of
// `to`; `same` means the two sets coincide and self-pairs are skipped.
Vector half_nearest(const Matrix& from, const Matrix& to, bool same) {
  Vector out(from.rows());
  parallel_for(static_cast<std::size_t>(from.rows()), [&](std::size_t ii) {
    const auto i = static_cast<Index>(ii);
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < to.rows(); ++j) {
      if (same && j == i) continue;
      best = std::min(best, (from.row(i) - to.row(j)).norm());
    }
    out[i] = 0.5 * best;
  });
  return out;
}

double point_scale(const Matrix& p) {
  return p.rows() ? std::max(1.0, p.cwiseAbs().maxCoeff()) : 1.0;
}

Matrix assemble(const InstanceSpec& spec, const Matrix& points, const Vector& local_scale) {
  const Index m = points.rows();
  Matrix k(m, m);
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t ii) {
    const auto i = static_cast<Index>(ii);
    k(i, i) = diagonal_value(spec.kernel, spec.dimension, local_scale[i]);
    for (Index j = 0; j < i; ++j) {
      k(i, j) = kernel_value(spec.kernel, spec.dimension, (points.row(i) - points.row(j)).norm());
    }
  });
  k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
  return k;
}

struct Layout {
  Matrix nodes;
  Matrix charges;
  Vector node_scale;
  Vector charge_scale;
  std::vector<int> shells;
};

Layout layout(const InstanceSpec& spec) {
  spec.validate();
  Layout out;
  out.nodes = raw_nodes(spec, &out.shells);
  out.charges = charge_points(spec);
  const double s = log_rescale(spec, out.nodes, out.charges);
  out.nodes *= s;
  out.charges *= s;

  const double tiny = 1e-12 * point_scale(out.nodes);
  const Vector nn = out.nodes.rows() > 1 ? half_nearest(out.nodes, out.nodes, true)
                                          : Vector::Constant(out.nodes.rows(), 0.5);
  if (out.nodes.rows() > 1 && 2.0 * nn.minCoeff() <= tiny) {
    throw DuplicatePoints("generated node set contains coincident points");
  }
  if (out.charges.rows()) {
    if (2.0 * half_nearest(out.charges, out.nodes, false).minCoeff() <= tiny) {
      throw ChargeOnNode("a charge atom coincides with a node");
    }
    if (out.charges.rows() > 1 && 2.0 * half_nearest(out.charges, out.charges, true).minCoeff() <= tiny) {
      throw DuplicatePoints("two charge atoms coincide");
    }
  }

  if (const auto* fixed = std::get_if<FixedLength>(&spec.regularization)) {
    out.node_scale = Vector::Constant(out.nodes.rows(), fixed->length);
    out.charge_scale = Vector::Constant(out.charges.rows(), fixed->length);
  } else {
    out.node_scale = nn;
    Matrix all(out.nodes.rows() + out.charges.rows(), spec.dimension);
    all << out.nodes, out.charges;
    out.charge_scale.resize(out.charges.rows());
    for (Index k = 0; k < out.charges.rows(); ++k) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < all.rows(); ++j) {
        if (j == out.nodes.rows() + k) continue;
        best = std::min(best, (out.charges.row(k) - all.row(j)).norm());
      }
      out.charge_scale[k] = 0.5 * best;
    }
  }
  return out;
}

}  // namespace

int ShellUnionGeometry::nodes_in_shell(int j) const {
  const auto idx = static_cast<std::size_t>(j - j_min);
  return per_shell_m.size() == 1 ? per_shell_m.front() : per_shell_m.at(idx);
}

double ShellUnionGeometry::shell_radius(int j) const { return scale * std::pow(q, exponent * j); }

std::vector<double> ShellUnionGeometry::shell_center(int j, int dimension) const {
  std::vector<double> c(static_cast<std::size_t>(dimension), 0.0);
  if (exponent != 1.0) c[0] = std::pow(q, j) * (1.0 + q) / 2.0;
  return c;
}

void InstanceSpec::validate() const {
  const int n = dimension;
  if (n < 2) fail("/dimension", "must be at least 2");
  std::visit(Overloaded{
                 [&](const RieszKernel& k) {
                   if (!(k.alpha > 0.0 && k.alpha < n)) fail("/kernel/alpha", "requires 0 < alpha < n");
                 },
                 [&](const LogKernel& k) {
                   if (n != 2) fail("/kernel", "logarithmic kernel requires dimension 2");
                   if (!(k.radius > 0.0 && k.radius < 1.0)) fail("/kernel/radius", "requires 0 < radius < 1");
                 },
             },
             kernel);
  const bool round_geometry = !std::holds_alternative<SegmentGeometry>(geometry);
  if (round_geometry && n != 2 && n != 3) fail("/geometry", "round geometries support dimension 2 or 3");
  std::visit(
      Overloaded{
          [&](const SphereGeometry& g) {
            if (!(g.radius > 0.0)) fail("/geometry/radius", "must be positive");
            if (g.m < 1) fail("/geometry/m", "must be positive");
            if (!g.center.empty() && static_cast<int>(g.center.size()) != n) {
              fail("/geometry/center", "must have dimension entries");
            }
          },
          [&](const BallGeometry& g) {
            if (!(g.radius > 0.0)) fail("/geometry/radius", "must be positive");
            if (g.m < 1) fail("/geometry/m", "must be positive");
          },
          [&](const SegmentGeometry& g) {
            if (static_cast<int>(g.a.size()) != n || static_cast<int>(g.b.size()) != n) {
              fail("/geometry", "segment endpoints must have dimension entries");
            }
            if (g.a == g.b) fail("/geometry", "segment endpoints coincide");
            if (g.m < 1) fail("/geometry/m", "must be positive");
          },
          [&](const AnnulusGeometry& g) {
            if (!(g.inner >= 0.0 && g.outer > g.inner)) fail("/geometry", "requires 0 <= inner < outer");
            if (g.m < 1) fail("/geometry/m", "must be positive");
          },
          [&](const ShellUnionGeometry& g) {
            if (!(g.q > 1.0)) fail("/geometry/q", "must exceed 1");
            if (g.j_min > g.j_max) fail("/geometry", "requires j_min <= j_max");
            const auto shells = static_cast<std::size_t>(g.j_max - g.j_min + 1);
            if (g.per_shell_m.size() != 1 && g.per_shell_m.size() != shells) {
              fail("/geometry/per_shell_m", "needs one entry or one per shell");
            }
            if (!(g.scale > 0.0 && g.exponent > 0.0)) fail("/geometry", "scale and exponent must be positive");
            int total = 0;
            for (int j = g.j_min; j <= g.j_max; ++j) {
              if (g.nodes_in_shell(j) < 0) fail("/geometry/per_shell_m", "must be nonnegative");
              total += g.nodes_in_shell(j);
              const double lo = std::pow(g.q, j);
              const double hi = lo * g.q;
              const double r = g.shell_radius(j);
              if (g.exponent == 1.0 ? (r < lo || r >= hi) : (r >= (hi - lo) / 2.0)) {
                fail("/geometry", "shell " + std::to_string(j) + " leaves {q^j <= |x| < q^(j+1)}");
              }
            }
            if (total == 0) fail("/geometry/per_shell_m", "all shells are empty");
          },
      },
      geometry);
  if (const auto* f = std::get_if<FixedLength>(&regularization)) {
    if (!(f->length > 0.0)) fail("/regularization/length", "must be positive");
  }
  for (std::size_t k = 0; k < charge.size(); ++k) {
    if (static_cast<int>(charge[k].point.size()) != n) {
      fail("/charge/" + std::to_string(k) + "/point", "must have dimension entries");
    }
    if (!std::isfinite(charge[k].mass)) fail("/charge/" + std::to_string(k) + "/mass", "must be finite");
  }
}

double InstanceSpec::ugaheri_constant() const {
  if (const auto* r = std::get_if<RieszKernel>(&kernel)) {
    return r->alpha <= 2.0 ? 1.0 : std::pow(2.0, dimension - r->alpha);
  }
  return 1.0;
}

double kernel_value(const KernelDescriptor& kernel, int dimension, double distance) {
  if (const auto* r = std::get_if<RieszKernel>(&kernel)) return std::pow(distance, r->alpha - dimension);
  return -std::log(distance);
}

Matrix generate_nodes(const InstanceSpec& spec) { return layout(spec).nodes; }

KernelMatrix build_kernel_matrix(const InstanceSpec& spec) {
  const Layout l = layout(spec);
  return KernelMatrix(assemble(spec, l.nodes, l.node_scale));
}

Instance build_instance(const InstanceSpec& spec) {
  Layout l = layout(spec);
  const Index nodes = l.nodes.rows();
  const Index charges = l.charges.rows();
  Matrix points(nodes + charges, spec.dimension);
  points << l.nodes, l.charges;
  Vector scale(nodes + charges);
  scale << l.node_scale, l.charge_scale;

  Vector weights = Vector::Zero(nodes + charges);
  for (Index k = 0; k < charges; ++k) weights[nodes + k] = spec.charge[static_cast<std::size_t>(k)].mass;

  return Instance{points,
                  KernelMatrix(assemble(spec, points, scale)),
                  Measure(std::move(weights)),
                  SupportSet::range(0, nodes, nodes + charges, "A"),
                  spec.ugaheri_constant(),
                  std::move(l.shells)};
}

ChargeField field_from_charge(const InstanceSpec& spec, const Instance& instance) {
  const Index nodes = instance.nodes.size();
  Vector f = Vector::Zero(nodes);
  for (Index i = 0; i < nodes; ++i) {
    for (Index k = nodes; k < instance.points.rows(); ++k) {
      const double d = (instance.points.row(i) - instance.points.row(k)).norm();
      if (d == 0.0) throw ChargeOnNode("charge atom at node " + std::to_string(i));
      f[i] -= instance.omega[k] * kernel_value(spec.kernel, spec.dimension, d);
    }
  }
  return {instance.omega, Field(std::move(f), FieldOrigin::FromCharge)};
}

std::string to_string(ThinnessVerdict v) {
  return v == ThinnessVerdict::ApparentlyThin ? "ApparentlyThin" : "ApparentlyNotThin";
}

ThinnessReport thinness_series(const InstanceSpec& spec, double tol) {
  spec.validate();
  const auto* shells = std::get_if<ShellUnionGeometry>(&spec.geometry);
  const auto* riesz = std::get_if<RieszKernel>(&spec.kernel);
  if (!shells || !riesz) throw std::invalid_argument("thinness series needs a Riesz shell union");
  const double decay = spec.dimension - riesz->alpha;

  ThinnessReport out;
  out.q = shells->q;
  for (int j = shells->j_min; j <= shells->j_max; ++j) out.shells.push_back(j);
  out.shell_capacities.assign(out.shells.size(), 0.0);
  parallel_for(out.shells.size(), [&](std::size_t s) {
    const int j = out.shells[s];
    if (shells->nodes_in_shell(j) == 0) return;
    InstanceSpec single = spec;
    single.charge.clear();
    ShellUnionGeometry g = *shells;
    g.j_min = g.j_max = j;
    g.per_shell_m = {shells->nodes_in_shell(j)};
    single.geometry = g;
    const KernelMatrix k = build_kernel_matrix(single);
    out.shell_capacities[s] = capacitary_measure(k, SupportSet::all(k.size()), tol).capacity;
  });

  double sum = 0.0;
  std::vector<double> xs, ys;
  for (std::size_t s = 0; s < out.shells.size(); ++s) {
    const int j = out.shells[s];
    const double c = out.shell_capacities[s];
    sum += c / std::pow(out.q, j * decay);
    out.partial_sums.push_back(sum);
    if (c > 0.0) {
      xs.push_back(j * decay * std::log(out.q));
      ys.push_back(std::log(c));
    }
  }
  if (xs.size() >= 2) {
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    out.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  out.verdict = out.fitted_exponent >= kNotThinExponent ? ThinnessVerdict::ApparentlyNotThin
                                                        : ThinnessVerdict::ApparentlyThin;
  return out;
}

namespace {

using io::FormatError;
using io::json;

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw FormatError(path, "expected an object");
  if (!j.contains(key)) throw FormatError(path + "/" + key, "missing");
  return j[key];
}

double number(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number()) throw FormatError(path + "/" + key, "expected a number");
  return v.get<double>();
}

double number_or(const json& j, const std::string& key, const std::string& path, double fallback) {
  return j.contains(key) ? number(j, key, path) : fallback;
}

int integer(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number_integer()) throw FormatError(path + "/" + key, "expected an integer");
  return v.get<int>();
}

int integer_or(const json& j, const std::string& key, const std::string& path, int fallback) {
  return j.contains(key) ? integer(j, key, path) : fallback;
}

std::vector<double> point(const json& j, const std::string& path) {
  const Vector v = io::vector_from_json(j, path);
  return {v.data(), v.data() + v.size()};
}

std::string type_of(const json& j, const std::string& path) {
  const json& t = field(j, "type", path);
  if (!t.is_string()) throw FormatError(path + "/type", "expected a string");
  return t.get<std::string>();
}

}  // namespace

io::json instance_spec_to_json(const InstanceSpec& spec) {
  json out;
  out["dimension"] = spec.dimension;
  out["kernel"] = std::visit(
      Overloaded{
          [](const RieszKernel& k) { return json{{"type", "riesz"}, {"alpha", k.alpha}}; },
          [](const LogKernel& k) { return json{{"type", "logarithmic"}, {"radius", k.radius}}; },
      },
      spec.kernel);
  out["geometry"] = std::visit(
      Overloaded{
          [](const SphereGeometry& g) {
            json j{{"type", "sphere"}, {"radius", g.radius}, {"m", g.m}};
            if (!g.center.empty()) j["center"] = g.center;
            return j;
          },
          [](const BallGeometry& g) { return json{{"type", "ball"}, {"radius", g.radius}, {"m", g.m}}; },
          [](const SegmentGeometry& g) {
            return json{{"type", "segment"}, {"a", g.a}, {"b", g.b}, {"m", g.m}};
          },
          [](const AnnulusGeometry& g) {
            return json{{"type", "annulus"}, {"inner", g.inner}, {"outer", g.outer}, {"m", g.m}};
          },
          [](const ShellUnionGeometry& g) {
            return json{{"type", "shell_union"}, {"q", g.q},           {"j_min", g.j_min},
                        {"j_max", g.j_max},      {"per_shell_m", g.per_shell_m},
                        {"scale", g.scale},      {"exponent", g.exponent}};
          },
      },
      spec.geometry);
  out["regularization"] = std::visit(
      Overloaded{
          [](const NearestNeighborHalf&) { return json{{"type", "nearest_neighbor_half"}}; },
          [](const FixedLength& f) { return json{{"type", "fixed_length"}, {"length", f.length}}; },
      },
      spec.regularization);
  out["charge"] = json::array();
  for (const ChargeAtom& c : spec.charge) out["charge"].push_back({{"point", c.point}, {"mass", c.mass}});
  out["charge_off_closure"] = spec.charge_off_closure;
  return out;
}

InstanceSpec instance_spec_from_json(const io::json& j, const std::string& path) {
  InstanceSpec spec;
  if (!j.is_object()) throw FormatError(path, "expected an object");
  spec.dimension = integer_or(j, "dimension", path, 3);

  const std::string kpath = path + "/kernel";
  const json& k = field(j, "kernel", path);
  const std::string ktype = type_of(k, kpath);
  if (ktype == "riesz") {
    spec.kernel = RieszKernel{number(k, "alpha", kpath)};
  } else if (ktype == "newtonian") {
    spec.kernel = RieszKernel{2.0};
  } else if (ktype == "logarithmic") {
    spec.kernel = LogKernel{number_or(k, "radius", kpath, 0.4)};
  } else {
    throw FormatError(kpath + "/type", "unknown kernel '" + ktype + "'");
  }

  const std::string gpath = path + "/geometry";
  const json& g = field(j, "geometry", path);
  const std::string gtype = type_of(g, gpath);
  if (gtype == "sphere") {
    SphereGeometry s{number_or(g, "radius", gpath, 1.0), integer(g, "m", gpath), {}};
    if (g.contains("center")) s.center = point(g["center"], gpath + "/center");
    spec.geometry = s;
  } else if (gtype == "ball") {
    spec.geometry = BallGeometry{number_or(g, "radius", gpath, 1.0), integer(g, "m", gpath)};
  } else if (gtype == "segment") {
    spec.geometry = SegmentGeometry{point(field(g, "a", gpath), gpath + "/a"),
                                    point(field(g, "b", gpath), gpath + "/b"), integer(g, "m", gpath)};
  } else if (gtype == "annulus") {
    spec.geometry = AnnulusGeometry{number(g, "inner", gpath), number(g, "outer", gpath),
                                    integer(g, "m", gpath)};
  } else if (gtype == "shell_union") {
    ShellUnionGeometry s;
    s.q = number_or(g, "q", gpath, s.q);
    s.j_min = integer_or(g, "j_min", gpath, s.j_min);
    s.j_max = integer_or(g, "j_max", gpath, s.j_max);
    if (g.contains("per_shell_m")) {
      const json& p = g["per_shell_m"];
      s.per_shell_m.clear();
      if (p.is_number_integer()) {
        s.per_shell_m.push_back(p.get<int>());
      } else if (p.is_array()) {
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (!p[i].is_number_integer()) {
            throw FormatError(gpath + "/per_shell_m/" + std::to_string(i), "expected an integer");
          }
          s.per_shell_m.push_back(p[i].get<int>());
        }
      } else {
        throw FormatError(gpath + "/per_shell_m", "expected an integer or an array");
      }
    }
    s.scale = number_or(g, "scale", gpath, s.scale);
    s.exponent = number_or(g, "exponent", gpath, s.exponent);
    spec.geometry = s;
  } else {
    throw FormatError(gpath + "/type", "unknown geometry '" + gtype + "'");
  }

  if (j.contains("regularization")) {
    const std::string rpath = path + "/regularization";
    const json& r = j["regularization"];
    const std::string rtype = type_of(r, rpath);
    if (rtype == "nearest_neighbor_half") {
      spec.regularization = NearestNeighborHalf{};
    } else if (rtype == "fixed_length") {
      spec.regularization = FixedLength{number(r, "length", rpath)};
    } else {
      throw FormatError(rpath + "/type", "unknown regularization '" + rtype + "'");
    }
  }

  if (j.contains("charge")) {
    const json& c = j["charge"];
    if (!c.is_array()) throw FormatError(path + "/charge", "expected an array of atoms");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::string apath = path + "/charge/" + std::to_string(i);
      spec.charge.push_back({point(field(c[i], "point", apath), apath + "/point"), number(c[i], "mass", apath)});
    }
  }
  if (j.contains("charge_off_closure")) {
    if (!j["charge_off_closure"].is_boolean()) {
      throw FormatError(path + "/charge_off_closure", "expected a boolean");
    }
    spec.charge_off_closure = j["charge_off_closure"].get<bool>();
  }

  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(path, e.what());
  }
  return spec;
}

}  // namespace sweep

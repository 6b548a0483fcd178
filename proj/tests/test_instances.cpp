#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sweep/balayage.hpp>
#include <sweep/gauss.hpp>
#include <sweep/instances.hpp>

#include <cmath>
#include <numbers>

using namespace sweep;

namespace {

InstanceSpec sphere(double alpha, int m, double radius = 1.0) {
  InstanceSpec s;
  s.kernel = RieszKernel{alpha};
  s.geometry = SphereGeometry{radius, m, {}};
  return s;
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double step = p1 / dp;
      z -= step;
      if (std::abs(step) < 1e-15) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

}  // namespace

TEST_CASE("kernel values") {
  CHECK(kernel_value(RieszKernel{2.0}, 3, 2.0) == doctest::Approx(0.5));
  CHECK(kernel_value(RieszKernel{1.0}, 3, 2.0) == doctest::Approx(0.25));
  CHECK(kernel_value(RieszKernel{1.0}, 2, 4.0) == doctest::Approx(0.25));
  CHECK(kernel_value(LogKernel{0.4}, 2, 0.5) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("Ugaheri constants") {
  CHECK(sphere(1.0, 10).ugaheri_constant() == 1.0);
  CHECK(sphere(2.0, 10).ugaheri_constant() == 1.0);
  CHECK(sphere(2.5, 10).ugaheri_constant() == doctest::Approx(std::sqrt(2.0)));
  InstanceSpec log;
  log.dimension = 2;
  log.kernel = LogKernel{0.4};
  log.geometry = BallGeometry{0.3, 20};
  CHECK(log.ugaheri_constant() == 1.0);
}

TEST_CASE("sphere nodes lie on the sphere and are distinct") {
  const Matrix p = generate_nodes(sphere(2.0, 300, 1.7));
  CHECK(p.rows() == 300);
  for (Index i = 0; i < p.rows(); ++i) CHECK(p.row(i).norm() == doctest::Approx(1.7));
  // Fibonacci nodes are nearly balanced.
  CHECK(p.colwise().sum().norm() / 300.0 < 0.02);
}

TEST_CASE("deterministic generation") {
  InstanceSpec s = sphere(1.5, 80);
  s.charge = {{{0.0, 0.0, 3.0}, 1.0}};
  const Instance a = build_instance(s);
  const Instance b = build_instance(s);
  CHECK(a.points == b.points);
  CHECK(a.kernel.entries() == b.kernel.entries());
}

TEST_CASE("off-diagonal entries are exact kernel values") {
  InstanceSpec s = sphere(2.0, 50);
  s.charge = {{{0.0, 0.0, 2.0}, -0.75}};
  const Instance inst = build_instance(s);
  REQUIRE(inst.points.rows() == 51);
  for (Index i = 0; i < 51; i += 7) {
    for (Index j = 0; j < 51; j += 5) {
      if (i == j) continue;
      const double d = (inst.points.row(i) - inst.points.row(j)).norm();
      CHECK(inst.kernel(i, j) == doctest::Approx(1.0 / d).epsilon(1e-14));
    }
  }
  CHECK(inst.omega[50] == -0.75);
  CHECK(inst.omega.weights().head(50).isZero());
  CHECK(inst.nodes.size() == 50);
  CHECK(inst.nodes.universe() == 51);
}

TEST_CASE("nearest-neighbour regularization") {
  InstanceSpec s;
  s.dimension = 2;
  s.kernel = RieszKernel{1.0};
  s.geometry = SegmentGeometry{{0.0, 0.0}, {1.0, 0.0}, 5};
  const Matrix p = generate_nodes(s);
  const KernelMatrix k = build_kernel_matrix(s);
  for (Index i = 0; i < p.rows(); ++i) {
    double nn = 1e300;
    for (Index j = 0; j < p.rows(); ++j) {
      if (j != i) nn = std::min(nn, (p.row(i) - p.row(j)).norm());
    }
    CHECK(k(i, i) == doctest::Approx(std::pow(nn / 2.0, 1.0 - 2.0)));
  }
  s.regularization = FixedLength{0.01};
  CHECK(build_kernel_matrix(s)(0, 0) == doctest::Approx(100.0));
}

TEST_CASE("field from charge agrees with the kernel potential") {
  InstanceSpec s = sphere(2.0, 120);
  s.charge = {{{0.0, 0.0, 2.0}, 1.0}, {{0.5, 0.0, 0.0}, -0.3}};
  const Instance inst = build_instance(s);
  const ChargeField cf = field_from_charge(s, inst);
  const Vector u = potential(inst.kernel, inst.omega);
  for (Index i = 0; i < inst.nodes.size(); ++i) CHECK(cf.field.values()[i] == doctest::Approx(-u[i]));
}

TEST_CASE("validation errors name the field") {
  auto message = [](const InstanceSpec& s) {
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(sphere(3.0, 10)).find("/kernel/alpha") != std::string::npos);
  CHECK(message(sphere(2.0, 0)).find("/geometry/m") != std::string::npos);
  InstanceSpec log = sphere(1.0, 10);
  log.kernel = LogKernel{0.4};
  CHECK(message(log).find("dimension 2") != std::string::npos);
  InstanceSpec bad_charge = sphere(2.0, 10);
  bad_charge.charge = {{{0.0, 0.0}, 1.0}};
  CHECK(message(bad_charge).find("/charge/0/point") != std::string::npos);
  InstanceSpec shells = sphere(2.0, 10);
  shells.geometry = ShellUnionGeometry{2.0, 0, 3, {10}, 3.0, 1.0};
  CHECK(message(shells).find("shell 0") != std::string::npos);
}

TEST_CASE("a charge on a node is rejected") {
  InstanceSpec s = sphere(2.0, 20);
  const Matrix p = generate_nodes(s);
  s.charge = {{{p(3, 0), p(3, 1), p(3, 2)}, 1.0}};
  CHECK_THROWS_AS(build_instance(s), ChargeOnNode);
}

TEST_CASE("logarithmic instances are rescaled into the disc") {
  InstanceSpec s;
  s.dimension = 2;
  s.kernel = LogKernel{0.4};
  s.geometry = AnnulusGeometry{0.5, 2.0, 150};
  s.charge = {{{3.0, 0.0}, 1.0}};
  const Instance inst = build_instance(s);
  CHECK(inst.points.rowwise().norm().maxCoeff() <= 0.4 + 1e-12);
  CHECK(inst.kernel.entries().minCoeff() > 0.0);
}

TEST_CASE("discretized Newtonian capacity of the unit sphere approaches 1") {
  // Oracle: the uniform distribution is the equilibrium measure with energy
  // (1/2)∫₀^π (1/(2 sin(θ/2))) sin θ dθ = 1, evaluated here by quadrature.
  const auto [x, w] = gauss_legendre(40);
  double quad = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double theta = std::numbers::pi * (x[i] + 1.0) / 2.0;
    quad += w[i] * (std::numbers::pi / 2.0) * 0.5 * std::cos(theta / 2.0);
  }
  CHECK(quad == doctest::Approx(1.0).epsilon(1e-12));

  double previous_error = 1e9;
  for (int m : {250, 1000}) {
    const KernelMatrix k = build_kernel_matrix(sphere(2.0, m));
    const double c = capacitary_measure(k, SupportSet::all(m)).capacity;
    const double error = std::abs(c - 1.0 / quad);
    CHECK(error < 0.05);
    CHECK(error < previous_error);
    previous_error = error;
  }
}

TEST_CASE("swept mass of an exterior unit charge") {
  // The balayage of δ_y, |y| = d > R onto the sphere has mass R/d.
  InstanceSpec s = sphere(2.0, 1000);
  s.charge = {{{0.0, 0.0, 2.0}, 1.0}};
  const Instance inst = build_instance(s);
  const BalayageResult r = pseudo_balayage(inst.kernel, inst.omega, inst.nodes);
  CHECK(r.mass == doctest::Approx(0.5).epsilon(0.03));
  CHECK(r.mass >= 0.5);
}

TEST_CASE("thinness of shell unions") {
  InstanceSpec thick = sphere(2.0, 10);
  thick.geometry = ShellUnionGeometry{2.0, 0, 4, {60}, 1.5, 1.0};
  const ThinnessReport t = thinness_series(thick);
  CHECK(t.verdict == ThinnessVerdict::ApparentlyNotThin);
  CHECK(t.fitted_exponent == doctest::Approx(1.0).epsilon(0.1));
  for (std::size_t i = 1; i < t.partial_sums.size(); ++i) CHECK(t.partial_sums[i] > t.partial_sums[i - 1]);

  InstanceSpec thin = thick;
  thin.geometry = ShellUnionGeometry{2.0, 0, 4, {60}, 0.4, 0.5};
  const ThinnessReport u = thinness_series(thin);
  CHECK(u.verdict == ThinnessVerdict::ApparentlyThin);
  CHECK(u.fitted_exponent < 0.7);
  CHECK(to_string(u.verdict) == "ApparentlyThin");

  CHECK_THROWS_AS(thinness_series(sphere(2.0, 10)), std::invalid_argument);
}

TEST_CASE("empty shells are allowed") {
  InstanceSpec s = sphere(2.0, 10);
  s.geometry = ShellUnionGeometry{2.0, 0, 2, {20, 0, 20}, 1.5, 1.0};
  const Instance inst = build_instance(s);
  CHECK(inst.nodes.size() == 40);
  REQUIRE(inst.shell_of_node.size() == 40);
  CHECK(inst.shell_of_node.front() == 0);
  CHECK(inst.shell_of_node.back() == 2);
}

TEST_CASE("spec json round trip") {
  InstanceSpec s = sphere(2.5, 64, 1.2);
  s.charge = {{{0.0, 0.0, 2.0}, 1.0}};
  s.regularization = FixedLength{0.02};
  const InstanceSpec t = instance_spec_from_json(io::json::parse(instance_spec_to_json(s).dump()));
  CHECK(instance_spec_to_json(t) == instance_spec_to_json(s));
  CHECK(build_instance(t).kernel.entries() == build_instance(s).kernel.entries());

  io::json bad = instance_spec_to_json(s);
  bad["geometry"]["type"] = "torus";
  try {
    instance_spec_from_json(bad);
    FAIL("expected FormatError");
  } catch (const io::FormatError& e) {
    CHECK(e.path() == "/instance/spec/geometry/type");
  }
}

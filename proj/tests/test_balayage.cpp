#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sweep/balayage.hpp>
#include <sweep/instances.hpp>

#include "support.hpp"

using namespace sweep;
using support::Rng;

namespace {

struct Case {
  KernelMatrix k;
  Measure omega;
  SupportSet a;
};

Case random_case(Rng& rng) {
  const Index m = rng.integer(2, 40);
  KernelMatrix k = support::random_kernel(rng, m);
  Measure omega = support::random_signed(rng, m);
  SupportSet a = support::random_subset(rng, m);
  return {std::move(k), std::move(omega), std::move(a)};
}

}  // namespace

TEST_CASE("purely negative charge sweeps to zero") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    Case c = random_case(rng);
    const Measure neg = -1.0 * c.omega.variation();
    const BalayageResult r = pseudo_balayage(c.k, neg, c.a);
    CHECK(r.measure.weights().isZero());
    CHECK(r.value == 0.0);
    CHECK(r.mass == 0.0);
  }
}

TEST_CASE("domination is strict for a negative charge") {
  // U^ω < 0 everywhere when ω ≤ 0 has positive-kernel potential, so
  // U^{ω̂} = 0 > U^ω holds with no equality at any node.
  const Matrix m = (Matrix(3, 3) << 2, 1, 0.5, 1, 2, 1, 0.5, 1, 2).finished();
  const KernelMatrix k(m);
  const Measure omega(Eigen::Vector3d(-1.0, 0.0, -0.5));
  const SupportSet a({0, 1, 2}, 3);
  const BalayageResult r = pseudo_balayage(k, omega, a);
  const Vector gap = potential(k, r.measure - omega);
  for (Index i : a.indices()) CHECK(gap[i] > 0.5);
}

TEST_CASE("a positive atom inside A is its own balayage") {
  Rng rng(22);
  const KernelMatrix k = support::random_kernel(rng, 8);
  const SupportSet a({1, 3, 4, 6}, 8);
  const Measure omega = Measure::atom(8, 4, 2.5);
  const BalayageResult r = pseudo_balayage(k, omega, a);
  CHECK((r.measure.weights() - omega.weights()).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(r.value == doctest::Approx(-energy(k, omega)).epsilon(1e-10));
}

TEST_CASE("characterizations hold on random instances") {
  Rng rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    Case c = random_case(rng);
    const BalayageResult r = pseudo_balayage(c.k, c.omega, c.a);
    CHECK(r.measure.is_positive());
    CHECK(r.measure.supported_on(c.a));
    CHECK(r.residuals.domination >= -1e-8);
    CHECK(r.residuals.support_equality <= 1e-8);
    CHECK(std::abs(r.residuals.energy_orthogonality) <= 1e-8);
    CHECK(r.value <= 1e-10);
    CHECK(r.value == doctest::Approx(gauss_functional(c.k, c.omega, r.measure)).epsilon(1e-9));

    // Value bracket -2 max_A U^{|ω|} ω̂(X) ≤ ŵ_f(A) ≤ 0.
    const Vector u = potential(c.k, c.omega.variation());
    double top = 0.0;
    for (Index i : c.a.indices()) top = std::max(top, u[i]);
    CHECK(-2.0 * top * r.mass <= r.value + 1e-10);

    const Ii1Check ii = verify_ii1(c.k, c.omega, c.a, r.measure, 1e-8);
    CHECK(ii.holds);
  }
}

TEST_CASE("the variational characterization rejects other measures") {
  Rng rng(24);
  int rejected_zero = 0;
  for (int trial = 0; trial < 30; ++trial) {
    Case c = random_case(rng);
    const BalayageResult r = pseudo_balayage(c.k, c.omega, c.a);

    const Vector u = potential(c.k, c.omega);
    bool positive_somewhere = false;
    for (Index i : c.a.indices()) positive_somewhere = positive_somewhere || u[i] > 1e-6;
    if (positive_somewhere) {
      CHECK_FALSE(verify_ii1(c.k, c.omega, c.a, Measure::zero(c.k.size()), 1e-8).holds);
      ++rejected_zero;
    }

    Vector noise = Vector::Zero(c.k.size());
    for (Index i : c.a.indices()) noise[i] = rng.uniform(0.5, 1.0);
    const Measure perturbed = r.measure + 1e-2 * Measure(noise);
    CHECK_FALSE(verify_ii1(c.k, c.omega, c.a, perturbed, 1e-8).holds);
  }
  CHECK(rejected_zero > 0);

  const KernelMatrix k(Matrix::Identity(2, 2));
  const Ii1Check off = verify_ii1(k, Measure::atom(2, 0), SupportSet({0}, 2), Measure::atom(2, 1), 1e-8);
  CHECK_FALSE(off.holds);
  CHECK_FALSE(off.rejected.empty());
}

TEST_CASE("uniqueness: a measure passing both checks is ω̂") {
  Rng rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    Case c = random_case(rng);
    const BalayageResult r = pseudo_balayage(c.k, c.omega, c.a);
    // Recompute ω̂ from a different start and compare.
    BalayageOptions o;
    o.start = support::random_vector(rng, c.a.size(), 0.0, 3.0);
    const BalayageResult again = pseudo_balayage(c.k, c.omega, c.a, o);
    CHECK(strong_distance(c.k, r.measure, again.measure) <= 1e-7);
  }
}

TEST_CASE("positive scaling equivariance") {
  Rng rng(26);
  for (int trial = 0; trial < 20; ++trial) {
    Case c = random_case(rng);
    const BalayageResult r = pseudo_balayage(c.k, c.omega, c.a);
    for (double q : {0.5, 2.0, 10.0}) {
      const BalayageResult s = pseudo_balayage(c.k, q * c.omega, c.a);
      CHECK((s.measure.weights() - q * r.measure.weights()).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
  }
}

TEST_CASE("restricted problem value") {
  Rng rng(27);
  int generic = 0;
  for (int trial = 0; trial < 30; ++trial) {
    Case c = random_case(rng);
    const BalayageResult r = pseudo_balayage(c.k, c.omega, c.a);
    CHECK(restricted_problem_value(c.k, c.omega, c.a, 0.0) == 0.0);
    for (double factor : {1.0, 1.5, 10.0}) {
      const double l = std::max(r.mass * factor, 1e-3);
      CHECK(restricted_problem_value(c.k, c.omega, c.a, l) == doctest::Approx(r.value).epsilon(1e-9));
    }
    if (r.mass > 1e-3) {
      ++generic;
      CHECK(restricted_problem_value(c.k, c.omega, c.a, r.mass / 2) > r.value + 1e-12);
    }
  }
  CHECK(generic > 5);
}

TEST_CASE("mass bound") {
  Rng rng(28);
  Case c = random_case(rng);
  const BalayageResult neg = pseudo_balayage(c.k, -1.0 * c.omega.variation(), c.a);
  CHECK(mass_bound_check(neg, 1.0, -1.0 * c.omega.variation()) == MassBoundOutcome::Holds);
  // No Ugaheri constant for an arbitrary PD matrix.
  const BalayageResult r = pseudo_balayage(c.k, c.omega, c.a);
  CHECK(mass_bound_check(r, std::nullopt, c.omega) == MassBoundOutcome::SkippedNoH);

  InstanceSpec spec;
  spec.kernel = RieszKernel{1.0};
  spec.geometry = SphereGeometry{1.0, 200, {}};
  spec.charge = {{{0.0, 0.0, 2.0}, 1.0}};
  const Instance inst = build_instance(spec);
  BalayageOptions o;
  o.ugaheri_h = inst.ugaheri_h;
  const BalayageResult riesz = pseudo_balayage(inst.kernel, inst.omega, inst.nodes, o);
  REQUIRE(riesz.mass_bound);
  CHECK(*riesz.mass_bound == doctest::Approx(1.0));
  CHECK(mass_bound_check(riesz, inst.ugaheri_h, inst.omega) == MassBoundOutcome::Holds);
  CHECK(riesz.mass < 1.0);
}

TEST_CASE("invalid inputs") {
  const KernelMatrix k(Matrix::Identity(3, 3));
  CHECK_THROWS_AS(pseudo_balayage(k, Measure::zero(2), SupportSet::all(3)), SizeMismatch);
}

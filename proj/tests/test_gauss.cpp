#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sweep/gauss.hpp>

#include "support.hpp"

using namespace sweep;
using support::Rng;

namespace {

/// Gauss minimizer by enumerating supports, independent of the solver.
Vector enumerate_gauss(const KernelMatrix& k, const Measure& omega, const SupportSet& a) {
  const Matrix q = k.restricted(a);
  const Vector b = Measure(potential(k, omega)).restricted(a);
  return qp::brute_force_simplex(qp::SimplexQpProblem(q, -b));
}

}  // namespace

TEST_CASE("single node") {
  const KernelMatrix k(Matrix::Constant(1, 1, 4.0));
  const GaussResult r = solve_gauss(k, Measure::zero(1), SupportSet::all(1));
  CHECK(r.measure[0] == 1.0);
  CHECK(r.value == doctest::Approx(4.0));
  CHECK(r.equilibrium_constant == doctest::Approx(4.0));
}

TEST_CASE("matches the support enumeration") {
  Rng rng(31);
  for (int trial = 0; trial < 80; ++trial) {
    const Index m = rng.integer(2, 14);
    const KernelMatrix k = support::random_kernel(rng, m);
    const Measure omega = support::random_signed(rng, m);
    const SupportSet a = support::random_subset(rng, m);
    if (a.size() > 12) continue;
    const GaussResult r = solve_gauss(k, omega, a);
    const Vector want = enumerate_gauss(k, omega, a);
    CHECK((r.measure.restricted(a) - want).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(r.value == doctest::Approx(gauss_functional(k, omega, Measure::embed(want, a))).epsilon(1e-9));
  }
}

TEST_CASE("characterization and the two readings of the constant") {
  Rng rng(32);
  for (int trial = 0; trial < 60; ++trial) {
    const Index m = rng.integer(2, 40);
    const KernelMatrix k = support::random_kernel(rng, m);
    const Measure omega = support::random_signed(rng, m);
    const SupportSet a = support::random_subset(rng, m);
    const GaussResult r = solve_gauss(k, omega, a);
    CHECK(r.measure.is_positive());
    CHECK(r.measure.supported_on(a));
    CHECK(r.measure.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.inequality_residual >= -1e-8);
    CHECK(r.equality_residual <= 1e-8);
    CHECK(std::abs(r.equilibrium_constant - r.constant_integral) <= 1e-8);

    // Direct recomputation of c = ∫(U^λ - U^ω) dλ from the returned measure.
    const Vector gap = potential(k, r.measure - omega);
    CHECK(r.measure.weights().dot(gap) == doctest::Approx(r.constant_integral).epsilon(1e-10));
    // w_f = c - ∫U^ω dλ.
    const double u_omega = r.measure.weights().dot(potential(k, omega));
    CHECK(r.value == doctest::Approx(r.equilibrium_constant - u_omega).epsilon(1e-8));
  }
}

TEST_CASE("the Gauss value dominates the balayage value") {
  Rng rng(33);
  for (int trial = 0; trial < 40; ++trial) {
    const Index m = rng.integer(2, 30);
    const KernelMatrix k = support::random_kernel(rng, m);
    const Measure omega = support::random_signed(rng, m);
    const SupportSet a = support::random_subset(rng, m);
    const GaussResult g = solve_gauss(k, omega, a);
    const BalayageResult b = pseudo_balayage(k, omega, a);
    CHECK(b.value <= g.value + 1e-10);
  }
}

TEST_CASE("unit-mass balayage is the Gauss minimizer") {
  Rng rng(34);
  int hits = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Index m = rng.integer(3, 25);
    const KernelMatrix k = support::random_kernel(rng, m);
    const SupportSet a = support::random_subset(rng, m);
    Measure omega = support::random_signed(rng, m);
    const BalayageResult b0 = pseudo_balayage(k, omega, a);
    if (b0.mass < 1e-3) continue;
    omega = (1.0 / b0.mass) * omega;
    const SolvabilityOutcome s = solvability_check(k, omega, a, false);
    CHECK(s.verdict == Solvability::SolvableViaBalayage);
    CHECK(s.lambda_is_balayage);
    REQUIRE(s.gauss);
    const GaussResult direct = solve_gauss(k, omega, a);
    CHECK(strong_distance(k, direct.measure, s.gauss->measure) <= 1e-6);
    CHECK(std::abs(direct.equilibrium_constant) <= 1e-7);
    ++hits;
  }
  CHECK(hits > 10);
}

TEST_CASE("solvability verdicts") {
  Rng rng(35);
  const KernelMatrix k = support::random_kernel(rng, 10);
  const SupportSet a = SupportSet::range(0, 8, 10);
  const Measure neg = -1.0 * Measure::atom(10, 9);

  const SolvabilityOutcome finite = solvability_check(k, neg, a, true);
  CHECK(finite.verdict == Solvability::Solvable);
  CHECK(finite.gauss);

  const SolvabilityOutcome unsolvable = solvability_check(k, neg, a, false);
  CHECK(unsolvable.verdict == Solvability::Unsolvable);
  CHECK_FALSE(unsolvable.gauss);
  REQUIRE(unsolvable.balayage);
  CHECK(unsolvable.balayage->mass == 0.0);

  const SolvabilityOutcome heavy = solvability_check(k, 5.0 * Measure::atom(10, 3), a, false);
  CHECK(heavy.verdict == Solvability::SolvableViaBalayage);
  CHECK_FALSE(heavy.lambda_is_balayage);
  CHECK(heavy.gauss);
  CHECK(to_string(Solvability::Unsolvable) == "Unsolvable");
}

TEST_CASE("capacity of diagonal and constant-plus-identity kernels") {
  // K = I: minimal energy probability is uniform with energy 1/m.
  for (Index m : {1, 3, 7}) {
    const CapacityResult c = capacitary_measure(KernelMatrix(Matrix::Identity(m, m)), SupportSet::all(m));
    CHECK(c.capacity == doctest::Approx(static_cast<double>(m)));
    CHECK(c.potential_min == doctest::Approx(1.0));
    CHECK(c.potential_max == doctest::Approx(1.0));
  }
  // K = d I + s J: μ* uniform, ‖μ*‖² = d/m + s.
  const Index m = 6;
  const double d = 0.5, s = 2.0;
  Matrix kj = Matrix::Constant(m, m, s);
  kj.diagonal().array() += d;
  const CapacityResult c = capacitary_measure(KernelMatrix(kj), SupportSet::all(m));
  CHECK(c.minimal_energy == doctest::Approx(d / m + s));
  CHECK(c.gamma.total_mass() == doctest::Approx(c.capacity));
}

TEST_CASE("capacity is monotone on random nested sets") {
  Rng rng(36);
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = rng.integer(4, 30);
    const KernelMatrix k = support::random_kernel(rng, m);
    const auto chain = support::random_chain(rng, SupportSet::all(m), 4);
    double prev = 0.0;
    for (const SupportSet& q : chain) {
      const CapacityResult c = capacitary_measure(k, q);
      CHECK(c.capacity >= prev - 1e-9);
      CHECK(c.potential_min >= 1.0 - 1e-7);
      prev = c.capacity;
    }
  }
}

TEST_CASE("extremal diagnostic along a chain") {
  Rng rng(37);
  for (int trial = 0; trial < 15; ++trial) {
    const Index m = rng.integer(6, 30);
    const KernelMatrix k = support::random_kernel(rng, m);
    const Measure omega = support::random_signed(rng, m);
    const auto chain = support::random_chain(rng, SupportSet::all(m), 4);
    const ExtremalDiagnostic d = extremal_diagnostic(k, omega, chain);
    REQUIRE(d.sequence_values.size() == chain.size());
    for (std::size_t i = 1; i < d.sequence_values.size(); ++i) {
      CHECK(d.sequence_values[i] <= d.sequence_values[i - 1] + 1e-10);
    }
    for (double mass : d.masses) CHECK(mass == doctest::Approx(1.0));
    const GaussResult cold = solve_gauss(k, omega, chain.back());
    CHECK(d.sequence_values.back() == doctest::Approx(cold.value).epsilon(1e-9));
    CHECK(d.constant_gap <= 1e-7);
  }
  const KernelMatrix k(Matrix::Identity(3, 3));
  CHECK_THROWS_AS(extremal_diagnostic(k, Measure::zero(3), {SupportSet::all(3), SupportSet({0}, 3)}),
                  NotNested);
}

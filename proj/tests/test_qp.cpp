#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sweep/qp.hpp>

#include "support.hpp"

using namespace sweep;
using namespace sweep::qp;
using support::Rng;

namespace {

ConeQpProblem random_cone(Rng& rng, Index k) {
  return ConeQpProblem(support::random_pd(rng, k), support::random_vector(rng, k, -1.0, 1.0));
}

SimplexQpProblem random_simplex(Rng& rng, Index k) {
  return SimplexQpProblem(support::random_pd(rng, k), support::random_vector(rng, k, -1.0, 1.0));
}

}  // namespace

TEST_CASE("cone closed forms") {
  const ConeQpProblem one(Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 3.0));
  CHECK(solve_cone_qp(one).weights[0] == doctest::Approx(1.5));
  const ConeQpProblem neg(Matrix::Constant(1, 1, 2.0), Vector::Constant(1, -3.0));
  CHECK(solve_cone_qp(neg).weights[0] == 0.0);

  Rng rng(1);
  const Matrix q = support::random_pd(rng, 6);
  const ConeQpProblem nonpositive(q, -support::random_vector(rng, 6, 0.0, 1.0));
  const Solution s = solve_cone_qp(nonpositive);
  CHECK(s.weights.isZero());
  CHECK(s.objective == 0.0);
}

TEST_CASE("simplex closed forms") {
  const SimplexQpProblem sym(Matrix::Identity(2, 2), Vector::Zero(2));
  const Solution s = solve_simplex_qp(sym);
  CHECK(s.weights[0] == doctest::Approx(0.5));
  CHECK(s.weights[1] == doctest::Approx(0.5));
  REQUIRE(s.kkt.multiplier);
  // Multiplier on the potential scale: (Qw + f)_i = 1/2.
  CHECK(*s.kkt.multiplier == doctest::Approx(0.5));

  const SimplexQpProblem one(Matrix::Constant(1, 1, 3.0), Vector::Constant(1, -7.0));
  CHECK(solve_simplex_qp(one).weights[0] == 1.0);
}

TEST_CASE("problems reject non-PD matrices") {
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(ConeQpProblem(bad, Vector::Zero(2)), NotPositiveDefinite);
  CHECK_THROWS_AS(SimplexQpProblem(bad, Vector::Zero(2)), NotPositiveDefinite);
}

TEST_CASE("cone solver matches the enumeration oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const ConeQpProblem p = random_cone(rng, rng.integer(1, 10));
    const Solution s = solve_cone_qp(p);
    const Vector oracle = brute_force_cone(p);
    CHECK((s.weights - oracle).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(std::abs(s.objective - p.objective(oracle)) <= 1e-10);
    CHECK((s.weights.array() >= 0.0).all());
    CHECK(s.kkt.worst() <= 1e-8);
  }
}

TEST_CASE("simplex solver matches the enumeration oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const SimplexQpProblem p = random_simplex(rng, rng.integer(1, 10));
    const Solution s = solve_simplex_qp(p);
    const Vector oracle = brute_force_simplex(p);
    CHECK((s.weights - oracle).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(std::abs(s.objective - p.objective(oracle)) <= 1e-10);
    CHECK(std::abs(s.weights.sum() - 1.0) <= 1e-8);
    CHECK(s.kkt.worst() <= 1e-8);
  }
}

TEST_CASE("oracle refuses large problems") {
  CHECK_THROWS_AS(brute_force_cone(ConeQpProblem(Matrix::Identity(15, 15), Vector::Zero(15))), TooLarge);
  CHECK_THROWS_AS(brute_force_simplex(SimplexQpProblem(Matrix::Identity(15, 15), Vector::Zero(15))),
                  TooLarge);
}

TEST_CASE("solutions do not depend on the start") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const Index k = rng.integer(2, 12);
    const ConeQpProblem cone = random_cone(rng, k);
    const SimplexQpProblem simplex = random_simplex(rng, k);
    std::vector<Vector> cone_w, simplex_w;
    for (int s = 0; s < 5; ++s) {
      SolverOptions o;
      o.start = support::random_vector(rng, k, 0.0, 2.0);
      cone_w.push_back(solve_cone_qp(cone, o).weights);
      o.start = project_to_simplex(support::random_vector(rng, k, 0.0, 1.0));
      simplex_w.push_back(solve_simplex_qp(simplex, o).weights);
    }
    for (int s = 1; s < 5; ++s) {
      CHECK((cone_w[s] - cone_w[0]).lpNorm<Eigen::Infinity>() <= 1e-7);
      CHECK((simplex_w[s] - simplex_w[0]).lpNorm<Eigen::Infinity>() <= 1e-7);
    }
  }
}

TEST_CASE("objective trace is nonincreasing") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Index k = rng.integer(2, 40);
    const Solution a = solve_cone_qp(random_cone(rng, k));
    const Solution b = solve_simplex_qp(random_simplex(rng, k));
    for (const Solution* s : {&a, &b}) {
      REQUIRE_FALSE(s->trace.empty());
      for (std::size_t i = 1; i < s->trace.size(); ++i) {
        CHECK(s->trace[i] <= s->trace[i - 1] + 1e-12 * std::max(1.0, std::abs(s->trace[i - 1])));
      }
    }
  }
}

TEST_CASE("cone scaling equivariance") {
  Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const Index k = rng.integer(1, 15);
    const Matrix q = support::random_pd(rng, k);
    const Vector b = support::random_vector(rng, k, -1.0, 1.0);
    const Vector w = solve_cone_qp(ConeQpProblem(q, b)).weights;
    for (double s : {0.5, 2.0, 10.0}) {
      const Vector ws = solve_cone_qp(ConeQpProblem(q, s * b)).weights;
      CHECK((ws - s * w).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
  }
}

TEST_CASE("simplex projection") {
  const Vector p = project_to_simplex(Eigen::Vector3d(0.2, 0.2, 0.2));
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p[0] == doctest::Approx(1.0 / 3));
  const Vector q = project_to_simplex(Eigen::Vector3d(5.0, 0.0, -1.0));
  CHECK(q == Eigen::Vector3d(1.0, 0.0, 0.0));
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector v = support::random_vector(rng, 8, -2.0, 2.0);
    const Vector w = project_to_simplex(v);
    CHECK(std::abs(w.sum() - 1.0) <= 1e-14);
    CHECK((w.array() >= 0.0).all());
    // Projection optimality: (v - w)ᵀ(u - w) ≤ 0 for the vertices u.
    for (Index i = 0; i < 8; ++i) {
      Vector u = Vector::Zero(8);
      u[i] = 1.0;
      CHECK((v - w).dot(u - w) <= 1e-12);
    }
  }
}

TEST_CASE("larger problems converge with small residuals") {
  Rng rng(8);
  for (Index k : {50, 120, 300}) {
    const Solution a = solve_cone_qp(random_cone(rng, k));
    const Solution b = solve_simplex_qp(random_simplex(rng, k));
    CHECK(a.kkt.worst() <= 1e-8);
    CHECK(b.kkt.worst() <= 1e-8);
  }
}

#pragma once

// Seeded random instances and naive reference computations shared by the tests.

#include <sweep/core.hpp>

#include <random>
#include <vector>

namespace support {

using sweep::Index;
using sweep::Matrix;
using sweep::Vector;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  Index integer(Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(engine_); }
  bool coin(double p = 0.5) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Nonnegative, symmetric, strictly positive definite: B Bᵀ/r + c I with B ≥ 0.
inline Matrix random_pd(Rng& rng, Index m) {
  const Index r = std::max<Index>(2, m / 2);
  Matrix b(m, r);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < r; ++j) b(i, j) = rng.uniform();
  }
  Matrix k = b * b.transpose() / static_cast<double>(r);
  k.diagonal().array() += rng.uniform(0.1, 1.0);
  return k;
}

inline sweep::KernelMatrix random_kernel(Rng& rng, Index m) { return sweep::KernelMatrix(random_pd(rng, m)); }

/// Random vector with entries in [lo, hi].
inline Vector random_vector(Rng& rng, Index m, double lo, double hi) {
  Vector v(m);
  for (Index i = 0; i < m; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

/// Sparse signed charge: each node carries mass with probability `density`.
inline sweep::Measure random_signed(Rng& rng, Index m, double density = 0.4) {
  Vector w = Vector::Zero(m);
  for (Index i = 0; i < m; ++i) {
    if (rng.coin(density)) w[i] = rng.uniform(-1.0, 1.5);
  }
  if (w.cwiseAbs().maxCoeff() == 0.0) w[rng.integer(0, m - 1)] = 1.0;
  return sweep::Measure(w);
}

inline sweep::SupportSet random_subset(Rng& rng, Index m, Index min_size = 1) {
  std::vector<Index> idx;
  for (Index i = 0; i < m; ++i) {
    if (rng.coin(0.6)) idx.push_back(i);
  }
  for (Index i = 0; static_cast<Index>(idx.size()) < min_size; ++i) {
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end());
  return sweep::SupportSet(idx, m);
}

inline double naive_bilinear(const Matrix& k, const Vector& x, const Vector& y) {
  double s = 0.0;
  for (Index i = 0; i < k.rows(); ++i) {
    for (Index j = 0; j < k.cols(); ++j) s += x[i] * k(i, j) * y[j];
  }
  return s;
}

inline Vector naive_potential(const Matrix& k, const Vector& x) {
  Vector u = Vector::Zero(k.rows());
  for (Index i = 0; i < k.rows(); ++i) {
    for (Index j = 0; j < k.cols(); ++j) u[i] += k(i, j) * x[j];
  }
  return u;
}

/// Increasing chain of `stages` random nested subsets ending at `a`.
inline std::vector<sweep::SupportSet> random_chain(Rng& rng, const sweep::SupportSet& a, int stages) {
  std::vector<Index> order = a.indices();
  for (Index i = static_cast<Index>(order.size()) - 1; i > 0; --i) std::swap(order[i], order[rng.integer(0, i)]);
  std::vector<sweep::SupportSet> chain;
  const auto n = static_cast<Index>(order.size());
  for (int s = 1; s <= stages; ++s) {
    const Index size = std::max<Index>(1, n * s / stages);
    std::vector<Index> idx(order.begin(), order.begin() + size);
    std::sort(idx.begin(), idx.end());
    if (!chain.empty() && chain.back().size() == size) continue;
    chain.emplace_back(idx, a.universe());
  }
  return chain;
}

}  // namespace support

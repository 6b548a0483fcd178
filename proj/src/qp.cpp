#include <sweep/qp.hpp>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <numeric>

namespace sweep::qp {

namespace {

// Iterations with an unchanged zero pattern before the gradient phase hands
// over to the active-set phase.
constexpr int kStablePatternIterations = 30;

void require_square(const Matrix& q, Index n, const char* what) {
  if (q.rows() != q.cols()) throw std::invalid_argument("QP matrix must be square");
  if (q.rows() != n) throw SizeMismatch(q.rows(), n, what);
  if (n < 1) throw std::invalid_argument("QP must have at least one variable");
}

// Shared engine for objective wᵀQw + 2·linᵀw over the cone or the simplex.
struct Engine {
  const Matrix& q;
  Vector lin;
  bool simplex;

  Index size() const { return lin.size(); }

  Vector project(const Vector& v) const {
    return simplex ? project_to_simplex(v) : Vector(v.cwiseMax(0.0));
  }

  double objective(const Vector& w) const { return w.dot(q * w) + 2.0 * lin.dot(w); }

  KktReport kkt(const Vector& w, double c) const {
    KktReport rep;
    const Vector r = (q * w + lin).array() - (simplex ? c : 0.0);
    for (Index i = 0; i < w.size(); ++i) {
      rep.stationarity_residual = std::max(rep.stationarity_residual, -r[i]);
      rep.complementarity_residual = std::max(rep.complementarity_residual, std::abs(w[i] * r[i]));
      rep.feasibility_residual = std::max(rep.feasibility_residual, -w[i]);
    }
    if (simplex) {
      rep.feasibility_residual = std::max(rep.feasibility_residual, std::abs(w.sum() - 1.0));
      rep.multiplier = c;
    }
    return rep;
  }
};

struct ReducedSolve {
  Vector z;
  double c = 0.0;
};

// Minimizer of the objective over the face {w_i = 0 for i ∉ free}, ignoring
// the sign constraints on the free variables.
ReducedSolve solve_face(const Engine& e, const std::vector<Index>& free) {
  const auto nf = static_cast<Index>(free.size());
  ReducedSolve out;
  out.z = Vector::Zero(nf);
  if (nf == 0) return out;
  Matrix qff(nf, nf);
  Vector lf(nf);
  for (Index c = 0; c < nf; ++c) {
    lf[c] = e.lin[free[c]];
    for (Index r = 0; r < nf; ++r) qff(r, c) = e.q(free[r], free[c]);
  }
  Eigen::LLT<Matrix> llt(qff);
  if (llt.info() != Eigen::Success) throw std::runtime_error("reduced QP matrix lost definiteness");
  if (!e.simplex) {
    out.z = llt.solve(-lf);
    return out;
  }
  const Vector y = llt.solve(Vector::Ones(nf));
  const Vector z0 = llt.solve(-lf);
  out.c = (1.0 - z0.sum()) / y.sum();
  out.z = z0 + out.c * y;
  return out;
}

Vector initial_point(const Engine& e, const SolverOptions& opt) {
  const Index k = e.size();
  if (opt.start) {
    if (opt.start->size() != k) throw SizeMismatch(k, opt.start->size(), "solver start");
    return e.project(*opt.start);
  }
  return e.simplex ? Vector::Constant(k, 1.0 / static_cast<double>(k)) : Vector::Zero(k);
}

Solution run(const Engine& e, const SolverOptions& opt) {
  if (!(opt.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  const Index k = e.size();
  Solution sol;

  Vector x = initial_point(e, opt);
  Vector g = e.q * x + e.lin;
  double value = x.dot(g + e.lin);
  sol.trace.push_back(value);

  // Projected gradient with Barzilai-Borwein steps, monotone by backtracking.
  const double lipschitz = e.q.cwiseAbs().rowwise().sum().maxCoeff();
  const double s0 = 1.0 / lipschitz;
  double step = s0;
  std::vector<char> pattern(static_cast<std::size_t>(k), 0);
  int stable = 0;
  for (int it = 0; it < opt.max_gradient_iter; ++it) {
    ++sol.gradient_iterations;
    const Vector xn = e.project(x - step * g);
    const Vector d = xn - x;
    if (d.lpNorm<Eigen::Infinity>() == 0.0) break;
    const Vector qd = e.q * d;
    const double dqd = d.dot(qd);
    const double next = value + 2.0 * g.dot(d) + dqd;
    if (next > value) {
      step *= 0.5;
      if (step < s0 * 1e-12) break;
      continue;
    }
    x = xn;
    g += qd;
    value = next;
    sol.trace.push_back(value);
    step = dqd > 0.0 ? d.squaredNorm() / dqd : s0;

    if ((x - e.project(x - g)).lpNorm<Eigen::Infinity>() <= 0.1 * opt.tol) break;
    bool same = true;
    for (Index i = 0; i < k; ++i) {
      const char z = x[i] == 0.0;
      same = same && z == pattern[static_cast<std::size_t>(i)];
      pattern[static_cast<std::size_t>(i)] = z;
    }
    stable = same ? stable + 1 : 0;
    if (stable >= kStablePatternIterations) break;
  }

  // Snap near-zero weights to the boundary when that does not cost objective.
  const double threshold = opt.active_factor * opt.tol;
  {
    Vector snapped = (x.array() <= threshold).select(0.0, x);
    bool usable = true;
    if (e.simplex) {
      const double total = snapped.sum();
      usable = total > 0.0;
      if (usable) snapped /= total;
    }
    if (usable && snapped != x) {
      const double v = e.objective(snapped);
      if (v <= value) {
        x = snapped;
        value = v;
        sol.trace.push_back(value);
      }
    }
  }

  // Primal active-set phase. `active[i]` means w_i is held at zero.
  std::vector<char> active(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) active[static_cast<std::size_t>(i)] = x[i] == 0.0;
  if (e.simplex && std::all_of(active.begin(), active.end(), [](char a) { return a != 0; })) {
    Index arg = 0;
    x.maxCoeff(&arg);
    active[static_cast<std::size_t>(arg)] = 0;
  }
  const double dual_tol = 0.01 * opt.tol;
  double multiplier = 0.0;
  bool converged = false;
  while (sol.active_set_iterations < opt.max_iter) {
    ++sol.active_set_iterations;
    std::vector<Index> free;
    for (Index i = 0; i < k; ++i) {
      if (!active[static_cast<std::size_t>(i)]) free.push_back(i);
    }
    const ReducedSolve face = solve_face(e, free);

    Index blocking = -1;
    double alpha = 1.0;
    for (std::size_t r = 0; r < free.size(); ++r) {
      const double target = face.z[static_cast<Index>(r)];
      const double cur = x[free[r]];
      if (target < 0.0) {
        const double a = cur / (cur - target);
        if (a < alpha) {
          alpha = a;
          blocking = free[r];
        }
      }
    }

    if (blocking < 0) {
      for (std::size_t r = 0; r < free.size(); ++r) x[free[r]] = face.z[static_cast<Index>(r)];
      for (Index i = 0; i < k; ++i) {
        if (active[static_cast<std::size_t>(i)]) x[i] = 0.0;
      }
      multiplier = face.c;
      const double v = e.objective(x);
      sol.trace.push_back(v);
      const Vector r = (e.q * x + e.lin).array() - (e.simplex ? multiplier : 0.0);
      Index worst = -1;
      double most_negative = -dual_tol;
      for (Index i = 0; i < k; ++i) {
        if (active[static_cast<std::size_t>(i)] && r[i] < most_negative) {
          most_negative = r[i];
          worst = i;
        }
      }
      if (worst < 0) {
        converged = true;
        break;
      }
      active[static_cast<std::size_t>(worst)] = 0;
      continue;
    }

    for (std::size_t r = 0; r < free.size(); ++r) {
      const Index i = free[r];
      x[i] += alpha * (face.z[static_cast<Index>(r)] - x[i]);
      if (x[i] <= 0.0 || i == blocking) {
        x[i] = 0.0;
        active[static_cast<std::size_t>(i)] = 1;
      }
    }
    if (e.simplex) x /= x.sum();
    sol.trace.push_back(e.objective(x));
  }

  sol.weights = x;
  sol.objective = e.objective(x);
  sol.kkt = e.kkt(x, multiplier);
  if (!converged) throw MaxIterExceeded(x, sol.kkt);
  return sol;
}

}  // namespace

MaxIterExceeded::MaxIterExceeded(Vector best, KktReport report)
    : std::runtime_error("QP solver exceeded its iteration budget (worst KKT residual " +
                         std::to_string(report.worst()) + ")"),
      best_(std::move(best)),
      report_(report) {}

TooLarge::TooLarge(Index k)
    : std::invalid_argument("brute-force oracle limited to k <= " +
                            std::to_string(kBruteForceLimit) + ", got " + std::to_string(k)) {}

ConeQpProblem::ConeQpProblem(Matrix q, Vector b) : q_(std::move(q)), b_(std::move(b)) {
  require_square(q_, b_.size(), "cone QP linear term");
  check_energy_principle(q_);
}

double ConeQpProblem::objective(const Vector& w) const { return w.dot(q_ * w) - 2.0 * b_.dot(w); }

Vector ConeQpProblem::reduced_gradient(const Vector& w) const { return q_ * w - b_; }

KktReport ConeQpProblem::kkt(const Vector& w) const {
  return Engine{q_, -b_, false}.kkt(w, 0.0);
}

SimplexQpProblem::SimplexQpProblem(Matrix q, Vector f) : q_(std::move(q)), f_(std::move(f)) {
  require_square(q_, f_.size(), "simplex QP linear term");
  check_energy_principle(q_);
}

double SimplexQpProblem::objective(const Vector& w) const {
  return w.dot(q_ * w) + 2.0 * f_.dot(w);
}

Vector SimplexQpProblem::weighted_gradient(const Vector& w) const { return q_ * w + f_; }

double SimplexQpProblem::integral_constant(const Vector& w) const {
  return w.dot(weighted_gradient(w));
}

KktReport SimplexQpProblem::kkt(const Vector& w, double multiplier) const {
  return Engine{q_, f_, true}.kkt(w, multiplier);
}

Solution solve_cone_qp(const ConeQpProblem& p, const SolverOptions& options) {
  const Engine e{p.q(), -p.b(), false};
  if (p.size() == 1 || (p.b().array() <= 0.0).all()) {
    if (!(options.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
    Solution sol;
    sol.weights = p.size() == 1 ? Vector::Constant(1, std::max(p.b()[0], 0.0) / p.q()(0, 0))
                                : Vector::Zero(p.size());
    sol.objective = e.objective(sol.weights);
    sol.kkt = e.kkt(sol.weights, 0.0);
    sol.trace.push_back(sol.objective);
    return sol;
  }
  return run(e, options);
}

Solution solve_simplex_qp(const SimplexQpProblem& p, const SolverOptions& options) {
  const Engine e{p.q(), p.f(), true};
  if (p.size() == 1) {
    if (!(options.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
    Solution sol;
    sol.weights = Vector::Ones(1);
    sol.objective = e.objective(sol.weights);
    sol.kkt = e.kkt(sol.weights, p.q()(0, 0) + p.f()[0]);
    sol.trace.push_back(sol.objective);
    return sol;
  }
  return run(e, options);
}

Vector project_to_simplex(const Vector& v) {
  const Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0);
}

namespace {

template <class SolveFace, class Objective, class Reduced>
Vector enumerate_supports(Index k, bool allow_empty, SolveFace solve, Objective objective,
                          Reduced reduced) {
  if (k > kBruteForceLimit) throw TooLarge(k);
  double best_kkt = std::numeric_limits<double>::infinity();
  double best_primal = std::numeric_limits<double>::infinity();
  Vector kkt_winner, primal_winner;
  const std::uint64_t masks = std::uint64_t{1} << k;
  for (std::uint64_t mask = allow_empty ? 0 : 1; mask < masks; ++mask) {
    std::vector<Index> support;
    for (Index i = 0; i < k; ++i) {
      if (mask & (std::uint64_t{1} << i)) support.push_back(i);
    }
    std::optional<std::pair<Vector, double>> cand = solve(support);
    if (!cand) continue;
    Vector w = Vector::Zero(k);
    bool primal = true;
    const double scale = std::max(1.0, cand->first.lpNorm<Eigen::Infinity>());
    for (std::size_t r = 0; r < support.size(); ++r) {
      const double v = cand->first[static_cast<Index>(r)];
      if (v < -1e-12 * scale) primal = false;
      w[support[r]] = std::max(v, 0.0);
    }
    if (!primal) continue;
    const double value = objective(w);
    if (value < best_primal) {
      best_primal = value;
      primal_winner = w;
    }
    const Vector r = reduced(w, cand->second);
    const double rscale = std::max(1.0, r.lpNorm<Eigen::Infinity>());
    bool dual = true;
    for (Index i = 0; i < k; ++i) {
      if (!(mask & (std::uint64_t{1} << i)) && r[i] < -1e-9 * rscale) dual = false;
    }
    if (dual && value < best_kkt) {
      best_kkt = value;
      kkt_winner = w;
    }
  }
  return kkt_winner.size() ? kkt_winner : primal_winner;
}

}  // namespace

Vector brute_force_cone(const ConeQpProblem& p) {
  const Index k = p.size();
  return enumerate_supports(
      k, true,
      [&](const std::vector<Index>& s) -> std::optional<std::pair<Vector, double>> {
        const auto n = static_cast<Index>(s.size());
        Matrix a(n, n);
        Vector rhs(n);
        for (Index r = 0; r < n; ++r) {
          rhs[r] = p.b()[s[r]];
          for (Index c = 0; c < n; ++c) a(r, c) = p.q()(s[r], s[c]);
        }
        return std::make_pair(Vector(a.partialPivLu().solve(rhs)), 0.0);
      },
      [&](const Vector& w) { return p.objective(w); },
      [&](const Vector& w, double) { return p.reduced_gradient(w); });
}

Vector brute_force_simplex(const SimplexQpProblem& p) {
  const Index k = p.size();
  return enumerate_supports(
      k, false,
      [&](const std::vector<Index>& s) -> std::optional<std::pair<Vector, double>> {
        // Bordered KKT system [2Q 1; 1ᵀ 0][w; -2c] = [-2f; 1].
        const auto n = static_cast<Index>(s.size());
        Matrix a = Matrix::Zero(n + 1, n + 1);
        Vector rhs(n + 1);
        for (Index r = 0; r < n; ++r) {
          for (Index c = 0; c < n; ++c) a(r, c) = 2.0 * p.q()(s[r], s[c]);
          a(r, n) = 1.0;
          a(n, r) = 1.0;
          rhs[r] = -2.0 * p.f()[s[r]];
        }
        rhs[n] = 1.0;
        const Vector sol = a.fullPivLu().solve(rhs);
        return std::make_pair(Vector(sol.head(n)), -0.5 * sol[n]);
      },
      [&](const Vector& w) { return p.objective(w); },
      [&](const Vector& w, double c) {
        return Vector(p.weighted_gradient(w).array() - c);
      });
}

}  // namespace sweep::qp

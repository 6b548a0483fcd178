#include <sweep/experiments.hpp>
#include <sweep/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sweep::experiments {

namespace {

ConvergenceReport run_chain(const KernelMatrix& k, const Measure& omega,
                            const std::vector<SupportSet>& chain, double tol, Direction dir,
                            const SupportSet& target) {
  BalayageOptions opts;
  opts.tol = tol;
  // Reference solve on A from a cold start, independent of the chain.
  const BalayageResult reference = pseudo_balayage(k, omega, target, opts);

  ConvergenceReport out;
  out.direction = dir;
  out.limit = reference.measure;
  std::vector<Measure> stages;
  std::optional<Measure> previous;
  for (const SupportSet& stage : chain) {
    BalayageOptions warm = opts;
    if (previous && dir == Direction::Up) warm.start = previous->restricted(stage);
    const BalayageResult r = pseudo_balayage(k, omega, stage, warm);
    out.stage_values.push_back(r.value);
    out.stage_masses.push_back(r.mass);
    out.stage_norms.push_back(strong_distance(k, r.measure, reference.measure));
    GaussOptions gopts;
    gopts.tol = tol;
    out.gauss_values.push_back(solve_gauss(k, omega, stage, gopts).value);
    stages.push_back(r.measure);
    previous = r.measure;
  }
  for (std::size_t j = 0; j + 1 < stages.size(); ++j) {
    // K is always the smaller set of the pair.
    const std::size_t small = dir == Direction::Up ? j : j + 1;
    const std::size_t large = dir == Direction::Up ? j + 1 : j;
    const double gap = 2.0 * out.stage_values[small] - 2.0 * out.stage_values[large];
    out.chain_slack.push_back(gap - energy(k, stages[small] - stages[large]));
  }
  return out;
}

}  // namespace

std::string to_string(Direction d) { return d == Direction::Up ? "Up" : "Down"; }

std::string to_string(ScanPattern p) {
  switch (p) {
    case ScanPattern::Stabilizes:
      return "Stabilizes";
    case ScanPattern::Leaks:
      return "Leaks";
    case ScanPattern::Mixed:
      return "Mixed";
  }
  return "Mixed";
}

ConvergenceReport monotone_up(const KernelMatrix& k, const Measure& omega,
                              const std::vector<SupportSet>& chain, double tol) {
  require_nested(chain, ChainDirection::Increasing);
  return run_chain(k, omega, chain, tol, Direction::Up, chain.back());
}

ConvergenceReport monotone_down(const KernelMatrix& k, const Measure& omega,
                                const std::vector<SupportSet>& chain, double tol) {
  if (chain.empty()) throw NotNested("chain of support sets is empty");
  // A nonempty chain of SupportSets cannot contain an empty member, but the
  // intersection is reported separately from nesting errors.
  std::vector<Index> common = chain.front().indices();
  for (const SupportSet& s : chain) {
    std::vector<Index> next;
    std::set_intersection(common.begin(), common.end(), s.indices().begin(), s.indices().end(),
                          std::back_inserter(next));
    common = std::move(next);
  }
  if (common.empty()) throw EmptyIntersection("decreasing chain has an empty intersection");
  require_nested(chain, ChainDirection::Decreasing);
  return run_chain(k, omega, chain, tol, Direction::Down,
                   SupportSet(std::move(common), k.size(), "intersection"));
}

double leak_fraction(const Measure& lambda, const SupportSet& a, const Matrix& points) {
  std::vector<Index> order = a.indices();
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) {
    return points.row(i).norm() > points.row(j).norm();
  });
  const auto outer = static_cast<std::size_t>(
      std::ceil(kOuterNodeFraction * static_cast<double>(order.size())));
  double leaked = 0.0;
  for (std::size_t r = 0; r < outer; ++r) leaked += lambda[order[r]];
  const double total = lambda.total_mass();
  return total > 0.0 ? leaked / total : 0.0;
}

ScanTable solvability_scan(const InstanceSpec& family, std::span<const int> truncations,
                           std::span<const double> scalings, double tol) {
  const auto* shells = std::get_if<ShellUnionGeometry>(&family.geometry);
  if (!shells) throw std::invalid_argument("solvability scan needs a shell-union family");
  if (truncations.empty() || scalings.empty()) {
    throw std::invalid_argument("solvability scan needs truncations and scalings");
  }

  ScanTable table;
  table.truncations.assign(truncations.begin(), truncations.end());
  for (double q : scalings) {
    ScanRow row;
    row.scaling = q;
    for (const ChargeAtom& c : family.charge) {
      row.omega_mass += q * c.mass;
      row.omega_positive_mass += std::max(0.0, q * c.mass);
    }
    row.cells.resize(truncations.size());
    table.rows.push_back(std::move(row));
  }

  // One instance per truncation; every scaling reuses its kernel.
  parallel_for(truncations.size(), [&](std::size_t t) {
    InstanceSpec spec = family;
    ShellUnionGeometry g = *shells;
    g.j_max = truncations[t];
    if (g.per_shell_m.size() != 1) {
      g.per_shell_m.resize(static_cast<std::size_t>(g.j_max - g.j_min + 1), g.per_shell_m.back());
    }
    spec.geometry = g;
    const Instance inst = build_instance(spec);
    for (ScanRow& row : table.rows) {
      const Measure omega = row.scaling * inst.omega;
      ScanCell& cell = row.cells[t];
      cell.truncation = truncations[t];
      const SolvabilityOutcome outcome =
          solvability_check(inst.kernel, omega, inst.nodes, false, tol);
      cell.balayage_mass = outcome.balayage->mass;
      cell.balayage_value = outcome.balayage->value;
      cell.lambda_is_balayage = outcome.lambda_is_balayage;
      GaussOptions gopts;
      gopts.tol = tol;
      const GaussResult lambda = outcome.gauss && !outcome.lambda_is_balayage
                                     ? *outcome.gauss
                                     : solve_gauss(inst.kernel, omega, inst.nodes, gopts);
      cell.gauss_value = lambda.value;
      cell.equilibrium_constant = lambda.equilibrium_constant;
      cell.leak_fraction = leak_fraction(lambda.measure, inst.nodes, inst.points);
    }
  });

  for (ScanRow& row : table.rows) {
    const std::size_t n = row.cells.size();
    const std::size_t first = n >= 2 ? n - 2 : 0;
    bool leaks = true, stable = true;
    for (std::size_t t = first; t < n; ++t) {
      leaks = leaks && row.cells[t].leak_fraction >= kLeakThreshold;
      stable = stable && row.cells[t].leak_fraction < kLeakThreshold;
    }
    row.pattern = leaks ? ScanPattern::Leaks : stable ? ScanPattern::Stabilizes : ScanPattern::Mixed;
  }
  return table;
}

std::uint64_t SubsetSampler::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t SubsetSampler::below(std::uint64_t bound) {
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t v = next();
  while (v >= limit) v = next();
  return v % bound;
}

std::vector<Index> SubsetSampler::subset(Index m) {
  const auto size = static_cast<Index>(below(static_cast<std::uint64_t>(m))) + 1;
  std::vector<Index> all(static_cast<std::size_t>(m));
  std::iota(all.begin(), all.end(), Index{0});
  // Partial Fisher-Yates.
  for (Index i = 0; i < size; ++i) {
    const auto j = i + static_cast<Index>(below(static_cast<std::uint64_t>(m - i)));
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
  }
  all.resize(static_cast<std::size_t>(size));
  std::sort(all.begin(), all.end());
  return all;
}

UgaheriEstimate ugaheri_estimate(const KernelMatrix& k, int trials, std::uint64_t seed,
                                 std::span<const Measure> extra, double tol) {
  if (trials < 1) throw std::invalid_argument("ugaheri estimate needs at least one trial");
  SubsetSampler sampler(seed);
  std::vector<std::vector<Index>> subsets;
  for (int t = 0; t < trials; ++t) subsets.push_back(sampler.subset(k.size()));

  const auto ratio_of = [&](const Measure& mu) {
    const Vector u = potential(k, mu);
    double on_support = 0.0;
    for (Index i = 0; i < mu.size(); ++i) {
      if (mu[i] > 0.0) on_support = std::max(on_support, u[i]);
    }
    return on_support > 0.0 ? u.maxCoeff() / on_support : 1.0;
  };

  std::vector<UgaheriWitness> all(subsets.size() + extra.size());
  parallel_for(subsets.size(), [&](std::size_t t) {
    const CapacityResult cap =
        capacitary_measure(k, SupportSet(subsets[t], k.size()), tol);
    all[t] = {subsets[t], ratio_of(cap.gamma)};
  });
  for (std::size_t e = 0; e < extra.size(); ++e) {
    std::vector<Index> support;
    for (Index i = 0; i < extra[e].size(); ++i) {
      if (extra[e][i] > 0.0) support.push_back(i);
    }
    all[subsets.size() + e] = {support, ratio_of(extra[e])};
  }

  UgaheriEstimate out;
  out.samples = static_cast<int>(all.size());
  std::stable_sort(all.begin(), all.end(),
                   [](const UgaheriWitness& a, const UgaheriWitness& b) { return a.ratio > b.ratio; });
  out.h_hat = std::max(1.0, all.front().ratio);
  all.resize(std::min<std::size_t>(all.size(), kUgaheriWitnesses));
  out.witnesses = std::move(all);
  return out;
}

}  // namespace sweep::experiments

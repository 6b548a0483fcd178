#include <sweep/core.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace sweep {

namespace {

constexpr Index kEigenvalueCertificateLimit = 400;

void require_size(Index expected, Index got, const char* what) {
  if (expected != got) throw SizeMismatch(expected, got, what);
}

}  // namespace

SizeMismatch::SizeMismatch(Index expected, Index got, const std::string& what)
    : std::invalid_argument(what + ": expected size " + std::to_string(expected) +
                            ", got " + std::to_string(got)) {}

NotPositiveDefinite::NotPositiveDefinite(Vector witness, double quadratic_form)
    : std::runtime_error("kernel violates the energy principle: witness w has wᵀKw = " +
                         std::to_string(quadratic_form)),
      witness_(std::move(witness)),
      quadratic_form_(quadratic_form) {}

PdCertificate check_energy_principle(const Matrix& entries) {
  if (entries.rows() != entries.cols()) {
    throw InvalidKernel("kernel matrix is not square");
  }
  Eigen::LLT<Matrix> llt(entries);
  bool ok = llt.info() == Eigen::Success;
  PdCertificate cert;
  if (ok) {
    const Matrix& l = llt.matrixLLT();
    double min_pivot = l(0, 0) * l(0, 0);
    for (Index i = 1; i < l.rows(); ++i) min_pivot = std::min(min_pivot, l(i, i) * l(i, i));
    ok = min_pivot > 0.0 && std::isfinite(min_pivot);
    cert.min_pivot = min_pivot;
  }
  if (ok && entries.rows() > kEigenvalueCertificateLimit) return cert;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(entries);
  const double lowest = eig.eigenvalues()(0);
  if (ok && lowest > 0.0) {
    cert.min_eigenvalue = lowest;
    return cert;
  }
  Vector w = eig.eigenvectors().col(0);
  Index arg = 0;
  w.cwiseAbs().maxCoeff(&arg);
  w /= w[arg];
  throw NotPositiveDefinite(w, w.dot(entries * w));
}

SupportSet::SupportSet(std::vector<Index> indices, Index universe, std::string label)
    : indices_(std::move(indices)), universe_(universe), label_(std::move(label)) {
  if (indices_.empty()) throw std::invalid_argument("support set must be nonempty");
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] < 0 || indices_[i] >= universe_) {
      throw std::invalid_argument("support set index " + std::to_string(indices_[i]) +
                                  " outside [0, " + std::to_string(universe_) + ")");
    }
    if (i > 0 && indices_[i] <= indices_[i - 1]) {
      throw std::invalid_argument("support set indices must be strictly increasing");
    }
  }
}

SupportSet SupportSet::all(Index universe, std::string label) {
  return range(0, universe, universe, std::move(label));
}

SupportSet SupportSet::range(Index first, Index last, Index universe, std::string label) {
  std::vector<Index> idx;
  for (Index i = first; i < last; ++i) idx.push_back(i);
  return SupportSet(std::move(idx), universe, std::move(label));
}

bool SupportSet::contains(Index i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

bool SupportSet::is_subset_of(const SupportSet& other) const {
  return universe_ == other.universe_ &&
         std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(),
                       indices_.end());
}

void require_nested(const std::vector<SupportSet>& chain, ChainDirection direction) {
  if (chain.empty()) throw NotNested("chain of support sets is empty");
  for (std::size_t j = 1; j < chain.size(); ++j) {
    const SupportSet& prev = chain[j - 1];
    const SupportSet& next = chain[j];
    const bool ok = direction == ChainDirection::Increasing
                        ? prev.is_subset_of(next) && prev.size() < next.size()
                        : next.is_subset_of(prev) && next.size() < prev.size();
    if (!ok) {
      throw NotNested("support sets " + std::to_string(j - 1) + " and " + std::to_string(j) +
                      " are not strictly " +
                      (direction == ChainDirection::Increasing ? "increasing" : "decreasing"));
    }
  }
}

KernelMatrix::KernelMatrix(Matrix entries) : entries_(std::move(entries)) {
  const Index m = entries_.rows();
  if (m == 0 || entries_.cols() != m) throw InvalidKernel("kernel matrix must be square and nonempty");
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      const double v = entries_(i, j);
      if (!std::isfinite(v)) throw InvalidKernel("kernel entry is not finite");
      if (v < 0.0) {
        throw InvalidKernel("kernel entry (" + std::to_string(i) + "," + std::to_string(j) +
                            ") is negative");
      }
      if (j > i) {
        const double u = entries_(j, i);
        if (std::abs(u - v) > 1e-12 * std::max(1.0, std::abs(v))) {
          throw InvalidKernel("kernel matrix is not symmetric at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
        }
        entries_(j, i) = v;
      }
    }
  }
  certificate_ = check_energy_principle(entries_);
}

Matrix KernelMatrix::restricted(const SupportSet& a) const {
  require_size(size(), a.universe(), "support set universe");
  const auto& idx = a.indices();
  const Index k = a.size();
  Matrix out(k, k);
  for (Index c = 0; c < k; ++c) {
    for (Index r = 0; r < k; ++r) out(r, c) = entries_(idx[r], idx[c]);
  }
  return out;
}

Measure Measure::atom(Index m, Index node, double mass) {
  if (node < 0 || node >= m) throw std::out_of_range("atom node outside the node set");
  Vector w = Vector::Zero(m);
  w[node] = mass;
  return Measure(std::move(w));
}

Measure Measure::embed(const Vector& local, const SupportSet& a) {
  require_size(a.size(), local.size(), "local weights");
  Vector w = Vector::Zero(a.universe());
  for (Index r = 0; r < a.size(); ++r) w[a.indices()[r]] = local[r];
  return Measure(std::move(w));
}

Measure Measure::positive_part() const { return Measure(weights_.cwiseMax(0.0)); }

Measure Measure::negative_part() const { return Measure((-weights_).cwiseMax(0.0)); }

Measure Measure::variation() const { return Measure(weights_.cwiseAbs()); }

bool Measure::supported_on(const SupportSet& a) const {
  require_size(size(), a.universe(), "support set universe");
  for (Index i = 0; i < size(); ++i) {
    if (weights_[i] != 0.0 && !a.contains(i)) return false;
  }
  return true;
}

Vector Measure::restricted(const SupportSet& a) const {
  require_size(size(), a.universe(), "support set universe");
  Vector out(a.size());
  for (Index r = 0; r < a.size(); ++r) out[r] = weights_[a.indices()[r]];
  return out;
}

Measure operator+(const Measure& a, const Measure& b) {
  require_size(a.size(), b.size(), "measure");
  return Measure(a.weights_ + b.weights_);
}

Measure operator-(const Measure& a, const Measure& b) {
  require_size(a.size(), b.size(), "measure");
  return Measure(a.weights_ - b.weights_);
}

Measure operator*(double s, const Measure& a) { return Measure(s * a.weights_); }

Field Field::from_charge(const KernelMatrix& k, const Measure& omega) {
  return Field(-potential(k, omega), FieldOrigin::FromCharge);
}

Field Field::direct(Vector values) { return Field(std::move(values), FieldOrigin::Direct); }

Vector potential(const KernelMatrix& k, const Measure& mu) {
  require_size(k.size(), mu.size(), "measure");
  return k.entries() * mu.weights();
}

double mutual_energy(const KernelMatrix& k, const Measure& mu, const Measure& nu) {
  require_size(k.size(), mu.size(), "measure");
  require_size(k.size(), nu.size(), "measure");
  return mu.weights().dot(k.entries() * nu.weights());
}

double energy(const KernelMatrix& k, const Measure& mu) { return mutual_energy(k, mu, mu); }

double strong_distance(const KernelMatrix& k, const Measure& mu, const Measure& nu) {
  return std::sqrt(std::max(0.0, energy(k, mu - nu)));
}

double gauss_functional(const KernelMatrix& k, const Measure& omega, const Measure& mu) {
  require_size(k.size(), omega.size(), "charge");
  require_size(k.size(), mu.size(), "measure");
  const Vector u = k.entries() * mu.weights();
  return mu.weights().dot(u) - 2.0 * omega.weights().dot(u);
}

Vector weighted_potential(const KernelMatrix& k, const Field& f, const Measure& mu) {
  require_size(k.size(), f.values().size(), "field");
  return potential(k, mu) + f.values();
}

}  // namespace sweep

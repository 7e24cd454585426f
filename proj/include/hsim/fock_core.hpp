#pragma once

// Truncated Fock-space substrate: mode spaces, states, sparse operators and
// expectation values.
//
// Index layout is row-major over the declared modes: the last declared mode
// varies fastest. Quadratures use X = (a^dag + a)/2, so the vacuum variance of
// any quadrature is 1/4 (not 1/2 as in the sqrt(2) convention).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <unsupported/Eigen/KroneckerProduct>

namespace hsim {

using cplx = std::complex<double>;
using Vector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;

inline constexpr double kNormTolerance = 1e-10;
inline constexpr double kPsdTolerance = 1e-10;
inline constexpr std::size_t kDefaultMaxDimension = std::size_t{1} << 24;

struct SpaceError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DimensionLimitError : std::length_error {
  using std::length_error::length_error;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct CutoffError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dimension cap used when none is passed explicitly. Honors the
/// HOMODYNE_SIM_MAX_DIM environment variable (read once).
inline std::size_t default_max_dimension() {
  static const std::size_t value = [] {
    if (const char* env = std::getenv("HOMODYNE_SIM_MAX_DIM")) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    return kDefaultMaxDimension;
  }();
  return value;
}

struct Mode {
  std::string label;
  int cutoff = 1;  // levels 0..cutoff

  friend bool operator==(const Mode&, const Mode&) = default;
};

class HilbertSpace {
 public:
  HilbertSpace() : HilbertSpace(std::vector<Mode>{}) {}

  explicit HilbertSpace(std::vector<Mode> modes,
                        std::size_t max_dimension = default_max_dimension())
      : modes_(std::move(modes)) {
    std::unordered_set<std::string> seen;
    for (const auto& m : modes_) {
      if (m.cutoff < 1)
        throw SpaceError("mode '" + m.label + "': cutoff must be >= 1");
      if (!seen.insert(m.label).second)
        throw SpaceError("duplicate mode label '" + m.label + "'");
    }
    strides_.assign(modes_.size(), 1);
    dim_ = 1;
    for (std::size_t k = modes_.size(); k-- > 0;) {
      strides_[k] = dim_;
      const auto d = static_cast<std::size_t>(modes_[k].cutoff) + 1;
      if (dim_ > max_dimension / d)
        throw DimensionLimitError("Hilbert space dimension exceeds limit of " +
                                  std::to_string(max_dimension));
      dim_ *= d;
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t num_modes() const { return modes_.size(); }
  const std::vector<Mode>& modes() const { return modes_; }
  const Mode& mode(std::size_t k) const { return modes_[k]; }
  std::size_t stride(std::size_t k) const { return strides_[k]; }
  std::size_t levels(std::size_t k) const {
    return static_cast<std::size_t>(modes_[k].cutoff) + 1;
  }

  std::optional<std::size_t> find(const std::string& label) const {
    for (std::size_t k = 0; k < modes_.size(); ++k)
      if (modes_[k].label == label) return k;
    return std::nullopt;
  }

  std::size_t index_of(const std::string& label) const {
    if (auto k = find(label)) return *k;
    throw SpaceError("unknown mode '" + label + "'");
  }

  /// Occupation of mode k in basis state `index`.
  int level(std::size_t index, std::size_t k) const {
    return static_cast<int>((index / strides_[k]) % levels(k));
  }

  std::size_t index(const std::vector<int>& occupations) const {
    if (occupations.size() != modes_.size())
      throw SpaceError("occupation vector has wrong length");
    std::size_t i = 0;
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      if (occupations[k] < 0 || occupations[k] > modes_[k].cutoff)
        throw SpaceError("occupation out of range for mode '" +
                         modes_[k].label + "'");
      i += static_cast<std::size_t>(occupations[k]) * strides_[k];
    }
    return i;
  }

  friend bool operator==(const HilbertSpace& a, const HilbertSpace& b) {
    return a.modes_ == b.modes_;
  }

 private:
  std::vector<Mode> modes_;
  std::vector<std::size_t> strides_;
  std::size_t dim_ = 1;
};

inline HilbertSpace make_space(std::vector<Mode> modes) {
  return HilbertSpace(std::move(modes));
}

/// Concatenation of mode lists; labels must be disjoint.
inline HilbertSpace concat(const std::vector<HilbertSpace>& parts,
                           std::size_t max_dimension = default_max_dimension()) {
  std::vector<Mode> modes;
  for (const auto& p : parts)
    modes.insert(modes.end(), p.modes().begin(), p.modes().end());
  return HilbertSpace(std::move(modes), max_dimension);
}

inline void require_same_space(const HilbertSpace& a, const HilbertSpace& b,
                               const char* what) {
  if (!(a == b)) throw SpaceError(std::string(what) + ": space mismatch");
}

// ---------------------------------------------------------------------------

class LinearOperator {
 public:
  LinearOperator() = default;
  LinearOperator(HilbertSpace space, SparseMatrix matrix)
      : space_(std::move(space)), matrix_(std::move(matrix)) {
    const auto d = static_cast<Eigen::Index>(space_.dim());
    if (matrix_.rows() != d || matrix_.cols() != d)
      throw SpaceError("operator matrix does not match space dimension");
    matrix_.makeCompressed();
  }

  const HilbertSpace& space() const { return space_; }
  const SparseMatrix& matrix() const { return matrix_; }
  std::size_t dim() const { return space_.dim(); }

  cplx entry(std::size_t row, std::size_t col) const {
    return matrix_.coeff(static_cast<Eigen::Index>(row),
                         static_cast<Eigen::Index>(col));
  }

  /// Largest |A - A^dag| entry relative to max(1, largest |A| entry).
  double hermiticity_defect() const {
    const SparseMatrix diff = matrix_ - SparseMatrix(matrix_.adjoint());
    double worst = 0.0, scale = 1.0;
    for (Eigen::Index k = 0; k < diff.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
        worst = std::max(worst, std::abs(it.value()));
    for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it)
        scale = std::max(scale, std::abs(it.value()));
    return worst / scale;
  }

  bool is_hermitian(double tol = kNormTolerance) const {
    return hermiticity_defect() <= tol;
  }

  DenseMatrix dense() const { return DenseMatrix(matrix_); }

 private:
  HilbertSpace space_;
  SparseMatrix matrix_;
};

inline LinearOperator identity(const HilbertSpace& space) {
  SparseMatrix m(static_cast<Eigen::Index>(space.dim()),
                 static_cast<Eigen::Index>(space.dim()));
  m.setIdentity();
  return {space, std::move(m)};
}

/// Embeds an operator defined on a subset of modes into a larger space,
/// acting as the identity on every other mode. Sub-space modes must appear in
/// `full` with identical cutoffs; their order inside `full` is arbitrary.
inline LinearOperator embed(const LinearOperator& op, const HilbertSpace& full) {
  const HilbertSpace& sub = op.space();
  if (sub == full) return op;
  std::vector<std::size_t> where(sub.num_modes());
  for (std::size_t k = 0; k < sub.num_modes(); ++k) {
    where[k] = full.index_of(sub.mode(k).label);
    if (full.mode(where[k]).cutoff != sub.mode(k).cutoff)
      throw SpaceError("embed: cutoff mismatch for mode '" +
                       sub.mode(k).label + "'");
  }

  // For every sub-space column: (row offset in full index, value).
  const std::size_t sd = sub.dim();
  std::vector<std::vector<std::pair<std::ptrdiff_t, cplx>>> cols(sd);
  const SparseMatrix& m = op.matrix();
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      std::ptrdiff_t delta = 0;
      const auto r = static_cast<std::size_t>(it.row());
      for (std::size_t k = 0; k < sub.num_modes(); ++k)
        delta += static_cast<std::ptrdiff_t>(full.stride(where[k])) *
                 (sub.level(r, k) - sub.level(static_cast<std::size_t>(c), k));
      cols[static_cast<std::size_t>(c)].emplace_back(delta, it.value());
    }

  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<std::size_t>(m.nonZeros()) * (full.dim() / sd));
  for (std::size_t i = 0; i < full.dim(); ++i) {
    std::size_t sc = 0;
    for (std::size_t k = 0; k < sub.num_modes(); ++k)
      sc += static_cast<std::size_t>(full.level(i, where[k])) * sub.stride(k);
    for (const auto& [delta, v] : cols[sc])
      trips.emplace_back(static_cast<Eigen::Index>(
                             static_cast<std::ptrdiff_t>(i) + delta),
                         static_cast<Eigen::Index>(i), v);
  }
  const auto d = static_cast<Eigen::Index>(full.dim());
  SparseMatrix out(d, d);
  out.setFromTriplets(trips.begin(), trips.end());
  return {full, std::move(out)};
}

namespace detail {

inline LinearOperator single_mode(const HilbertSpace& space,
                                  const std::string& label,
                                  const SparseMatrix& local) {
  const auto k = space.index_of(label);
  HilbertSpace sub({space.mode(k)});
  return embed(LinearOperator(std::move(sub), local), space);
}

inline SparseMatrix lowering_matrix(int cutoff) {
  SparseMatrix m(cutoff + 1, cutoff + 1);
  std::vector<Eigen::Triplet<cplx>> t;
  for (int n = 1; n <= cutoff; ++n)
    t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace detail

/// <n-1|a|n> = sqrt(n) on the given mode. The creation operator is its exact
/// adjoint, so a^dag annihilates the top level rather than wrapping.
inline LinearOperator annihilation(const HilbertSpace& space,
                                   const std::string& label) {
  const int cutoff = space.mode(space.index_of(label)).cutoff;
  return detail::single_mode(space, label, detail::lowering_matrix(cutoff));
}

inline LinearOperator creation(const HilbertSpace& space,
                               const std::string& label) {
  const int cutoff = space.mode(space.index_of(label)).cutoff;
  return detail::single_mode(
      space, label, SparseMatrix(detail::lowering_matrix(cutoff).adjoint()));
}

inline LinearOperator number(const HilbertSpace& space,
                             const std::string& label) {
  const int cutoff = space.mode(space.index_of(label)).cutoff;
  SparseMatrix m(cutoff + 1, cutoff + 1);
  std::vector<Eigen::Triplet<cplx>> t;
  for (int n = 1; n <= cutoff; ++n) t.emplace_back(n, n, double(n));
  m.setFromTriplets(t.begin(), t.end());
  return detail::single_mode(space, label, m);
}

/// Q_phi = (a^dag e^{i phi} + a e^{-i phi}) / 2; phi = 0 gives X, phi = pi/2
/// gives P = i(a^dag - a)/2.
inline LinearOperator quadrature(const HilbertSpace& space,
                                 const std::string& label, double phi) {
  const int cutoff = space.mode(space.index_of(label)).cutoff;
  const SparseMatrix a = detail::lowering_matrix(cutoff);
  const cplx e = std::polar(1.0, phi);
  const SparseMatrix q =
      (SparseMatrix(a.adjoint()) * (0.5 * e) + a * (0.5 * std::conj(e)));
  return detail::single_mode(space, label, q);
}

inline LinearOperator compose(const LinearOperator& a, const LinearOperator& b) {
  require_same_space(a.space(), b.space(), "compose");
  SparseMatrix m = a.matrix() * b.matrix();
  m.prune(cplx(0.0));
  return {a.space(), std::move(m)};
}

inline LinearOperator adjoint(const LinearOperator& a) {
  return {a.space(), SparseMatrix(a.matrix().adjoint())};
}

inline LinearOperator lincomb(const std::vector<cplx>& coeffs,
                              const std::vector<LinearOperator>& ops) {
  if (coeffs.size() != ops.size() || ops.empty())
    throw std::invalid_argument("lincomb: coefficient/operator count mismatch");
  SparseMatrix m = ops.front().matrix() * coeffs.front();
  for (std::size_t i = 1; i < ops.size(); ++i) {
    require_same_space(ops.front().space(), ops[i].space(), "lincomb");
    m += ops[i].matrix() * coeffs[i];
  }
  m.prune(cplx(0.0));
  return {ops.front().space(), std::move(m)};
}

inline LinearOperator operator*(const LinearOperator& a, const LinearOperator& b) {
  return compose(a, b);
}
inline LinearOperator operator+(const LinearOperator& a, const LinearOperator& b) {
  return lincomb({1.0, 1.0}, {a, b});
}
inline LinearOperator operator-(const LinearOperator& a, const LinearOperator& b) {
  return lincomb({1.0, -1.0}, {a, b});
}
inline LinearOperator operator*(cplx s, const LinearOperator& a) {
  return {a.space(), SparseMatrix(a.matrix() * s)};
}

/// A^p (p >= 0).
inline LinearOperator power(const LinearOperator& a, int p) {
  LinearOperator out = identity(a.space());
  for (int i = 0; i < p; ++i) out = compose(out, a);
  return out;
}

// ---------------------------------------------------------------------------

class QuantumState {
 public:
  QuantumState() = default;

  static QuantumState pure(HilbertSpace space, Vector amplitudes,
                           double tol = kNormTolerance) {
    if (static_cast<std::size_t>(amplitudes.size()) != space.dim())
      throw SpaceError("amplitude vector does not match space dimension");
    const double n2 = amplitudes.squaredNorm();
    if (std::abs(n2 - 1.0) > tol)
      throw DomainError("pure state is not normalized (|psi|^2 = " +
                        std::to_string(n2) + ")");
    return QuantumState(std::move(space), std::move(amplitudes));
  }

  static QuantumState mixed(HilbertSpace space, DenseMatrix rho,
                            double tol = kNormTolerance,
                            double psd_tol = kPsdTolerance) {
    const auto d = static_cast<Eigen::Index>(space.dim());
    if (rho.rows() != d || rho.cols() != d)
      throw SpaceError("density matrix does not match space dimension");
    check_hermitian_trace(rho, tol);
    DenseMatrix shifted = rho;
    shifted.diagonal().array() += psd_tol;
    Eigen::LLT<DenseMatrix> llt(shifted);
    if (llt.info() != Eigen::Success)
      throw DomainError("density matrix is not positive semidefinite");
    return QuantumState(std::move(space), std::move(rho));
  }

  /// Convex combination of states on a common space. Positivity holds by
  /// construction, so only the weights are validated.
  static QuantumState mixture(const std::vector<double>& weights,
                              const std::vector<QuantumState>& states) {
    if (weights.size() != states.size() || states.empty())
      throw std::invalid_argument("mixture: weight/state count mismatch");
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw DomainError("mixture: negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > kNormTolerance)
      throw DomainError("mixture: weights do not sum to 1");
    DenseMatrix rho = DenseMatrix::Zero(
        static_cast<Eigen::Index>(states.front().dim()),
        static_cast<Eigen::Index>(states.front().dim()));
    for (std::size_t i = 0; i < states.size(); ++i) {
      require_same_space(states.front().space(), states[i].space(), "mixture");
      rho += weights[i] * states[i].density_matrix();
    }
    return trusted(states.front().space(), std::move(rho));
  }

  /// Skips the positivity check; for matrices positive by construction
  /// (thermal states, conjugations, tensor products). Trace and hermiticity
  /// are still validated.
  static QuantumState trusted(HilbertSpace space, DenseMatrix rho) {
    check_hermitian_trace(rho, kNormTolerance);
    return QuantumState(std::move(space), std::move(rho));
  }

  const HilbertSpace& space() const { return space_; }
  std::size_t dim() const { return space_.dim(); }
  bool is_pure() const { return std::holds_alternative<Vector>(data_); }

  const Vector& amplitudes() const {
    if (!is_pure()) throw std::logic_error("state is not pure");
    return std::get<Vector>(data_);
  }

  /// The stored density matrix, or |psi><psi| for pure states.
  DenseMatrix density_matrix() const {
    if (is_pure()) {
      const Vector& v = std::get<Vector>(data_);
      return v * v.adjoint();
    }
    return std::get<DenseMatrix>(data_);
  }

  const DenseMatrix& stored_density() const {
    return std::get<DenseMatrix>(data_);
  }

  /// |psi|^2 or trace(rho).
  double trace() const {
    return is_pure() ? std::get<Vector>(data_).squaredNorm()
                     : std::get<DenseMatrix>(data_).trace().real();
  }

 private:
  QuantumState(HilbertSpace s, Vector v) : space_(std::move(s)), data_(std::move(v)) {}
  QuantumState(HilbertSpace s, DenseMatrix m)
      : space_(std::move(s)), data_(std::move(m)) {}

  static void check_hermitian_trace(const DenseMatrix& rho, double tol) {
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol)
      throw DomainError("density matrix is not Hermitian");
    if (std::abs(rho.trace() - cplx(1.0)) > tol)
      throw DomainError("density matrix trace is not 1");
  }

  HilbertSpace space_;
  std::variant<Vector, DenseMatrix> data_;
};

inline cplx expectation(const QuantumState& state, const LinearOperator& op) {
  require_same_space(state.space(), op.space(), "expectation");
  const SparseMatrix& m = op.matrix();
  if (state.is_pure()) {
    const Vector& psi = state.amplitudes();
    return psi.dot(m * psi);
  }
  const DenseMatrix& rho = state.stored_density();
  cplx acc = 0.0;
  for (Eigen::Index c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it)
      acc += it.value() * rho(c, it.row());
  return acc;
}

inline double variance(const QuantumState& state, const LinearOperator& op) {
  require_same_space(state.space(), op.space(), "variance");
  if (!op.is_hermitian())
    throw DomainError("variance requires a Hermitian operator");
  const double mean = expectation(state, op).real();
  double second;
  if (state.is_pure()) {
    second = (op.matrix() * state.amplitudes()).squaredNorm();
  } else {
    second = expectation(state, compose(op, op)).real();
  }
  return second - mean * mean;
}

/// The same state with every cutoff raised by `extra` (new levels empty).
/// Products of truncated ladder matrices are exact on the original support
/// up to `extra` net raisings per mode.
inline QuantumState pad(const QuantumState& state, int extra) {
  if (extra < 0) throw DomainError("pad: extra levels must be >= 0");
  if (extra == 0) return state;
  const HilbertSpace& sp = state.space();
  std::vector<Mode> modes = sp.modes();
  for (auto& m : modes) m.cutoff += extra;
  HilbertSpace big(std::move(modes));
  std::vector<Eigen::Index> map(sp.dim());
  for (std::size_t i = 0; i < sp.dim(); ++i) {
    std::size_t j = 0;
    for (std::size_t k = 0; k < sp.num_modes(); ++k)
      j += static_cast<std::size_t>(sp.level(i, k)) * big.stride(k);
    map[i] = static_cast<Eigen::Index>(j);
  }
  const auto d = static_cast<Eigen::Index>(sp.dim());
  if (state.is_pure()) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(big.dim()));
    for (Eigen::Index i = 0; i < d; ++i) v(map[i]) = state.amplitudes()(i);
    return QuantumState::pure(std::move(big), std::move(v), 1e-8);
  }
  const DenseMatrix& r = state.stored_density();
  DenseMatrix out = DenseMatrix::Zero(static_cast<Eigen::Index>(big.dim()),
                                      static_cast<Eigen::Index>(big.dim()));
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) out(map[i], map[j]) = r(i, j);
  return QuantumState::trusted(std::move(big), std::move(out));
}

/// Product state on the concatenated space. Any mixed factor promotes the
/// result to a density matrix; the dimension cap then applies to dim^2.
inline QuantumState tensor_product(const std::vector<QuantumState>& states) {
  if (states.empty()) throw std::invalid_argument("tensor_product: no states");
  std::vector<HilbertSpace> spaces;
  bool all_pure = true;
  for (const auto& s : states) {
    spaces.push_back(s.space());
    all_pure = all_pure && s.is_pure();
  }
  HilbertSpace space = concat(spaces);
  if (all_pure) {
    Vector v = states.front().amplitudes();
    for (std::size_t i = 1; i < states.size(); ++i)
      v = Eigen::kroneckerProduct(v, states[i].amplitudes()).eval();
    return QuantumState::pure(std::move(space), std::move(v));
  }
  const std::size_t limit = default_max_dimension();
  if (space.dim() > limit / space.dim())
    throw DimensionLimitError("mixed tensor product exceeds dimension limit");
  DenseMatrix rho = states.front().density_matrix();
  for (std::size_t i = 1; i < states.size(); ++i)
    rho = Eigen::kroneckerProduct(rho, states[i].density_matrix()).eval();
  return QuantumState::trusted(std::move(space), std::move(rho));
}

/// Reduced density matrix of one mode (partial trace over the rest).
inline DenseMatrix reduced_density_matrix(const QuantumState& state,
                                          const std::string& label) {
  const HilbertSpace& sp = state.space();
  const std::size_t k = sp.index_of(label);
  const auto levels = static_cast<Eigen::Index>(sp.levels(k));
  const std::size_t stride = sp.stride(k);
  const std::size_t block = stride * sp.levels(k);
  DenseMatrix out = DenseMatrix::Zero(levels, levels);
  // Basis index = outer * block + n * stride + inner.
  const std::size_t outer_count = sp.dim() / block;
  if (state.is_pure()) {
    const Vector& psi = state.amplitudes();
    for (std::size_t o = 0; o < outer_count; ++o)
      for (std::size_t in = 0; in < stride; ++in)
        for (Eigen::Index n = 0; n < levels; ++n) {
          const cplx an = psi(static_cast<Eigen::Index>(
              o * block + static_cast<std::size_t>(n) * stride + in));
          if (an == cplx(0.0)) continue;
          for (Eigen::Index m = 0; m < levels; ++m)
            out(n, m) += an * std::conj(psi(static_cast<Eigen::Index>(
                                  o * block + static_cast<std::size_t>(m) * stride + in)));
        }
    return out;
  }
  const DenseMatrix& rho = state.stored_density();
  for (std::size_t o = 0; o < outer_count; ++o)
    for (std::size_t in = 0; in < stride; ++in)
      for (Eigen::Index n = 0; n < levels; ++n)
        for (Eigen::Index m = 0; m < levels; ++m)
          out(n, m) += rho(
              static_cast<Eigen::Index>(o * block + static_cast<std::size_t>(n) * stride + in),
              static_cast<Eigen::Index>(o * block + static_cast<std::size_t>(m) * stride + in));
  return out;
}

/// Occupation probabilities P(n) of one mode.
inline std::vector<double> number_distribution(const QuantumState& state,
                                               const std::string& label) {
  const DenseMatrix r = reduced_density_matrix(state, label);
  std::vector<double> p(static_cast<std::size_t>(r.rows()));
  for (Eigen::Index n = 0; n < r.rows(); ++n)
    p[static_cast<std::size_t>(n)] = r(n, n).real();
  return p;
}

/// Pure-state ensemble {(p_k, psi_k)} of a state; pure states map to a single
/// member. Members with weight below `drop` are discarded and the remaining
/// weights are left as-is.
inline std::vector<std::pair<double, QuantumState>> ensemble(
    const QuantumState& state, double drop = 1e-15) {
  if (state.is_pure()) return {{1.0, state}};
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(state.stored_density());
  std::vector<std::pair<double, QuantumState>> out;
  for (Eigen::Index k = es.eigenvalues().size(); k-- > 0;) {
    const double p = es.eigenvalues()(k);
    if (p <= drop) continue;
    Vector v = es.eigenvectors().col(k);
    v.normalize();
    out.emplace_back(p, QuantumState::pure(state.space(), std::move(v)));
  }
  return out;
}

}  // namespace hsim

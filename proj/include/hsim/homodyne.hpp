#pragma once

// Measured quadratures with finite local oscillators.
//
// A balanced homodyne arm mixes signal mode a with LO mode c and records the
// intensity difference a^dag c + a c^dag. Normalized by the LO intensity this
// gives
//
//   X^{m,phi} = (e^{i phi} a^dag c + e^{-i phi} a c^dag) / (2 sqrt(<n_c>)),
//
// with X^(m) = X^{m,0} and P^(m) = X^{m,pi/2}. Note X^(m) + i P^(m) equals
// a c^dag / sqrt(<n_c>).
//
// Two evaluation paths are provided for every joint signal+LO quantity:
//   - full: build the four-mode product state and evaluate the composite
//     operator on it (mixed factors are expanded into their eigen-ensembles so
//     that only pure composites are ever materialized);
//   - factored: use that the joint state is rho_ab (x) sigma_c (x) sigma_d and
//     multiply per-factor expectation values.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hsim/fock_core.hpp"
#include "hsim/state_factory.hpp"

namespace hsim {

enum class Path { factored, full };

inline const char* to_string(Path p) { return p == Path::full ? "full" : "factored"; }

/// Operator sum_k w_k A_k^(0) (x) A_k^(1) (x) ... over a fixed list of factor
/// spaces.
class ProductOperator {
 public:
  struct Term {
    cplx weight;
    std::vector<LinearOperator> factors;
  };

  explicit ProductOperator(std::vector<HilbertSpace> spaces) : spaces_(std::move(spaces)) {}

  static ProductOperator product(std::vector<HilbertSpace> spaces, cplx weight,
                                 std::vector<LinearOperator> factors) {
    ProductOperator op(std::move(spaces));
    op.add_term(weight, std::move(factors));
    return op;
  }

  void add_term(cplx weight, std::vector<LinearOperator> factors) {
    if (factors.size() != spaces_.size())
      throw SpaceError("product term has wrong number of factors");
    for (std::size_t f = 0; f < factors.size(); ++f)
      require_same_space(spaces_[f], factors[f].space(), "product term");
    terms_.push_back({weight, std::move(factors)});
  }

  const std::vector<HilbertSpace>& spaces() const { return spaces_; }
  const std::vector<Term>& terms() const { return terms_; }

  ProductOperator operator+(const ProductOperator& o) const {
    check_compatible(o);
    ProductOperator out = *this;
    out.terms_.insert(out.terms_.end(), o.terms_.begin(), o.terms_.end());
    return out;
  }

  ProductOperator operator*(const ProductOperator& o) const {
    check_compatible(o);
    ProductOperator out(spaces_);
    for (const auto& t1 : terms_)
      for (const auto& t2 : o.terms_) {
        std::vector<LinearOperator> f;
        f.reserve(spaces_.size());
        for (std::size_t k = 0; k < spaces_.size(); ++k)
          f.push_back(compose(t1.factors[k], t2.factors[k]));
        out.terms_.push_back({t1.weight * t2.weight, std::move(f)});
      }
    return out;
  }

  friend ProductOperator operator*(cplx s, ProductOperator op) {
    for (auto& t : op.terms_) t.weight *= s;
    return op;
  }

  ProductOperator adjoint() const {
    ProductOperator out(spaces_);
    for (const auto& t : terms_) {
      std::vector<LinearOperator> f;
      for (const auto& a : t.factors) f.push_back(hsim::adjoint(a));
      out.terms_.push_back({std::conj(t.weight), std::move(f)});
    }
    return out;
  }

  /// Expectation on the product state states[0] (x) states[1] (x) ...
  cplx expectation(const std::vector<QuantumState>& states) const {
    if (states.size() != spaces_.size())
      throw SpaceError("product expectation: wrong number of factor states");
    cplx total = 0.0;
    for (const auto& t : terms_) {
      cplx v = t.weight;
      for (std::size_t k = 0; k < spaces_.size() && v != cplx(0.0); ++k)
        v *= hsim::expectation(states[k], t.factors[k]);
      total += v;
    }
    return total;
  }

  /// The same operator on the concatenated space.
  LinearOperator lift() const {
    const HilbertSpace full = concat(spaces_);
    SparseMatrix m(static_cast<Eigen::Index>(full.dim()),
                   static_cast<Eigen::Index>(full.dim()));
    for (const auto& t : terms_) {
      SparseMatrix term = embed(t.factors.front(), full).matrix();
      for (std::size_t k = 1; k < t.factors.size(); ++k)
        term = (term * embed(t.factors[k], full).matrix()).eval();
      m += term * t.weight;
    }
    m.prune(cplx(0.0));
    return {full, std::move(m)};
  }

 private:
  void check_compatible(const ProductOperator& o) const {
    if (spaces_.size() != o.spaces_.size())
      throw SpaceError("product operators over different factor lists");
    for (std::size_t k = 0; k < spaces_.size(); ++k)
      require_same_space(spaces_[k], o.spaces_[k], "product operator");
  }

  std::vector<HilbertSpace> spaces_;
  std::vector<Term> terms_;
};

// ---------------------------------------------------------------------------

struct MeasuredQuadrature {
  std::string signal_mode;
  std::string lo_mode;
  double phase = 0.0;
  double lo_mean_n = 1.0;
};

struct MeasurementBudget {
  std::uint64_t samples = 1;
  double excess_noise = 0.0;  // counting error per detector, in particles
};

inline double single_mode_intensity(const QuantumState& lo) {
  if (lo.space().num_modes() != 1)
    throw SpaceError("LO state must be single-mode");
  return moments(lo, lo.space().mode(0).label, 1, 1).real();
}

inline void require_positive_intensity(double n, const char* what) {
  if (!(n > 0.0) || !std::isfinite(n))
    throw DomainError(std::string(what) + ": LO intensity must be positive");
}

/// (e^{i phi} a^dag c + e^{-i phi} a c^dag) / (2 sqrt(lo_mean_n)) on `space`.
inline LinearOperator measured_quadrature(const HilbertSpace& space,
                                          const MeasuredQuadrature& q) {
  require_positive_intensity(q.lo_mean_n, "measured_quadrature");
  const auto a = annihilation(space, q.signal_mode);
  const auto c = annihilation(space, q.lo_mode);
  const cplx e = std::polar(1.0, q.phase) / (2.0 * std::sqrt(q.lo_mean_n));
  return lincomb({e, std::conj(e)}, {compose(adjoint(a), c), compose(a, adjoint(c))});
}

/// As above, normalized by the exact intensity of `lo_state`.
inline LinearOperator measured_quadrature(const HilbertSpace& space,
                                          const std::string& signal_mode,
                                          const std::string& lo_mode, double phi,
                                          const QuantumState& lo_state) {
  return measured_quadrature(space, {signal_mode, lo_mode, phi,
                                     single_mode_intensity(lo_state)});
}

/// Noise added to a measured quadrature by a counting error of `excess_noise`
/// particles on the intensity difference.
inline double excess_noise_std(double excess_noise, double lo_mean_n) {
  require_positive_intensity(lo_mean_n, "excess_noise_std");
  if (excess_noise < 0.0) throw DomainError("excess noise must be >= 0");
  return excess_noise / (2.0 * lo_mean_n);
}

// ---------------------------------------------------------------------------

/// Extra empty Fock levels given to every mode of a setup, so that products
/// of up to four quadratures are not clipped by the cutoff.
inline constexpr int kOperatorHeadroom = 4;

/// Two homodyne arms: signal modes (a, b) of a two-mode state, LO c on arm a
/// and LO d on arm b. The LO intensities default to the exact <n> of the
/// supplied LO states; passing a value emulates a separately measured one.
class HomodyneSetup {
 public:
  enum Arm { arm_a = 0, arm_b = 1 };

  HomodyneSetup(QuantumState signal, QuantumState lo_c, QuantumState lo_d,
                std::optional<double> lo_c_mean_n = {},
                std::optional<double> lo_d_mean_n = {})
      : signal_(pad(signal, kOperatorHeadroom)),
        lo_c_(pad(lo_c, kOperatorHeadroom)),
        lo_d_(pad(lo_d, kOperatorHeadroom)) {
    if (signal_.space().num_modes() != 2)
      throw SpaceError("signal state must be two-mode");
    mean_n_[0] = lo_c_mean_n ? *lo_c_mean_n : single_mode_intensity(lo_c_);
    mean_n_[1] = lo_d_mean_n ? *lo_d_mean_n : single_mode_intensity(lo_d_);
    require_positive_intensity(mean_n_[0], "LO c");
    require_positive_intensity(mean_n_[1], "LO d");
    spaces_ = {signal_.space(), lo_c_.space(), lo_d_.space()};
    concat(spaces_, std::numeric_limits<std::size_t>::max());  // label clash check
  }

  const QuantumState& signal() const { return signal_; }
  const QuantumState& lo(Arm arm) const { return arm == arm_a ? lo_c_ : lo_d_; }
  double lo_mean_n(Arm arm) const { return mean_n_[arm]; }
  const std::string& signal_label(Arm arm) const { return signal_.space().mode(arm).label; }
  const std::string& lo_label(Arm arm) const { return lo(arm).space().mode(0).label; }
  const std::vector<HilbertSpace>& factor_spaces() const { return spaces_; }
  std::vector<QuantumState> factor_states() const { return {signal_, lo_c_, lo_d_}; }

  /// X^{m,phi} on one arm.
  ProductOperator quadrature(Arm arm, double phi) const {
    const auto a = annihilation(spaces_[0], signal_label(arm));
    const std::size_t lo_factor = arm == arm_a ? 1 : 2;
    const auto c = annihilation(spaces_[lo_factor], lo_label(arm));
    const cplx e = std::polar(1.0, phi) / (2.0 * std::sqrt(mean_n_[arm]));
    ProductOperator out(spaces_);
    out.add_term(e, factors(adjoint(a), lo_factor, c));
    out.add_term(std::conj(e), factors(a, lo_factor, adjoint(c)));
    return out;
  }

  ProductOperator x(Arm arm) const { return quadrature(arm, 0.0); }
  ProductOperator p(Arm arm) const { return quadrature(arm, std::numbers::pi / 2); }

  cplx expectation(const ProductOperator& op, Path path) const {
    if (path == Path::factored) return op.expectation(factor_states());
    const LinearOperator full = op.lift();
    cplx total = 0.0;
    for_each_composite([&](double w, const QuantumState& psi) {
      total += w * hsim::expectation(psi, full);
    });
    return total;
  }

  double variance(const ProductOperator& op, Path path) const {
    if (path == Path::factored) {
      const double mean = op.expectation(factor_states()).real();
      return (op * op).expectation(factor_states()).real() - mean * mean;
    }
    const LinearOperator full = op.lift();
    if (!full.is_hermitian()) throw DomainError("variance requires a Hermitian observable");
    double mean = 0.0, second = 0.0;
    for_each_composite([&](double w, const QuantumState& psi) {
      mean += w * hsim::expectation(psi, full).real();
      second += w * (full.matrix() * psi.amplitudes()).squaredNorm();
    });
    return second - mean * mean;
  }

  /// Calls f(weight, composite pure state) over the product of the factor
  /// ensembles.
  template <class F>
  void for_each_composite(F&& f) const {
    const auto es = ensemble(signal_);
    const auto ec = ensemble(lo_c_);
    const auto ed = ensemble(lo_d_);
    for (const auto& [ws, s] : es)
      for (const auto& [wc, c] : ec)
        for (const auto& [wd, d] : ed) f(ws * wc * wd, tensor_product({s, c, d}));
  }

 private:
  std::vector<LinearOperator> factors(LinearOperator sig, std::size_t lo_factor,
                                      LinearOperator lo) const {
    std::vector<LinearOperator> f{std::move(sig), identity(spaces_[1]), identity(spaces_[2])};
    f[lo_factor] = std::move(lo);
    return f;
  }

  QuantumState signal_, lo_c_, lo_d_;
  std::array<double, 2> mean_n_{};
  std::vector<HilbertSpace> spaces_;
};

/// The combination whose expectation is the first-order HZ left-hand side:
///   type 1: XaXb + PaPb - i XaPb + i PaXb  (= a b^dag c^dag d / sqrt(n_c n_d))
///   type 2: XaXb - PaPb + i XaPb + i PaXb  (= a b c^dag d^dag / sqrt(n_c n_d))
inline ProductOperator first_order_combination(const HomodyneSetup& s, int type) {
  using A = HomodyneSetup;
  const auto xa = s.x(A::arm_a), pa = s.p(A::arm_a);
  const auto xb = s.x(A::arm_b), pb = s.p(A::arm_b);
  const cplx i(0.0, 1.0);
  if (type == 1) return xa * xb + pa * pb + (-i) * (xa * pb) + i * (pa * xb);
  if (type == 2) return xa * xb + (-1.0) * (pa * pb) + i * (xa * pb) + i * (pa * xb);
  throw DomainError("criterion type must be 1 or 2");
}

/// Measured first-order HZ left-hand side (before taking |.|^2).
inline cplx hz_lhs_first_order(const HomodyneSetup& s, int type, Path path) {
  if (type != 1 && type != 2) throw DomainError("criterion type must be 1 or 2");
  if (path == Path::full) return s.expectation(first_order_combination(s, type), Path::full);
  using A = HomodyneSetup;
  const auto& sig = s.signal();
  const auto& a = s.signal_label(A::arm_a);
  const auto& b = s.signal_label(A::arm_b);
  const auto& sp = sig.space();
  const LinearOperator ab =
      type == 1 ? compose(annihilation(sp, a), creation(sp, b))
                : compose(annihilation(sp, a), annihilation(sp, b));
  const cplx c_dag = moments(s.lo(A::arm_a), s.lo_label(A::arm_a), 1, 0);
  const cplx d_part = type == 1 ? moments(s.lo(A::arm_b), s.lo_label(A::arm_b), 0, 1)
                                : moments(s.lo(A::arm_b), s.lo_label(A::arm_b), 1, 0);
  return expectation(sig, ab) * c_dag * d_part /
         std::sqrt(s.lo_mean_n(A::arm_a) * s.lo_mean_n(A::arm_b));
}

inline cplx hz_lhs_first_order(const QuantumState& rho_ab, const QuantumState& lo_c,
                               const QuantumState& lo_d, int type, Path path) {
  return hz_lhs_first_order(HomodyneSetup(rho_ab, lo_c, lo_d), type, path);
}

/// The four quadrature-product observables of the first-order test, in the
/// order XaXb, PaPb, XaPb, PaXb.
inline std::array<ProductOperator, 4> first_order_settings(const HomodyneSetup& s) {
  using A = HomodyneSetup;
  const auto xa = s.x(A::arm_a), pa = s.p(A::arm_a);
  const auto xb = s.x(A::arm_b), pb = s.p(A::arm_b);
  return {xa * xb, pa * pb, xa * pb, pa * xb};
}

inline constexpr std::array<const char*, 4> kFirstOrderSettingNames{"XaXb", "PaPb", "XaPb",
                                                                    "PaXb"};

/// Delta_m^2: sum of the variances of the four quadrature-product observables.
/// Both criterion types use the same four settings.
inline double fluctuation_delta_m(const HomodyneSetup& s, int type, Path path) {
  if (type != 1 && type != 2) throw DomainError("criterion type must be 1 or 2");
  double total = 0.0;
  for (const auto& op : first_order_settings(s)) total += s.variance(op, path);
  return total;
}

inline double fluctuation_delta_m(const QuantumState& rho_ab, const QuantumState& lo_c,
                                  const QuantumState& lo_d, int type, Path path) {
  return fluctuation_delta_m(HomodyneSetup(rho_ab, lo_c, lo_d), type, path);
}

// ---------------------------------------------------------------------------
// Second order: <(Xa + i Pa)^2 (Xb - i Pb)^2> from three LO phases per arm.

inline constexpr std::array<double, 3> kSecondOrderPhases{0.0, std::numbers::pi / 4,
                                                          std::numbers::pi / 2};

/// joint[i][j] = <(X_a^{m,phi_i})^2 (X_b^{m,phi_j})^2> with phi in
/// kSecondOrderPhases order (0, pi/4, pi/2).
struct SecondOrderSettings {
  std::array<std::array<std::optional<double>, 3>, 3> joint;
};

/// Uses (X + iP)^2 = X^2 - P^2 + i(2 X_{pi/4}^2 - X^2 - P^2)
///                 = (1 - i) X^2 + 2i X_{pi/4}^2 - (1 + i) P^2
/// on arm a and its conjugate on arm b.
inline cplx reconstruct_second_order(const SecondOrderSettings& s) {
  const cplx i(0.0, 1.0);
  const std::array<cplx, 3> w{1.0 - i, 2.0 * i, -(1.0 + i)};
  cplx total = 0.0;
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t q = 0; q < 3; ++q) {
      if (!s.joint[p][q])
        throw std::invalid_argument("second-order reconstruction: missing setting (" +
                                    std::to_string(p) + ", " + std::to_string(q) + ")");
      total += w[p] * std::conj(w[q]) * *s.joint[p][q];
    }
  return total;
}

inline ProductOperator second_order_setting(const HomodyneSetup& s, std::size_t i,
                                            std::size_t j) {
  using A = HomodyneSetup;
  const auto qa = s.quadrature(A::arm_a, kSecondOrderPhases[i]);
  const auto qb = s.quadrature(A::arm_b, kSecondOrderPhases[j]);
  return (qa * qa) * (qb * qb);
}

inline SecondOrderSettings second_order_settings(const HomodyneSetup& s, Path path) {
  SecondOrderSettings out;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      out.joint[i][j] = s.expectation(second_order_setting(s, i, j), path).real();
  return out;
}

/// Variances of the nine joint second-order observables. There is no
/// aggregate second-order fluctuation measure; callers get them individually.
inline std::array<std::array<double, 3>, 3> second_order_setting_variances(
    const HomodyneSetup& s, Path path) {
  std::array<std::array<double, 3>, 3> out{};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      out[i][j] = s.variance(second_order_setting(s, i, j), path);
  return out;
}

/// <(Xa + i Pa)^2 (Xb - i Pb)^2> = <a^2 (b^dag)^2> <(c^dag)^2> <d^2> / (n_c n_d).
inline cplx hz_lhs_second_order(const HomodyneSetup& s, Path path) {
  using A = HomodyneSetup;
  if (path == Path::full) {
    const cplx i(0.0, 1.0);
    const auto za = s.x(A::arm_a) + i * s.p(A::arm_a);
    const auto zb = s.x(A::arm_b) + (-i) * s.p(A::arm_b);
    return s.expectation((za * za) * (zb * zb), Path::full);
  }
  const auto& sp = s.signal().space();
  const auto a = annihilation(sp, s.signal_label(A::arm_a));
  const auto bd = creation(sp, s.signal_label(A::arm_b));
  const cplx sig = expectation(s.signal(), compose(power(a, 2), power(bd, 2)));
  const cplx c2 = moments(s.lo(A::arm_a), s.lo_label(A::arm_a), 2, 0);
  const cplx d2 = moments(s.lo(A::arm_b), s.lo_label(A::arm_b), 0, 2);
  return sig * c2 * d2 / (s.lo_mean_n(A::arm_a) * s.lo_mean_n(A::arm_b));
}

// ---------------------------------------------------------------------------
// Shot-level sampling.

/// Observable acting on a subset of the state's modes, with additive Gaussian
/// readout noise of the given standard deviation.
struct LocalObservable {
  LinearOperator op;
  double noise_std = 0.0;
};

struct SampleSummary {
  std::vector<double> samples;
  double mean = 0.0;
  double std_error = 0.0;
  double sample_variance = 0.0;
};

namespace detail {

inline SampleSummary summarize(std::vector<double> samples) {
  SampleSummary s;
  const auto m = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean = sum / m;
  double ss = 0.0;
  for (double v : samples) ss += (v - s.mean) * (v - s.mean);
  s.sample_variance = samples.size() > 1 ? ss / (m - 1.0) : 0.0;
  s.std_error = std::sqrt(s.sample_variance / m);
  s.samples = std::move(samples);
  return s;
}

}  // namespace detail

/// Draws joint outcomes of commuting local observables on disjoint mode sets
/// and records the product of the (noisy) local outcomes per shot. The joint
/// outcome distribution comes from the exact spectral decomposition of each
/// local observable.
inline SampleSummary sample_joint(const QuantumState& state,
                                  const std::vector<LocalObservable>& locals,
                                  std::uint64_t samples, std::uint64_t seed) {
  if (samples == 0) throw DomainError("sample count M must be >= 1");
  if (locals.empty()) throw std::invalid_argument("sample_joint: no observables");
  const HilbertSpace& sp = state.space();

  // Axis layout: one axis per local observable, then the untouched modes.
  const std::size_t K = locals.size();
  std::vector<std::vector<std::size_t>> where(K);
  std::vector<bool> used(sp.num_modes(), false);
  std::vector<Eigen::VectorXd> eigval(K);
  std::vector<DenseMatrix> eigvec(K);
  std::vector<std::size_t> dims(K + 1);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& op = locals[k].op;
    if (!op.is_hermitian()) throw DomainError("sampled observable must be Hermitian");
    for (const auto& m : op.space().modes()) {
      const std::size_t idx = sp.index_of(m.label);
      if (sp.mode(idx).cutoff != m.cutoff) throw SpaceError("observable cutoff mismatch");
      if (used[idx]) throw SpaceError("local observables overlap on mode " + m.label);
      used[idx] = true;
      where[k].push_back(idx);
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(op.dense());
    eigval[k] = es.eigenvalues();
    eigvec[k] = es.eigenvectors();
    dims[k] = op.dim();
  }
  std::vector<std::size_t> rest;
  std::size_t rest_dim = 1;
  for (std::size_t i = 0; i < sp.num_modes(); ++i)
    if (!used[i]) {
      rest.push_back(i);
      rest_dim *= sp.levels(i);
    }
  dims[K] = rest_dim;

  // Map each basis index of the state onto the axis layout.
  std::vector<std::size_t> permuted(sp.dim());
  for (std::size_t i = 0; i < sp.dim(); ++i) {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto& sub = locals[k].op.space();
      std::size_t s = 0;
      for (std::size_t m = 0; m < where[k].size(); ++m)
        s += static_cast<std::size_t>(sp.level(i, where[k][m])) * sub.stride(m);
      flat = flat * dims[k] + s;
    }
    std::size_t r = 0;
    for (std::size_t idx : rest) r = r * sp.levels(idx) + static_cast<std::size_t>(sp.level(i, idx));
    permuted[i] = flat * rest_dim + r;
  }

  std::size_t joint_dim = 1;
  for (std::size_t k = 0; k < K; ++k) joint_dim *= dims[k];
  std::vector<double> prob(joint_dim, 0.0);
  for (const auto& [w, member] : ensemble(state)) {
    Vector t(static_cast<Eigen::Index>(sp.dim()));
    const Vector& psi = member.amplitudes();
    for (std::size_t i = 0; i < sp.dim(); ++i)
      t(static_cast<Eigen::Index>(permuted[i])) = psi(static_cast<Eigen::Index>(i));
    // Rotate each local axis into the observable's eigenbasis.
    for (std::size_t k = 0; k < K; ++k) {
      std::size_t before = 1, after = 1;
      for (std::size_t j = 0; j < k; ++j) before *= dims[j];
      for (std::size_t j = k + 1; j <= K; ++j) after *= dims[j];
      const auto dk = static_cast<Eigen::Index>(dims[k]);
      const DenseMatrix uconj = eigvec[k].conjugate();
      for (std::size_t b = 0; b < before; ++b) {
        Eigen::Map<DenseMatrix> block(t.data() + b * dims[k] * after,
                                      static_cast<Eigen::Index>(after), dk);
        block = (block * uconj).eval();
      }
    }
    for (std::size_t j = 0; j < joint_dim; ++j)
      for (std::size_t r = 0; r < rest_dim; ++r)
        prob[j] += w * std::norm(t(static_cast<Eigen::Index>(j * rest_dim + r)));
  }
  for (auto& p : prob) p = std::max(p, 0.0);

  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(prob.begin(), prob.end());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> out;
  out.reserve(samples);
  for (std::uint64_t m = 0; m < samples; ++m) {
    std::size_t j = pick(rng);
    double product = 1.0;
    for (std::size_t k = K; k-- > 0;) {
      const std::size_t s = j % dims[k];
      j /= dims[k];
      double v = eigval[k](static_cast<Eigen::Index>(s));
      if (locals[k].noise_std > 0.0) v += locals[k].noise_std * gauss(rng);
      product *= v;
    }
    out.push_back(product);
  }
  return detail::summarize(std::move(out));
}

/// Samples one Hermitian observable on `state`. With excess noise, the
/// readout noise std is excess_noise / (2 lo_mean_n).
inline SampleSummary sample_measurement(const QuantumState& state,
                                        const LinearOperator& observable,
                                        const MeasurementBudget& budget, std::uint64_t seed,
                                        std::optional<double> lo_mean_n = {}) {
  require_same_space(state.space(), observable.space(), "sample_measurement");
  double noise = 0.0;
  if (budget.excess_noise > 0.0) {
    if (!lo_mean_n) throw DomainError("excess noise needs the LO intensity");
    noise = excess_noise_std(budget.excess_noise, *lo_mean_n);
  }
  return sample_joint(state, {{observable, noise}}, budget.samples, seed);
}

/// Local observable X^{m,phi} for one arm, on the (signal, LO) mode pair.
inline LocalObservable arm_observable(const HomodyneSetup& s, HomodyneSetup::Arm arm,
                                      double phi, double excess_noise) {
  const auto& sig = s.signal().space().mode(arm);
  const auto& lo = s.lo(arm).space().mode(0);
  HilbertSpace pair({sig, lo});
  return {measured_quadrature(pair, {sig.label, lo.label, phi, s.lo_mean_n(arm)}),
          excess_noise > 0.0 ? excess_noise_std(excess_noise, s.lo_mean_n(arm)) : 0.0};
}

/// Samples the four first-order settings (XaXb, PaPb, XaPb, PaXb). Setting k
/// uses seed + k.
inline std::array<SampleSummary, 4> sample_first_order(const HomodyneSetup& s,
                                                       const MeasurementBudget& budget,
                                                       std::uint64_t seed) {
  using A = HomodyneSetup;
  const QuantumState joint = tensor_product(s.factor_states());
  constexpr double half_pi = std::numbers::pi / 2;
  const std::array<std::pair<double, double>, 4> phases{
      {{0.0, 0.0}, {half_pi, half_pi}, {0.0, half_pi}, {half_pi, 0.0}}};
  std::array<SampleSummary, 4> out;
  for (std::size_t k = 0; k < 4; ++k)
    out[k] = sample_joint(joint,
                          {arm_observable(s, A::arm_a, phases[k].first, budget.excess_noise),
                           arm_observable(s, A::arm_b, phases[k].second, budget.excess_noise)},
                          budget.samples, seed + k);
  return out;
}

}  // namespace hsim

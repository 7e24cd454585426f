#pragma once

// Constructors for the signal and local-oscillator states, with automatic
// cutoff selection. Every truncated state is renormalized; an explicit cutoff
// that would drop more than kTruncationDefect of the population is rejected.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "hsim/fock_core.hpp"

namespace hsim {

inline constexpr double kTruncationDefect = 1e-10;

enum class StateKind {
  fock,
  coherent,
  squeezed_vacuum,
  displaced_squeezed,
  thermal,
  displaced_thermal,
  displaced_fock,
  tmsv,
  binomial,
  single_excitation,
  custom,
};

struct StateSpec {
  StateKind kind = StateKind::fock;
  int n = 0;
  cplx alpha = 0.0;
  double r = 0.0;
  double theta = 0.0;
  double n_th = 0.0;
  double x = 0.0;
  std::vector<cplx> amplitudes;    // custom only
  std::vector<int> custom_cutoffs; // custom only; default: one mode
  std::optional<int> cutoff;

  static StateSpec fock_state(int n) { return {.kind = StateKind::fock, .n = n}; }
  static StateSpec coherent_state(cplx a) {
    return {.kind = StateKind::coherent, .alpha = a};
  }
  static StateSpec squeezed(double r, double theta = 0.0) {
    return {.kind = StateKind::squeezed_vacuum, .r = r, .theta = theta};
  }
  static StateSpec displaced_squeezed_state(cplx a, double r, double theta = 0.0) {
    return {.kind = StateKind::displaced_squeezed, .alpha = a, .r = r, .theta = theta};
  }
  static StateSpec thermal_state(double n_th) {
    return {.kind = StateKind::thermal, .n_th = n_th};
  }
  static StateSpec displaced_thermal_state(cplx a, double n_th) {
    return {.kind = StateKind::displaced_thermal, .alpha = a, .n_th = n_th};
  }
  static StateSpec displaced_fock_state(cplx a, int n) {
    return {.kind = StateKind::displaced_fock, .n = n, .alpha = a};
  }
  static StateSpec two_mode_squeezed(double x) {
    return {.kind = StateKind::tmsv, .x = x};
  }
  static StateSpec binomial_state(int n) {
    return {.kind = StateKind::binomial, .n = n};
  }
  static StateSpec single_excitation_state() {
    return {.kind = StateKind::single_excitation};
  }
};

inline const char* to_string(StateKind k) {
  switch (k) {
    case StateKind::fock: return "fock";
    case StateKind::coherent: return "coherent";
    case StateKind::squeezed_vacuum: return "squeezed_vacuum";
    case StateKind::displaced_squeezed: return "displaced_squeezed";
    case StateKind::thermal: return "thermal";
    case StateKind::displaced_thermal: return "displaced_thermal";
    case StateKind::displaced_fock: return "displaced_fock";
    case StateKind::tmsv: return "tmsv";
    case StateKind::binomial: return "binomial";
    case StateKind::single_excitation: return "single_excitation";
    case StateKind::custom: return "custom";
  }
  return "?";
}

inline StateKind state_kind_from_string(const std::string& s) {
  for (auto k : {StateKind::fock, StateKind::coherent, StateKind::squeezed_vacuum,
                 StateKind::displaced_squeezed, StateKind::thermal,
                 StateKind::displaced_thermal, StateKind::displaced_fock,
                 StateKind::tmsv, StateKind::binomial,
                 StateKind::single_excitation, StateKind::custom})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown state kind '" + s + "'");
}

inline int num_modes(const StateSpec& spec) {
  switch (spec.kind) {
    case StateKind::tmsv:
    case StateKind::binomial:
    case StateKind::single_excitation:
      return 2;
    case StateKind::custom:
      return spec.custom_cutoffs.empty() ? 1 : static_cast<int>(spec.custom_cutoffs.size());
    default:
      return 1;
  }
}

/// Throws DomainError when a parameter is out of range.
inline void validate(const StateSpec& s) {
  auto fail = [&](const std::string& what) {
    throw DomainError(std::string(to_string(s.kind)) + ": " + what);
  };
  if (s.cutoff && *s.cutoff < 1) fail("cutoff must be >= 1");
  switch (s.kind) {
    case StateKind::fock:
    case StateKind::displaced_fock:
      if (s.n < 0) fail("n must be >= 0");
      break;
    case StateKind::binomial:
      if (s.n < 1) fail("n must be >= 1");
      break;
    case StateKind::squeezed_vacuum:
    case StateKind::displaced_squeezed:
      if (!(s.r >= 0.0) || !std::isfinite(s.r)) fail("r must be >= 0");
      break;
    case StateKind::thermal:
    case StateKind::displaced_thermal:
      if (!(s.n_th >= 0.0) || !std::isfinite(s.n_th)) fail("n_th must be >= 0");
      break;
    case StateKind::tmsv:
      if (!(s.x >= 0.0 && s.x < 1.0)) fail("x must satisfy 0 <= x < 1");
      break;
    case StateKind::custom: {
      if (s.amplitudes.empty()) fail("amplitudes must be non-empty");
      std::size_t d = 1;
      for (int c : s.custom_cutoffs) {
        if (c < 1) fail("custom cutoffs must be >= 1");
        d *= static_cast<std::size_t>(c) + 1;
      }
      if (!s.custom_cutoffs.empty() && d != s.amplitudes.size())
        fail("amplitude count does not match custom cutoffs");
      if (s.custom_cutoffs.empty() && s.amplitudes.size() < 2)
        fail("single-mode custom state needs at least 2 amplitudes");
      break;
    }
    default:
      break;
  }
  if (!std::isfinite(s.alpha.real()) || !std::isfinite(s.alpha.imag()))
    fail("alpha must be finite");
}

namespace detail {

inline int coherent_rule(cplx alpha) {
  const double a = std::abs(alpha);
  return static_cast<int>(std::ceil(a * a + 8.0 * a + 10.0));
}

inline std::vector<double> thermal_probs(double n_th, int cutoff) {
  std::vector<double> p(static_cast<std::size_t>(cutoff) + 1, 0.0);
  const double q = n_th / (n_th + 1.0);
  double v = 1.0 / (n_th + 1.0);
  for (auto& x : p) {
    x = v;
    v *= q;
  }
  return p;
}

inline int thermal_rule(double n_th) {
  if (n_th <= 0.0) return 1;
  const double q = n_th / (n_th + 1.0);
  // tail mass beyond m is q^{m+1}
  int m = static_cast<int>(std::ceil(std::log(kTruncationDefect) / std::log(q))) - 1;
  while (std::pow(q, m + 1) >= kTruncationDefect) ++m;
  while (m > 1 && std::pow(q, m) < kTruncationDefect) --m;
  return std::max(m, 1);
}

inline Vector squeezed_amplitudes(double r, double theta, int cutoff) {
  Vector v = Vector::Zero(cutoff + 1);
  const cplx ratio = -std::polar(std::tanh(r), theta);
  cplx c = 1.0 / std::sqrt(std::cosh(r));
  for (int n = 0; 2 * n <= cutoff; ++n) {
    v(2 * n) = c;
    c *= ratio * std::sqrt((2.0 * n + 1.0) * (2.0 * n + 2.0)) / (2.0 * (n + 1.0));
  }
  return v;
}

inline int squeezed_rule(double r) {
  if (r == 0.0) return 2;
  for (int m = 2;; m += 2) {
    const double kept = squeezed_amplitudes(r, 0.0, m).squaredNorm();
    if (1.0 - kept < kTruncationDefect) return m;
  }
}

inline Vector coherent_amplitudes(cplx alpha, int cutoff) {
  Vector v(cutoff + 1);
  cplx c = std::exp(-0.5 * std::norm(alpha));
  for (int n = 0; n <= cutoff; ++n) {
    v(n) = c;
    c *= alpha / std::sqrt(n + 1.0);
  }
  return v;
}

inline int tmsv_rule(double x) {
  if (x == 0.0) return 1;
  int m = 1;
  while (std::pow(x, 2 * m) >= 1e-12) ++m;
  return m;
}

/// exp(alpha a^dag - conj(alpha) a) on levels 0..cutoff. The last result is
/// memoized per thread: auto_cutoff and build ask for the same matrix.
inline DenseMatrix displacement(cplx alpha, int cutoff) {
  thread_local cplx last_alpha;
  thread_local int last_cutoff = -1;
  thread_local DenseMatrix last;
  if (cutoff == last_cutoff && alpha == last_alpha) return last;
  const SparseMatrix a = lowering_matrix(cutoff);
  const DenseMatrix gen =
      DenseMatrix(SparseMatrix(a.adjoint())) * alpha - DenseMatrix(a) * std::conj(alpha);
  last = gen.exp();
  last_alpha = alpha;
  last_cutoff = cutoff;
  return last;
}

inline int displaced_base_rule(const StateSpec& s) {
  switch (s.kind) {
    case StateKind::displaced_thermal: return thermal_rule(s.n_th);
    case StateKind::displaced_squeezed: return squeezed_rule(s.r);
    case StateKind::displaced_fock: return s.n + 3;
    default: throw std::logic_error("not a displaced family");
  }
}

/// D(alpha) |base> for the pure displaced families, on levels 0..working.
inline Vector displaced_pure_working(const StateSpec& s, int working) {
  Vector base = Vector::Zero(working + 1);
  if (s.kind == StateKind::displaced_squeezed)
    base = squeezed_amplitudes(s.r, s.theta, working);
  else
    base(s.n) = 1.0;
  return displacement(s.alpha, working) * base;
}

/// D(alpha) rho_th D(alpha)^dag on levels 0..working.
inline DenseMatrix displaced_thermal_working(const StateSpec& s, int working) {
  const auto p = thermal_probs(s.n_th, working);
  const DenseMatrix dm = displacement(s.alpha, working);
  DenseMatrix scaled = dm;
  for (Eigen::Index i = 0; i <= working; ++i) scaled.col(i) *= p[static_cast<std::size_t>(i)];
  return scaled * dm.adjoint();
}

inline std::vector<double> displaced_populations(const StateSpec& s, int working) {
  std::vector<double> pop(static_cast<std::size_t>(working) + 1);
  if (s.kind == StateKind::displaced_thermal) {
    const DenseMatrix rho = displaced_thermal_working(s, working);
    for (int i = 0; i <= working; ++i) pop[static_cast<std::size_t>(i)] = rho(i, i).real();
  } else {
    const Vector v = displaced_pure_working(s, working);
    for (int i = 0; i <= working; ++i) pop[static_cast<std::size_t>(i)] = std::norm(v(i));
  }
  return pop;
}

inline int working_margin(const StateSpec& s) {
  return 20 + static_cast<int>(std::ceil(4.0 * std::abs(s.alpha))) +
         displaced_base_rule(s) / 2;
}

/// Smallest m whose population beyond m is below the truncation defect.
inline int tail_cutoff(const std::vector<double>& pop) {
  double tail = 0.0;
  for (std::size_t m = pop.size() - 1; m >= 1; --m) {
    tail += pop[m];
    if (tail >= kTruncationDefect) return static_cast<int>(m);
  }
  return 1;
}

}  // namespace detail

/// Cutoff chosen when the spec carries no explicit override.
inline int auto_cutoff(const StateSpec& s) {
  validate(s);
  switch (s.kind) {
    case StateKind::fock: return s.n + 3;
    case StateKind::coherent: return detail::coherent_rule(s.alpha);
    case StateKind::squeezed_vacuum: return detail::squeezed_rule(s.r);
    case StateKind::thermal: return detail::thermal_rule(s.n_th);
    case StateKind::tmsv: return detail::tmsv_rule(s.x);
    case StateKind::binomial: return s.n;
    case StateKind::single_excitation: return 1;
    case StateKind::custom:
      return s.custom_cutoffs.empty() ? static_cast<int>(s.amplitudes.size()) - 1
                                      : s.custom_cutoffs.front();
    case StateKind::displaced_thermal:
    case StateKind::displaced_squeezed:
    case StateKind::displaced_fock: {
      int estimate = detail::coherent_rule(s.alpha) + detail::displaced_base_rule(s);
      for (;;) {
        const int working = estimate + detail::working_margin(s);
        const int m = detail::tail_cutoff(detail::displaced_populations(s, working));
        if (m + 10 < working) return std::max(m, detail::coherent_rule(s.alpha));
        estimate *= 2;
      }
    }
  }
  return 1;
}

namespace detail {

inline void check_defect(const StateSpec& s, double kept) {
  if (1.0 - kept >= kTruncationDefect) {
    std::ostringstream os;
    os << to_string(s.kind) << ": cutoff " << *s.cutoff
       << " truncates population " << (1.0 - kept) << " (limit "
       << kTruncationDefect << ")";
    throw CutoffError(os.str());
  }
}

inline std::vector<Mode> labelled(const std::vector<std::string>& labels,
                                  const std::vector<int>& cutoffs) {
  std::vector<Mode> modes;
  for (std::size_t i = 0; i < labels.size(); ++i) modes.push_back({labels[i], cutoffs[i]});
  return modes;
}

}  // namespace detail

/// Builds the state described by `spec` on modes named by `labels` (one label
/// per mode of the spec, in order).
inline QuantumState build(const StateSpec& spec, const std::vector<std::string>& labels) {
  validate(spec);
  if (static_cast<int>(labels.size()) != num_modes(spec))
    throw SpaceError(std::string(to_string(spec.kind)) + " needs " +
                     std::to_string(num_modes(spec)) + " mode label(s)");
  const bool explicit_cutoff = spec.cutoff.has_value();
  const int cutoff = explicit_cutoff ? *spec.cutoff : auto_cutoff(spec);

  auto single = [&](Vector v) {
    if (explicit_cutoff) detail::check_defect(spec, v.squaredNorm());
    v.normalize();
    return QuantumState::pure(HilbertSpace({{labels[0], cutoff}}), std::move(v));
  };

  switch (spec.kind) {
    case StateKind::fock: {
      if (spec.n > cutoff)
        throw CutoffError("fock: cutoff below the excitation number");
      Vector v = Vector::Zero(cutoff + 1);
      v(spec.n) = 1.0;
      return QuantumState::pure(HilbertSpace({{labels[0], cutoff}}), std::move(v));
    }
    case StateKind::coherent:
      return single(detail::coherent_amplitudes(spec.alpha, cutoff));
    case StateKind::squeezed_vacuum:
      return single(detail::squeezed_amplitudes(spec.r, spec.theta, cutoff));
    case StateKind::thermal: {
      const auto p = detail::thermal_probs(spec.n_th, cutoff);
      double kept = 0.0;
      for (double x : p) kept += x;
      if (explicit_cutoff) detail::check_defect(spec, kept);
      DenseMatrix rho = DenseMatrix::Zero(cutoff + 1, cutoff + 1);
      for (int i = 0; i <= cutoff; ++i) rho(i, i) = p[static_cast<std::size_t>(i)] / kept;
      return QuantumState::trusted(HilbertSpace({{labels[0], cutoff}}), std::move(rho));
    }
    case StateKind::displaced_thermal:
    case StateKind::displaced_squeezed:
    case StateKind::displaced_fock: {
      if (spec.kind == StateKind::displaced_fock && spec.n > cutoff)
        throw CutoffError("displaced_fock: cutoff below the excitation number");
      const int working = std::max(cutoff, detail::coherent_rule(spec.alpha) +
                                               detail::displaced_base_rule(spec)) +
                          detail::working_margin(spec);
      if (spec.kind != StateKind::displaced_thermal)
        return single(detail::displaced_pure_working(spec, working).head(cutoff + 1));
      DenseMatrix rho =
          detail::displaced_thermal_working(spec, working).topLeftCorner(cutoff + 1, cutoff + 1);
      const double kept = rho.trace().real();
      if (explicit_cutoff) detail::check_defect(spec, kept);
      rho /= kept;
      rho = 0.5 * (rho + rho.adjoint()).eval();
      return QuantumState::trusted(HilbertSpace({{labels[0], cutoff}}), std::move(rho));
    }
    case StateKind::tmsv: {
      const int d = cutoff + 1;
      Vector v = Vector::Zero(d * d);
      double c = std::sqrt(1.0 - spec.x * spec.x);
      for (int n = 0; n <= cutoff; ++n) {
        v(n * d + n) = c;
        c *= spec.x;
      }
      if (explicit_cutoff) detail::check_defect(spec, v.squaredNorm());
      v.normalize();
      return QuantumState::pure(
          HilbertSpace(detail::labelled(labels, {cutoff, cutoff})), std::move(v));
    }
    case StateKind::binomial: {
      if (cutoff < spec.n) throw CutoffError("binomial: cutoff below n");
      const int d = cutoff + 1;
      Vector v = Vector::Zero(d * d);
      // sqrt(C(n, j) / 2^n) on |j>|n-j>
      double logc = 0.0;  // log C(n, j)
      for (int j = 0; j <= spec.n; ++j) {
        if (j > 0) logc += std::log(double(spec.n - j + 1)) - std::log(double(j));
        v(j * d + (spec.n - j)) = std::exp(0.5 * (logc - spec.n * std::log(2.0)));
      }
      v.normalize();
      return QuantumState::pure(
          HilbertSpace(detail::labelled(labels, {cutoff, cutoff})), std::move(v));
    }
    case StateKind::single_excitation: {
      const int d = cutoff + 1;
      Vector v = Vector::Zero(d * d);
      v(0 * d + 1) = 1.0 / std::sqrt(2.0);
      v(1 * d + 0) = 1.0 / std::sqrt(2.0);
      return QuantumState::pure(
          HilbertSpace(detail::labelled(labels, {cutoff, cutoff})), std::move(v));
    }
    case StateKind::custom: {
      std::vector<int> cutoffs = spec.custom_cutoffs;
      if (cutoffs.empty()) cutoffs.push_back(static_cast<int>(spec.amplitudes.size()) - 1);
      Vector v(static_cast<Eigen::Index>(spec.amplitudes.size()));
      for (std::size_t i = 0; i < spec.amplitudes.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = spec.amplitudes[i];
      if (v.norm() == 0.0) throw DomainError("custom: zero amplitude vector");
      v.normalize();
      return QuantumState::pure(HilbertSpace(detail::labelled(labels, cutoffs)),
                                std::move(v));
    }
  }
  throw std::logic_error("unhandled state kind");
}

inline QuantumState build(const StateSpec& spec, const std::string& label) {
  return build(spec, std::vector<std::string>{label});
}

/// <(a^dag)^j a^k> of one mode.
inline cplx moments(const QuantumState& state, const std::string& mode, int j, int k) {
  const std::size_t idx = state.space().index_of(mode);
  const int cutoff = state.space().mode(idx).cutoff;
  if (j < 0 || k < 0) throw DomainError("moments: powers must be >= 0");
  if (j > cutoff || k > cutoff)
    throw CutoffError("moments: power exceeds the mode cutoff");
  const SparseMatrix a = detail::lowering_matrix(cutoff);
  SparseMatrix m(cutoff + 1, cutoff + 1);
  m.setIdentity();
  const SparseMatrix ad = a.adjoint();
  for (int i = 0; i < j; ++i) m = (m * ad).eval();
  for (int i = 0; i < k; ++i) m = (m * a).eval();
  const LinearOperator local(HilbertSpace({state.space().mode(idx)}), m);
  return expectation(state, embed(local, state.space()));
}

/// Q = Var(n)/<n> - 1. NaN for zero intensity.
/// Cutoff at which the low moments <n>, <n^2>, <c>, <c^2> of the first mode
/// have settled: starting from auto_cutoff, raise by `step` until one more
/// step moves each by less than `tol` relative. The population rule alone
/// leaves moment errors of order 1e-9.
inline int moment_converged_cutoff(const StateSpec& spec, double tol = 1e-13, int step = 5) {
  if (spec.kind == StateKind::custom) return auto_cutoff(spec);
  const std::vector<std::string> labels =
      num_modes(spec) == 2 ? std::vector<std::string>{"m0", "m1"}
                           : std::vector<std::string>{"m0"};
  auto probe = [&](int cutoff) {
    StateSpec s = spec;
    s.cutoff = cutoff;
    const QuantumState st = build(s, labels);
    return std::array<cplx, 4>{moments(st, "m0", 1, 1), moments(st, "m0", 2, 2),
                               moments(st, "m0", 0, 1), moments(st, "m0", 0, 2)};
  };
  int cutoff = std::max(auto_cutoff(spec), 2);
  auto prev = probe(cutoff);
  for (int k = 0; k < 400; ++k) {
    const auto next = probe(cutoff + step);
    bool settled = true;
    for (std::size_t i = 0; i < 4; ++i)
      settled = settled && std::abs(next[i] - prev[i]) <= tol * std::max(1.0, std::abs(next[i]));
    if (settled) return cutoff;
    cutoff += step;
    prev = next;
  }
  throw CutoffError("moment_converged_cutoff: moments did not settle");
}

inline double mandel_q(const QuantumState& state, const std::string& mode) {
  const double n1 = moments(state, mode, 1, 1).real();
  const double n2 = moments(state, mode, 2, 2).real() + n1;  // <n^2> = <a^dag2 a^2> + <n>
  if (n1 <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (n2 - n1 * n1) / n1 - 1.0;
}

// ---------------------------------------------------------------------------
// JSON form used by experiment configs.

inline nlohmann::json to_json(const StateSpec& s) {
  nlohmann::json j{{"kind", to_string(s.kind)}};
  switch (s.kind) {
    case StateKind::fock:
    case StateKind::binomial:
      j["n"] = s.n;
      break;
    case StateKind::coherent:
      j["alpha"] = {s.alpha.real(), s.alpha.imag()};
      break;
    case StateKind::squeezed_vacuum:
      j["r"] = s.r;
      j["theta"] = s.theta;
      break;
    case StateKind::displaced_squeezed:
      j["alpha"] = {s.alpha.real(), s.alpha.imag()};
      j["r"] = s.r;
      j["theta"] = s.theta;
      break;
    case StateKind::thermal:
      j["n_th"] = s.n_th;
      break;
    case StateKind::displaced_thermal:
      j["alpha"] = {s.alpha.real(), s.alpha.imag()};
      j["n_th"] = s.n_th;
      break;
    case StateKind::displaced_fock:
      j["alpha"] = {s.alpha.real(), s.alpha.imag()};
      j["n"] = s.n;
      break;
    case StateKind::tmsv:
      j["x"] = s.x;
      break;
    case StateKind::single_excitation:
      break;
    case StateKind::custom: {
      nlohmann::json amps = nlohmann::json::array();
      for (const auto& a : s.amplitudes) amps.push_back({a.real(), a.imag()});
      j["amplitudes"] = amps;
      if (!s.custom_cutoffs.empty()) j["cutoffs"] = s.custom_cutoffs;
      break;
    }
  }
  if (s.cutoff) j["cutoff"] = *s.cutoff;
  return j;
}

namespace detail {
inline cplx complex_from_json(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  if (j.is_object()) return {j.value("re", 0.0), j.value("im", 0.0)};
  throw std::invalid_argument("expected a number, [re, im] or {re, im}");
}
}  // namespace detail

inline StateSpec state_spec_from_json(const nlohmann::json& j) {
  StateSpec s;
  s.kind = state_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("n")) s.n = j["n"].get<int>();
  if (j.contains("alpha")) s.alpha = detail::complex_from_json(j["alpha"]);
  if (j.contains("r")) s.r = j["r"].get<double>();
  if (j.contains("theta")) s.theta = j["theta"].get<double>();
  if (j.contains("n_th")) s.n_th = j["n_th"].get<double>();
  if (j.contains("x")) s.x = j["x"].get<double>();
  if (j.contains("amplitudes"))
    for (const auto& a : j["amplitudes"]) s.amplitudes.push_back(detail::complex_from_json(a));
  if (j.contains("cutoffs")) s.custom_cutoffs = j["cutoffs"].get<std::vector<int>>();
  if (j.contains("cutoff")) s.cutoff = j["cutoff"].get<int>();
  return s;
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline std::string digest(const StateSpec& s) { return fnv1a_hex(to_json(s).dump()); }

}  // namespace hsim

#pragma once

// Hillery-Zubairy entanglement criteria, ideal and with measured quadratures.
//
//   HZ1(s,t): |<a^s (b^dag)^t>|^2          <= <(a^dag)^s a^s (b^dag)^t b^t>
//   HZ2(s,t): |<a^s b^t>|^2                <= <(a^dag)^s a^s> <(b^dag)^t b^t>
//   M1:       |<XaXb + PaPb - iXaPb + iPaXb>_m|^2 <= <n_a n_b>
//   M2:       |<XaXb - PaPb + iXaPb + iPaXb>_m|^2 <= <n_a> <n_b>
//   S1, S2:   |<(Xa + iPa)^2 (Xb - iPb)^2>_m|^2
//               <= <(a^dag)^2 a^2 (b^dag)^2 b^2> * F_c * F_d
//             with F = (<n^2> - <n>)/<n>^2 (S1) or (<n> + 1)/<n> (S2).
//
// The right-hand sides of M1/M2 use signal moments only; no LO statistics
// enter them.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsim/fock_core.hpp"
#include "hsim/homodyne.hpp"
#include "hsim/state_factory.hpp"

namespace hsim {

inline constexpr double kViolationTolerance = 1e-10;

enum class CriterionId { HZ1, HZ2, M1, M2, S1, S2 };
enum class SecondOrderBound { eq16, eq18 };

inline const char* to_string(CriterionId id) {
  switch (id) {
    case CriterionId::HZ1: return "HZ1";
    case CriterionId::HZ2: return "HZ2";
    case CriterionId::M1: return "M1";
    case CriterionId::M2: return "M2";
    case CriterionId::S1: return "S1";
    case CriterionId::S2: return "S2";
  }
  return "?";
}

inline CriterionId criterion_from_string(const std::string& s) {
  for (auto id : {CriterionId::HZ1, CriterionId::HZ2, CriterionId::M1, CriterionId::M2,
                  CriterionId::S1, CriterionId::S2})
    if (s == to_string(id)) return id;
  throw std::invalid_argument("unknown criterion '" + s + "'");
}

inline const char* to_string(SecondOrderBound b) {
  return b == SecondOrderBound::eq16 ? "eq16" : "eq18";
}

inline SecondOrderBound bound_from_string(const std::string& s) {
  if (s == "eq16") return SecondOrderBound::eq16;
  if (s == "eq18") return SecondOrderBound::eq18;
  throw std::invalid_argument("unknown bound '" + s + "' (expected eq16 or eq18)");
}

struct CriterionResult {
  CriterionId id = CriterionId::HZ1;
  int s = 1;
  int t = 1;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool violated = false;
  std::vector<std::string> inputs;  // digests of the states involved
};

inline std::string state_digest(const QuantumState& state) {
  std::string bytes;
  for (const auto& m : state.space().modes()) bytes += m.label + ":" + std::to_string(m.cutoff) + ";";
  bytes += state.is_pure() ? "pure" : "mixed";
  auto append = [&](const cplx* p, std::size_t n) {
    bytes.append(reinterpret_cast<const char*>(p), n * sizeof(cplx));
  };
  if (state.is_pure())
    append(state.amplitudes().data(), static_cast<std::size_t>(state.amplitudes().size()));
  else
    append(state.stored_density().data(), static_cast<std::size_t>(state.stored_density().size()));
  return fnv1a_hex(bytes);
}

inline CriterionResult make_result(CriterionId id, int s, int t, double lhs, double rhs,
                                   std::vector<std::string> inputs,
                                   double tolerance = kViolationTolerance) {
  if (!std::isfinite(lhs) || !std::isfinite(rhs))
    throw DomainError(std::string(to_string(id)) + ": non-finite criterion value");
  CriterionResult r{id, s, t, lhs, rhs, lhs - rhs, false, std::move(inputs)};
  r.violated = r.margin > tolerance;
  return r;
}

inline nlohmann::json to_json(const CriterionResult& r) {
  return {{"criterion_id", to_string(r.id)}, {"s", r.s},           {"t", r.t},
          {"lhs", r.lhs},                    {"rhs", r.rhs},       {"margin", r.margin},
          {"violated", r.violated},          {"inputs", r.inputs}};
}

namespace detail {

/// (a^dag)^s a^s on one mode of `space`.
inline LinearOperator normal_power(const HilbertSpace& space, const std::string& label, int s) {
  return compose(power(creation(space, label), s), power(annihilation(space, label), s));
}

inline void require_two_mode(const QuantumState& s) {
  if (s.space().num_modes() != 2) throw SpaceError("signal state must be two-mode");
}

}  // namespace detail

/// Original HZ criterion of the given type and order on an ideal two-mode
/// state. Moments are exact for the truncated state: anything (b^dag)^t pushes
/// past the cutoff has no overlap with it.
inline CriterionResult hz_original(const QuantumState& rho_ab, int type, int s, int t) {
  detail::require_two_mode(rho_ab);
  if (s < 1 || t < 1) throw DomainError("hz_original: s and t must be >= 1");
  const auto& sp = rho_ab.space();
  const std::string& a = sp.mode(0).label;
  const std::string& b = sp.mode(1).label;
  if (s > sp.mode(0).cutoff || t > sp.mode(1).cutoff)
    throw CutoffError("hz_original: order exceeds the mode cutoff");
  const LinearOperator as = power(annihilation(sp, a), s);
  double lhs, rhs;
  if (type == 1) {
    lhs = std::norm(expectation(rho_ab, compose(as, power(creation(sp, b), t))));
    rhs = expectation(rho_ab, compose(detail::normal_power(sp, a, s),
                                      detail::normal_power(sp, b, t)))
              .real();
  } else if (type == 2) {
    lhs = std::norm(expectation(rho_ab, compose(as, power(annihilation(sp, b), t))));
    rhs = expectation(rho_ab, detail::normal_power(sp, a, s)).real() *
          expectation(rho_ab, detail::normal_power(sp, b, t)).real();
  } else {
    throw DomainError("criterion type must be 1 or 2");
  }
  return make_result(type == 1 ? CriterionId::HZ1 : CriterionId::HZ2, s, t, lhs, rhs,
                     {state_digest(rho_ab)});
}

/// First-order criterion with measured quadratures (M1 for type 1, M2 for
/// type 2).
inline CriterionResult measured_first_order(const HomodyneSetup& setup, int type,
                                            Path path = Path::factored) {
  const double lhs = std::norm(hz_lhs_first_order(setup, type, path));
  const auto& sp = setup.signal().space();
  const auto na = number(sp, sp.mode(0).label);
  const auto nb = number(sp, sp.mode(1).label);
  const double rhs = type == 1 ? expectation(setup.signal(), compose(na, nb)).real()
                               : expectation(setup.signal(), na).real() *
                                     expectation(setup.signal(), nb).real();
  return make_result(type == 1 ? CriterionId::M1 : CriterionId::M2, 1, 1, lhs, rhs,
                     {state_digest(setup.signal()), state_digest(setup.lo(HomodyneSetup::arm_a)),
                      state_digest(setup.lo(HomodyneSetup::arm_b))});
}

inline CriterionResult measured_first_order(const QuantumState& rho_ab, const QuantumState& lo_c,
                                            const QuantumState& lo_d, int type,
                                            Path path = Path::factored) {
  return measured_first_order(HomodyneSetup(rho_ab, lo_c, lo_d), type, path);
}

/// LO factor replacing |<(c^dag)^2>|^2 / <n_c>^2 in the second-order test.
inline double second_order_lo_factor(const QuantumState& lo, SecondOrderBound bound) {
  const std::string& c = lo.space().mode(0).label;
  const double n1 = moments(lo, c, 1, 1).real();
  require_positive_intensity(n1, "second-order LO factor");
  if (bound == SecondOrderBound::eq16) {
    if (lo.space().mode(0).cutoff < 2)
      throw CutoffError("eq16 bound needs <n^2>: LO cutoff must be >= 2");
    return moments(lo, c, 2, 2).real() / (n1 * n1);  // (<n^2> - <n>)/<n>^2
  }
  return (n1 + 1.0) / n1;
}

/// Second-order criterion with measured quadratures (S1 with the eq16 bound,
/// S2 with the eq18 bound).
inline CriterionResult measured_second_order(const HomodyneSetup& setup, SecondOrderBound bound,
                                             Path path = Path::factored) {
  using A = HomodyneSetup;
  const double lhs = std::norm(hz_lhs_second_order(setup, path));
  const auto& sp = setup.signal().space();
  const double sig = expectation(setup.signal(),
                                 compose(detail::normal_power(sp, sp.mode(0).label, 2),
                                         detail::normal_power(sp, sp.mode(1).label, 2)))
                         .real();
  const double rhs = sig * second_order_lo_factor(setup.lo(A::arm_a), bound) *
                     second_order_lo_factor(setup.lo(A::arm_b), bound);
  return make_result(bound == SecondOrderBound::eq16 ? CriterionId::S1 : CriterionId::S2, 2, 2,
                     lhs, rhs,
                     {state_digest(setup.signal()), state_digest(setup.lo(A::arm_a)),
                      state_digest(setup.lo(A::arm_b))});
}

inline CriterionResult measured_second_order(const QuantumState& rho_ab, const QuantumState& lo_c,
                                             const QuantumState& lo_d, SecondOrderBound bound,
                                             Path path = Path::factored) {
  return measured_second_order(HomodyneSetup(rho_ab, lo_c, lo_d), bound, path);
}

// ---------------------------------------------------------------------------

struct LOBoundReport {
  double mean_n = 0.0;
  double mean_n_sq = 0.0;
  double first_moment_sq = 0.0;   // |<c^dag>|^2
  double second_moment_sq = 0.0;  // |<c^2>|^2
  double bound_A = 0.0;           // <n>
  double bound_16 = 0.0;          // <n^2> - <n>
  double bound_18 = 0.0;          // <n>^2 + <n>
  double mandel_q = 0.0;          // NaN for zero intensity
};

inline LOBoundReport lo_bounds(const QuantumState& lo) {
  if (lo.space().num_modes() != 1) throw SpaceError("lo_bounds: LO state must be single-mode");
  const std::string& c = lo.space().mode(0).label;
  LOBoundReport r;
  r.mean_n = moments(lo, c, 1, 1).real();
  const double ad2a2 = lo.space().mode(0).cutoff >= 2 ? moments(lo, c, 2, 2).real() : 0.0;
  r.mean_n_sq = ad2a2 + r.mean_n;
  r.first_moment_sq = std::norm(moments(lo, c, 1, 0));
  r.second_moment_sq = lo.space().mode(0).cutoff >= 2 ? std::norm(moments(lo, c, 0, 2)) : 0.0;
  r.bound_A = r.mean_n;
  r.bound_16 = ad2a2;
  r.bound_18 = r.mean_n * r.mean_n + r.mean_n;
  r.mandel_q = r.mean_n > 0.0 ? (r.mean_n_sq - r.mean_n * r.mean_n) / r.mean_n - 1.0
                              : std::numeric_limits<double>::quiet_NaN();
  return r;
}

/// eq16 iff Q < 1; |Q - 1| <= 1e-12 counts as a tie and returns eq18, which
/// needs only <n>.
inline SecondOrderBound select_bound(const LOBoundReport& report) {
  if (!std::isfinite(report.mandel_q))
    throw DomainError("select_bound: Mandel Q undefined for zero intensity");
  if (std::abs(report.mandel_q - 1.0) <= 1e-12) return SecondOrderBound::eq18;
  return report.mandel_q < 1.0 ? SecondOrderBound::eq16 : SecondOrderBound::eq18;
}

/// Homodyne settings needed for an order-(s, t) test.
inline int settings_count(int s, int t) {
  if (s < 1 || t < 1) throw DomainError("settings_count: s and t must be >= 1");
  return (s + 1) * (t + 1);
}

// ---------------------------------------------------------------------------

struct ConvergenceReport {
  CriterionResult base;
  CriterionResult refined;
  double max_difference = 0.0;
  bool converged = true;
};

/// Re-evaluates a criterion with every cutoff raised by `step` and flags the
/// result when lhs or rhs move by more than `tolerance`. `evaluate(extra)`
/// must rebuild its states with cutoffs raised by `extra`.
inline ConvergenceReport check_cutoff_convergence(
    const std::function<CriterionResult(int)>& evaluate, int step = 5,
    double tolerance = 1e-8) {
  ConvergenceReport r{evaluate(0), evaluate(step)};
  r.max_difference = std::max(std::abs(r.base.lhs - r.refined.lhs),
                              std::abs(r.base.rhs - r.refined.rhs));
  r.converged = r.max_difference <= tolerance;
  return r;
}

}  // namespace hsim

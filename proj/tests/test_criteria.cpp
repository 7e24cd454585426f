#include <random>

#include <gtest/gtest.h>

#include "hsim/criteria.hpp"
#include "oracle.hpp"

using namespace hsim;
using A = HomodyneSetup;

namespace {

const std::vector<std::string> kAB{"a", "b"};

QuantumState lo(StateSpec spec, const std::string& label) {
  spec.cutoff = moment_converged_cutoff(spec);
  return build(spec, label);
}

QuantumState coherent_lo(cplx alpha, const std::string& label) {
  return lo(StateSpec::coherent_state(alpha), label);
}

QuantumState squeezed_lo(double r, const std::string& label) {
  return lo(StateSpec::squeezed(r), label);
}

double rel(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

}  // namespace

TEST(Original, SingleExcitation) {
  const auto psi = build(StateSpec::single_excitation_state(), kAB);
  const auto h1 = hz_original(psi, 1, 1, 1);
  EXPECT_NEAR(h1.lhs, 0.25, 1e-15);
  EXPECT_NEAR(h1.rhs, 0.0, 1e-15);
  EXPECT_TRUE(h1.violated);
  const auto h2 = hz_original(psi, 2, 1, 1);
  EXPECT_NEAR(h2.lhs, 0.0, 1e-15);
  EXPECT_NEAR(h2.rhs, 0.25, 1e-15);
  EXPECT_FALSE(h2.violated);
}

TEST(Original, TwoModeSqueezed) {
  for (double x : {0.1, 1.0 / 3.0, 0.5, 0.7}) {
    const auto psi = build(StateSpec::two_mode_squeezed(x), kAB);
    const double pair = x / (1 - x * x), n = x * x / (1 - x * x);
    const auto h2 = hz_original(psi, 2, 1, 1);
    EXPECT_LT(rel(h2.lhs, pair * pair), 1e-9) << x;
    EXPECT_LT(rel(h2.rhs, n * n), 1e-9) << x;
    EXPECT_TRUE(h2.violated);
    EXPECT_FALSE(hz_original(psi, 1, 1, 1).violated);
  }
}

TEST(Original, BinomialSecondOrder) {
  const auto psi = build(StateSpec::binomial_state(4), kAB);
  const auto h = hz_original(psi, 1, 2, 2);
  EXPECT_NEAR(h.lhs, 9.0, 1e-12);
  EXPECT_NEAR(h.rhs, 1.5, 1e-12);
  EXPECT_EQ(h.s, 2);
}

TEST(Original, Errors) {
  const auto psi = build(StateSpec::single_excitation_state(), kAB);
  EXPECT_THROW(hz_original(psi, 3, 1, 1), DomainError);
  EXPECT_THROW(hz_original(psi, 1, 0, 1), DomainError);
  EXPECT_THROW(hz_original(psi, 1, 1, 2), CutoffError);
  // (b^dag)^2 pushes |1,1> past the b cutoff; the clipped part has no
  // overlap with the state, so the value is still exact.
  const HilbertSpace sp({{"a", 1}, {"b", 2}});
  oracle::Vec v = oracle::Vec::Zero(6);
  v(4) = 1.0;
  EXPECT_NEAR(hz_original(QuantumState::pure(sp, v), 1, 1, 2).lhs, 0.0, 1e-15);
  EXPECT_THROW(hz_original(build(StateSpec::coherent_state(1.0), "a"), 1, 1, 1), SpaceError);
}

TEST(MeasuredFirstOrder, CoherentLOsKeepIdealValues) {
  const auto psi = build(StateSpec::two_mode_squeezed(0.5), kAB);
  const auto r = measured_first_order(psi, coherent_lo(3.0, "c"), coherent_lo(3.0, "d"), 2);
  EXPECT_EQ(r.id, CriterionId::M2);
  EXPECT_NEAR(r.lhs, 4.0 / 9.0, 1e-9);
  EXPECT_NEAR(r.rhs, 1.0 / 9.0, 1e-9);
  EXPECT_NEAR(r.margin, 1.0 / 3.0, 1e-9);
  EXPECT_TRUE(r.violated);

  const auto one = build(StateSpec::single_excitation_state(), kAB);
  const auto m1 = measured_first_order(one, coherent_lo(cplx(0.4, 1.1), "c"),
                                       coherent_lo(cplx(-2.0, 0.3), "d"), 1);
  EXPECT_EQ(m1.id, CriterionId::M1);
  EXPECT_NEAR(m1.lhs, 0.25, 1e-9);
  EXPECT_NEAR(m1.rhs, 0.0, 1e-15);
  EXPECT_EQ(m1.inputs.size(), 3u);
}

TEST(MeasuredFirstOrder, DisplacedThermalFactor) {
  const double x = 1.0 / 3.0;
  const auto psi = build(StateSpec::two_mode_squeezed(x), kAB);
  const double pair = x / (1 - x * x);
  const cplx al(0.8, 0.6);
  for (double nth : {0.0, 0.5, 1.5, 3.0}) {
    const auto c = lo(StateSpec::displaced_thermal_state(al, nth), "c");
    const auto d = lo(StateSpec::displaced_thermal_state(al, nth), "d");
    const double f = std::norm(al) / (std::norm(al) + nth);
    const auto r = measured_first_order(psi, c, d, 2);
    EXPECT_NEAR(r.lhs, pair * pair * f * f, 1e-9) << nth;
  }
}

TEST(MeasuredFirstOrder, CrossoverAtTwiceLOIntensity) {
  // For x = 1/3 and identical displaced thermal LOs the M2 margin changes
  // sign at n_th = 2 |alpha|^2.
  const auto psi = build(StateSpec::two_mode_squeezed(1.0 / 3.0), kAB);
  auto margin = [&](double ratio) {
    const auto spec = StateSpec::displaced_thermal_state(1.0, ratio);
    return measured_first_order(psi, lo(spec, "c"), lo(spec, "d"), 2).margin;
  };
  EXPECT_GT(margin(1.9), 0.0);
  EXPECT_NEAR(margin(2.0), 0.0, 1e-9);
  EXPECT_LT(margin(2.1), 0.0);
}

TEST(MeasuredFirstOrder, MonotoneInLONoise) {
  const auto psi = build(StateSpec::two_mode_squeezed(0.5), kAB);
  double prev = 1e9;
  for (double nth = 0.0; nth <= 3.0; nth += 0.5) {
    const auto spec = StateSpec::displaced_thermal_state(1.5, nth);
    const double lhs = measured_first_order(psi, lo(spec, "c"), lo(spec, "d"), 2).lhs;
    EXPECT_LT(lhs, prev);
    prev = lhs;
  }
}

TEST(MeasuredSecondOrder, BinomialWithCoherentLOs) {
  const auto psi = build(StateSpec::binomial_state(4), kAB);
  for (double al : {0.5, 1.0, 2.5}) {
    const A s(psi, coherent_lo(al, "c"), coherent_lo(al, "d"));
    const auto s1 = measured_second_order(s, SecondOrderBound::eq16);
    const auto s2 = measured_second_order(s, SecondOrderBound::eq18);
    EXPECT_EQ(s1.id, CriterionId::S1);
    EXPECT_EQ(s2.id, CriterionId::S2);
    EXPECT_LT(rel(s1.lhs, 9.0), 1e-9) << al;
    EXPECT_LT(rel(s1.rhs, 1.5), 1e-9) << al;
    const double f18 = 1.0 + 1.0 / (al * al);
    EXPECT_LT(rel(s2.rhs, 1.5 * f18 * f18), 1e-9) << al;
  }
}

TEST(MeasuredSecondOrder, BinomialWithSqueezedLOs) {
  const auto psi = build(StateSpec::binomial_state(4), kAB);
  for (double r : {0.3, 0.8, 1.2}) {
    const double n = std::sinh(r) * std::sinh(r);
    const A s(psi, squeezed_lo(r, "c"), squeezed_lo(r, "d"));
    const auto s1 = measured_second_order(s, SecondOrderBound::eq16);
    const auto s2 = measured_second_order(s, SecondOrderBound::eq18);
    const double g = 1.0 + 1.0 / n, h = 3.0 + 1.0 / n;
    EXPECT_LT(rel(s1.lhs, 9 * g * g), 1e-8) << r;
    EXPECT_LT(rel(s1.rhs, 1.5 * h * h), 1e-8) << r;
    EXPECT_LT(rel(s2.rhs, 1.5 * g * g), 1e-8) << r;
    EXPECT_TRUE(s2.violated);
  }
  // The eq16 margin closes where sqrt(6)(1 + 1/n) = 3 + 1/n.
  const double n_star = (std::sqrt(6.0) - 1.0) / (3.0 - std::sqrt(6.0));
  const double r_star = std::asinh(std::sqrt(n_star));
  for (double dr : {-0.05, 0.05}) {
    const A s(psi, squeezed_lo(r_star + dr, "c"), squeezed_lo(r_star + dr, "d"));
    EXPECT_EQ(measured_second_order(s, SecondOrderBound::eq16).violated, dr < 0) << dr;
  }
}

TEST(MeasuredSecondOrder, LOFactorNeedsTwoLevels) {
  const auto c = build(StateSpec::fock_state(1), "c");
  EXPECT_NEAR(second_order_lo_factor(c, SecondOrderBound::eq18), 2.0, 1e-15);
  auto spec = StateSpec::fock_state(1);
  spec.cutoff = 1;
  EXPECT_THROW(second_order_lo_factor(build(spec, "c"), SecondOrderBound::eq16), CutoffError);
  EXPECT_THROW(second_order_lo_factor(build(StateSpec::fock_state(0), "c"), SecondOrderBound::eq18),
               DomainError);
}

TEST(Measured, VacuumSignalIsNotViolated) {
  const auto vac = tensor_product({build(StateSpec::fock_state(0), "a"),
                                   build(StateSpec::fock_state(0), "b")});
  const A s(vac, coherent_lo(1.0, "c"), coherent_lo(1.0, "d"));
  for (int type : {1, 2}) {
    const auto r = measured_first_order(s, type);
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_FALSE(r.violated);
  }
  EXPECT_FALSE(measured_second_order(s, SecondOrderBound::eq16).violated);
  EXPECT_FALSE(measured_second_order(s, SecondOrderBound::eq18).violated);
}

TEST(Measured, SeparableSignalsNeverViolate) {
  // Mixtures of up to four product states with coherent, Fock or thermal
  // factors on a common cutoff.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto factor = [&](const std::string& label) {
    StateSpec spec;
    switch (static_cast<int>(u(rng) * 3)) {
      case 0: spec = StateSpec::coherent_state(std::polar(u(rng), 6.3 * u(rng))); break;
      case 1: spec = StateSpec::thermal_state(0.3 * u(rng)); break;
      default: spec = StateSpec::fock_state(static_cast<int>(u(rng) * 4)); break;
    }
    spec.cutoff = 16;
    return build(spec, label);
  };
  auto random_lo = [&](const std::string& label) {
    if (u(rng) < 0.5) return build(StateSpec::coherent_state(0.5 + 2 * u(rng)), label);
    return build(StateSpec::displaced_thermal_state(0.5 + 2 * u(rng), u(rng)), label);
  };
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(u(rng) * 4);
    std::vector<double> w;
    std::vector<QuantumState> members;
    for (int i = 0; i < k; ++i) {
      w.push_back(u(rng) + 0.05);
      members.push_back(tensor_product({factor("a"), factor("b")}));
    }
    double total = 0.0;
    for (double x : w) total += x;
    for (double& x : w) x /= total;
    const auto sig = QuantumState::mixture(w, members);
    for (int type : {1, 2})
      for (int order : {1, 2}) EXPECT_FALSE(hz_original(sig, type, order, order).violated) << trial;
    const A s(sig, random_lo("c"), random_lo("d"));
    for (int type : {1, 2}) EXPECT_FALSE(measured_first_order(s, type).violated) << trial;
    EXPECT_FALSE(measured_second_order(s, SecondOrderBound::eq16).violated) << trial;
    EXPECT_FALSE(measured_second_order(s, SecondOrderBound::eq18).violated) << trial;
  }
}

TEST(Original, CoherentProductUpToThirdOrder) {
  const auto sig = tensor_product({build(StateSpec::coherent_state(cplx(0.9, -0.4)), "a"),
                                   build(StateSpec::coherent_state(1.3), "b")});
  for (int type : {1, 2})
    for (int s = 1; s <= 3; ++s)
      for (int t = 1; t <= 3; ++t) EXPECT_FALSE(hz_original(sig, type, s, t).violated);
}

TEST(Measured, CoherentLOsReproduceOriginalMargins) {
  for (const auto& sig : {build(StateSpec::two_mode_squeezed(0.4), kAB),
                          build(StateSpec::single_excitation_state(), kAB),
                          build(StateSpec::binomial_state(4), kAB)}) {
    const A s(sig, coherent_lo(cplx(1.1, 0.7), "c"), coherent_lo(2.3, "d"));
    for (int type : {1, 2})
      EXPECT_NEAR(measured_first_order(s, type).margin, hz_original(sig, type, 1, 1).margin, 1e-10);
  }
}

TEST(LOBounds, Dominance) {
  std::vector<StateSpec> specs;
  for (double n : {0.2, 1.0, 2.5}) specs.push_back(StateSpec::thermal_state(n));
  for (double a : {0.3, 1.0, 2.5}) specs.push_back(StateSpec::coherent_state(a));
  for (int n : {1, 2, 5}) specs.push_back(StateSpec::fock_state(n));
  for (double r : {0.2, 0.6, 1.0}) specs.push_back(StateSpec::squeezed(r, 0.4));
  for (double n : {0.3, 1.5}) specs.push_back(StateSpec::displaced_thermal_state(1.2, n));
  for (const auto& spec : specs) {
    const auto b = lo_bounds(lo(spec, "c"));
    const double cap = std::min(b.bound_16, b.bound_18);
    EXPECT_LE(b.first_moment_sq, b.bound_A + 1e-9) << to_string(spec.kind);
    EXPECT_LE(b.second_moment_sq, cap + 1e-9 * std::max(1.0, cap)) << to_string(spec.kind);
    if (std::abs(b.mandel_q - 1.0) > 1e-9)
      EXPECT_EQ(b.bound_16 < b.bound_18, b.mandel_q < 1.0) << to_string(spec.kind);
  }
}

TEST(LOBounds, SaturationAndMandelRule) {
  const auto co = lo_bounds(coherent_lo(2.0, "c"));
  EXPECT_NEAR(co.first_moment_sq, co.bound_A, 1e-9);
  EXPECT_NEAR(co.second_moment_sq, co.bound_16, 1e-8);
  EXPECT_NEAR(co.mandel_q, 0.0, 1e-9);
  EXPECT_EQ(select_bound(co), SecondOrderBound::eq16);

  const auto sq = lo_bounds(squeezed_lo(0.7, "c"));
  EXPECT_NEAR(sq.second_moment_sq, sq.bound_18, 1e-8);
  EXPECT_LT(sq.first_moment_sq, 1e-20);
  EXPECT_EQ(select_bound(sq), SecondOrderBound::eq18);

  const auto th = lo_bounds(lo(StateSpec::thermal_state(2.0), "c"));
  EXPECT_NEAR(th.mandel_q, 2.0, 1e-9);
  EXPECT_EQ(select_bound(th), SecondOrderBound::eq18);

  const auto fk = lo_bounds(build(StateSpec::fock_state(3), "c"));
  EXPECT_NEAR(fk.mandel_q, -1.0, 1e-12);
  EXPECT_NEAR(fk.mean_n_sq, 9.0, 1e-12);
  EXPECT_EQ(select_bound(fk), SecondOrderBound::eq16);
}

TEST(LOBounds, TiesAndVacuum) {
  LOBoundReport tie;
  tie.mandel_q = 1.0 + 5e-13;
  EXPECT_EQ(select_bound(tie), SecondOrderBound::eq18);
  tie.mandel_q = 1.0 - 5e-13;
  EXPECT_EQ(select_bound(tie), SecondOrderBound::eq18);
  tie.mandel_q = 1.0 - 1e-9;
  EXPECT_EQ(select_bound(tie), SecondOrderBound::eq16);
  const auto vac = lo_bounds(build(StateSpec::fock_state(0), "c"));
  EXPECT_TRUE(std::isnan(vac.mandel_q));
  EXPECT_THROW(select_bound(vac), DomainError);
  EXPECT_THROW(lo_bounds(build(StateSpec::two_mode_squeezed(0.2), kAB)), SpaceError);
}

TEST(Settings, Count) {
  EXPECT_EQ(settings_count(1, 1), 4);
  EXPECT_EQ(settings_count(2, 2), 9);
  EXPECT_EQ(settings_count(1, 3), 8);
  EXPECT_THROW(settings_count(0, 1), DomainError);
}

TEST(Convergence, FlagsCutoffSensitivity) {
  const auto psi = build(StateSpec::two_mode_squeezed(0.5), kAB);
  auto eval = [&](int base) {
    return [&, base](int extra) {
      auto spec = StateSpec::coherent_state(2.0);
      spec.cutoff = base + extra;
      return measured_first_order(psi, build(spec, "c"), build(spec, "d"), 2);
    };
  };
  const auto good = check_cutoff_convergence(eval(40));
  EXPECT_TRUE(good.converged);
  EXPECT_LT(good.max_difference, 1e-8);
  const auto loose = check_cutoff_convergence(eval(40), 5, 0.0);
  EXPECT_EQ(loose.converged, loose.max_difference == 0.0);
}

TEST(Results, JsonAndValidation) {
  const auto r = make_result(CriterionId::S2, 2, 2, 1.0, 0.5, {"x"});
  const auto j = to_json(r);
  EXPECT_EQ(j.at("criterion_id"), "S2");
  EXPECT_EQ(j.at("violated"), true);
  EXPECT_DOUBLE_EQ(j.at("margin").get<double>(), 0.5);
  EXPECT_FALSE(make_result(CriterionId::M1, 1, 1, 1.0, 1.0 - 1e-11, {}).violated);
  EXPECT_THROW(make_result(CriterionId::M1, 1, 1, std::nan(""), 0.0, {}), DomainError);
  EXPECT_EQ(criterion_from_string("HZ2"), CriterionId::HZ2);
  EXPECT_THROW(criterion_from_string("M3"), std::invalid_argument);
  EXPECT_EQ(bound_from_string("eq18"), SecondOrderBound::eq18);
}

#include <doctest.h>

#include <cmath>
#include <vector>

#include "felce/ce_strategy.hpp"
#include "felce/errors.hpp"
#include "support.hpp"

using namespace felce;
using felce::test::reference_config;
using felce::test::sampled_config;

namespace {

// Validity straight from the closed form, no tolerance.
bool direct_valid(const UtilityTable& t, double chi, double gamma) {
  const std::size_t eta = t.num_outcomes();
  for (std::size_t s = 0; s < eta; ++s) {
    const double a = t.server[s] - t.server[0];
    double b = 0.0;
    for (const auto& u : t.devices) b += u[s] - u[0];
    const double p = gamma * (a - chi * b) + (s < eta / 2 ? 1.0 : 0.0);
    if (p < 0.0 || p > 1.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("CE terms at the anchor outcomes") {
  const GameConfig cfg = sampled_config(4, 3);
  const UtilityTable t = build_utility_table(cfg);
  const CETerms terms = ce_terms(t);
  const std::size_t eta = t.num_outcomes();
  const ViabilityReport v = check_viability(cfg);

  CHECK(terms.A[0] == 0.0);
  CHECK(terms.B[0] == 0.0);

  double psi_gap = 0.0;
  double income = 0.0;
  for (const auto& d : cfg.devices) {
    psi_gap += d.alpha * (d.psi_hi - d.psi_lo);
    income += d.beta * d.lambda * (1.0 - d.delta);
  }
  CHECK(terms.A[eta / 2] == doctest::Approx(cfg.server.beta * cfg.server.rho));
  CHECK(terms.B[eta / 2] == doctest::Approx(-psi_gap));
  CHECK(terms.A[eta / 2 - 1] == doctest::Approx(cfg.server.alpha * (v.phi_min - v.phi_max)));
  CHECK(terms.B[eta / 2 - 1] == doctest::Approx(income));
}

TEST_CASE("sign pattern of viable configs") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const UtilityTable t = build_utility_table(sampled_config(3, seed));
    const CETerms terms = ce_terms(t);
    const std::size_t half = t.num_outcomes() / 2;
    for (std::size_t s = 0; s < half; ++s) {
      CHECK(terms.A[s] <= 0.0);
      CHECK(terms.B[s] >= 0.0);
    }
    for (std::size_t s = half; s < t.num_outcomes(); ++s) CHECK(terms.B[s] < 0.0);
  }
}

TEST_CASE("derived strategy") {
  const UtilityTable t = build_utility_table(reference_config(8));
  const FeasibilityReport r = feasible_region(t, 1.0);
  REQUIRE(r.chi_admissible);
  const double gamma = *r.default_gamma();
  const CEStrategy s = derive_ce_strategy(t, 1.0, gamma);
  CHECK(s.after(1) == 1.0);
  for (double p : s.p) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  const CETerms terms = ce_terms(t);
  const std::size_t half = t.num_outcomes() / 2;
  for (std::size_t s_ = 0; s_ < t.num_outcomes(); ++s_) {
    const double expect = gamma * (terms.A[s_] - terms.B[s_]) + (s_ < half ? 1.0 : 0.0);
    CHECK(s.p[s_] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("derive errors") {
  const UtilityTable t = build_utility_table(reference_config(3));
  CHECK_THROWS_AS(derive_ce_strategy(t, 1.0, 0.0), GammaZero);
  CHECK_THROWS_AS(derive_ce_strategy(t, 0.5, 0.01), ConfigError);
  CHECK_THROWS_AS(derive_ce_strategy(t, 1.0, std::nan("")), ConfigError);
  CHECK_THROWS_AS(feasible_region(t, std::nan("")), ConfigError);

  const FeasibilityReport r = feasible_region(t, 2.0);
  REQUIRE(r.chi_admissible);
  const double hi = r.gamma_intervals.front().hi;
  try {
    derive_ce_strategy(t, 2.0, 1.5 * hi);
    FAIL("expected InfeasiblePoint");
  } catch (const InfeasiblePoint& e) {
    CHECK(e.index() >= 1);
    CHECK(e.index() <= t.num_outcomes());
    CHECK((e.value() < 0.0 || e.value() > 1.0));
  }
  CHECK_THROWS_AS(derive_ce_strategy(t, 2.0, -hi), InfeasiblePoint);
}

TEST_CASE("interval endpoint is feasible") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const UtilityTable t = build_utility_table(sampled_config(4, seed));
    const FeasibilityReport r = feasible_region(t, 1.0);
    REQUIRE(r.chi_admissible);
    const GammaInterval& iv = r.gamma_intervals.front();
    const CEStrategy s = derive_ce_strategy(t, 1.0, iv.hi);
    const std::size_t b = iv.binding_index;
    CHECK((s.after(b) == doctest::Approx(0.0) || s.after(b) == doctest::Approx(1.0)));
  }
}

TEST_CASE("negative gamma is never admissible for viable configs") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const UtilityTable t = build_utility_table(sampled_config(3, seed));
    for (double chi : {1.0, 2.0, 4.0, 16.0}) {
      const FeasibilityReport r = feasible_region(t, chi);
      for (const auto& iv : r.gamma_intervals) CHECK(iv.lo >= 0.0);
      CHECK_FALSE(r.negative_gamma_chi_range.has_value());
    }
  }
}

TEST_CASE("chi range agrees with per-chi reports") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const UtilityTable t = build_utility_table(sampled_config(3, seed));
    const auto range = feasible_region(t, 1.0).positive_gamma_chi_range;
    REQUIRE(range.has_value());
    for (double chi = 1.0; chi <= 12.0; chi += 0.0625) {
      const bool inside = chi >= range->lo && chi <= range->hi;
      // Skip the exact boundary, where rounding decides.
      if (std::abs(chi - range->lo) < 1e-9) continue;
      CHECK(feasible_region(t, chi).chi_admissible == inside);
    }
  }
}

TEST_CASE("infeasible chi leaves no interval") {
  GameConfig cfg = reference_config(1);
  cfg.devices[0].alpha = 0.2;
  cfg.devices[0].beta = 0.1;
  const UtilityTable t = build_utility_table(cfg);
  const FeasibilityReport r = feasible_region(t, 1.0);
  CHECK_FALSE(r.chi_admissible);
  CHECK(r.gamma_intervals.empty());
  CHECK_FALSE(r.default_gamma().has_value());
  REQUIRE(r.positive_gamma_chi_range.has_value());
  CHECK(r.positive_gamma_chi_range->lo > 1.0);
  CHECK(feasible_region(t, r.positive_gamma_chi_range->lo * 1.001).chi_admissible);
}

TEST_CASE("grid scan agrees with the reported interval") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const UtilityTable t = build_utility_table(sampled_config(3, seed));
    for (double chi : {1.0, 2.5, 4.0}) {
      const FeasibilityReport r = feasible_region(t, chi);
      REQUIRE(r.chi_admissible);
      const double span = 2.0 * r.gamma_intervals.front().hi;
      const int points = 2000;
      for (int k = 0; k < points; ++k) {
        const double gamma = -span + 2.0 * span * k / (points - 1);
        if (gamma == 0.0) continue;
        CHECK(r.contains(gamma) == direct_valid(t, chi, gamma));
      }
    }
  }
}

TEST_CASE("interval is invariant under permuting devices") {
  const GameConfig cfg = sampled_config(4, 9);
  GameConfig rev = cfg;
  std::reverse(rev.devices.begin(), rev.devices.end());
  const auto a = feasible_region(build_utility_table(cfg), 2.0);
  const auto b = feasible_region(build_utility_table(rev), 2.0);
  REQUIRE(a.gamma_intervals.size() == b.gamma_intervals.size());
  CHECK(a.gamma_intervals[0].hi == doctest::Approx(b.gamma_intervals[0].hi).epsilon(1e-13));
}

TEST_CASE("scaling every utility scales the interval inversely") {
  GameConfig cfg = sampled_config(3, 4);
  const auto base = feasible_region(build_utility_table(cfg), 2.0);
  UtilityTable scaled = build_utility_table(cfg);
  for (double& u : scaled.server) u *= 3.0;
  for (auto& dev : scaled.devices) {
    for (double& u : dev) u *= 3.0;
  }
  const auto r = feasible_region(scaled, 2.0);
  CHECK(r.gamma_intervals[0].hi == doctest::Approx(base.gamma_intervals[0].hi / 3.0).epsilon(1e-13));
  CHECK(r.gamma_intervals[0].binding_index == base.gamma_intervals[0].binding_index);
}

TEST_CASE("homogeneous conditional payoffs") {
  const GameConfig cfg = reference_config(8);
  const UtilityTable t = build_utility_table(cfg);
  const ViabilityReport v = check_viability(cfg);
  for (double chi : {1.0, 2.0, 4.0}) {
    const ConditionalPayoffs e = theoretical_conditional_payoffs(t, 0, chi, Homogeneous{});
    CHECK(e.cc == doctest::Approx(t.devices[0][0]));
    CHECK(e.dc - e.cc == doctest::Approx(2.0 * 8.0 / (8.0 * chi)));
    CHECK(e.cc - e.cd == doctest::Approx(5.0 * (v.phi_max - v.phi_min) / (8.0 * chi)));
    CHECK(e.dc - e.dd == doctest::Approx(5.0 * (v.phi_max - v.phi_min) / (8.0 * chi)));
  }
  CHECK_THROWS_AS(theoretical_conditional_payoffs(t, 8, 1.0, Homogeneous{}), DimensionMismatch);
}

TEST_CASE("heterogeneous payoffs reduce to homogeneous for one device") {
  const UtilityTable t = build_utility_table(reference_config(1));
  for (double chi : {1.0, 3.0}) {
    const auto h = theoretical_conditional_payoffs(t, 0, chi, Homogeneous{});
    const auto x = theoretical_conditional_payoffs(t, 0, chi, Heterogeneous{0.0});
    CHECK(h.cc == doctest::Approx(x.cc));
    CHECK(h.dc == doctest::Approx(x.dc));
    CHECK(h.cd == doctest::Approx(x.cd));
    CHECK(h.dd == doctest::Approx(x.dd));
  }
}

TEST_CASE("heterogeneous payoffs charge the other devices' surplus") {
  const UtilityTable t = build_utility_table(reference_config(3));
  const double chi = 2.0;
  const auto zero = theoretical_conditional_payoffs(t, 1, chi, Heterogeneous{0.0});
  const auto shifted = theoretical_conditional_payoffs(t, 1, chi, Heterogeneous{1.5});
  for (auto [a, b] : {std::pair{zero.cc, shifted.cc}, std::pair{zero.dc, shifted.dc},
                      std::pair{zero.cd, shifted.cd}, std::pair{zero.dd, shifted.dd}}) {
    CHECK(a - b == doctest::Approx(1.5 / chi));
  }
  CHECK(shifted.cc > shifted.cd);
  CHECK(shifted.dc > shifted.dd);
}

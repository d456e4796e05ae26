#include "felce/ce_strategy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "felce/errors.hpp"

namespace felce {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_chi(double chi) {
  if (!(chi >= 1.0) || !std::isfinite(chi)) {
    throw ConfigError("extortion factor chi must be finite and >= 1");
  }
}

// Sign pattern of A_j - chi B_j required by one sign of gamma: for gamma > 0
// the server-cooperating half must be <= 0 and the defecting half >= 0.
bool signs_hold(const std::vector<double>& d, bool positive_gamma) {
  const std::size_t half = d.size() / 2;
  for (std::size_t s = 0; s < d.size(); ++s) {
    const bool coop_half = s < half;
    const bool want_nonpositive = coop_half == positive_gamma;
    if (want_nonpositive ? d[s] > 0.0 : d[s] < 0.0) return false;
  }
  return true;
}

std::optional<ChiRange> chi_range(const CETerms& terms, bool positive_gamma) {
  const std::size_t eta = terms.A.size();
  const std::size_t half = eta / 2;
  double lo = 1.0;
  double hi = kInf;
  for (std::size_t s = 0; s < eta; ++s) {
    const double a = terms.A[s];
    const double b = terms.B[s];
    // Constraint is A - chi B <= 0 (nonpositive) or >= 0.
    const bool want_nonpositive = (s < half) == positive_gamma;
    if (b == 0.0) {
      if (want_nonpositive ? a > 0.0 : a < 0.0) return std::nullopt;
      continue;
    }
    const double ratio = a / b;
    // A - chi B <= 0  <=>  chi B >= A.
    const bool lower_bound = want_nonpositive == (b > 0.0);
    if (lower_bound) {
      lo = std::max(lo, ratio);
    } else {
      hi = std::min(hi, ratio);
    }
  }
  if (lo > hi) return std::nullopt;
  return ChiRange{lo, hi};
}

}  // namespace

std::vector<double> CETerms::combined(double chi) const {
  std::vector<double> d(A.size());
  for (std::size_t s = 0; s < A.size(); ++s) d[s] = A[s] - chi * B[s];
  return d;
}

CETerms ce_terms(const UtilityTable& table) {
  const std::size_t eta = table.num_outcomes();
  CETerms terms;
  terms.A.resize(eta);
  terms.B.resize(eta);
  const double us1 = table.server[0];
  for (std::size_t s = 0; s < eta; ++s) {
    terms.A[s] = table.server[s] - us1;
    double b = 0.0;
    for (const auto& u : table.devices) b += u[s] - u[0];
    terms.B[s] = b;
  }
  return terms;
}

CEStrategy derive_ce_strategy(const UtilityTable& table, double chi,
                              double gamma) {
  require_chi(chi);
  if (gamma == 0.0) throw GammaZero();
  if (!std::isfinite(gamma)) throw ConfigError("gamma must be finite");

  const CETerms terms = ce_terms(table);
  const std::vector<double> d = terms.combined(chi);
  const std::size_t half = d.size() / 2;

  CEStrategy strategy;
  strategy.chi = chi;
  strategy.gamma = gamma;
  strategy.p.resize(d.size());
  for (std::size_t s = 0; s < d.size(); ++s) {
    double p = gamma * d[s] + (s < half ? 1.0 : 0.0);
    if (p < -kProbabilityTolerance || p > 1.0 + kProbabilityTolerance) {
      throw InfeasiblePoint(s + 1, p);
    }
    strategy.p[s] = std::clamp(p, 0.0, 1.0);
  }
  return strategy;
}

bool GammaInterval::contains(double gamma) const {
  return gamma != 0.0 && gamma >= lo && gamma <= hi;
}

double GammaInterval::midpoint() const {
  if (std::isinf(hi)) return lo >= 0.0 ? 1.0 : -1.0;
  if (std::isinf(lo)) return -1.0;
  return 0.5 * (lo + hi);
}

bool FeasibilityReport::contains(double gamma) const {
  return std::any_of(gamma_intervals.begin(), gamma_intervals.end(),
                     [gamma](const GammaInterval& iv) { return iv.contains(gamma); });
}

std::optional<double> FeasibilityReport::default_gamma() const {
  if (gamma_intervals.empty()) return std::nullopt;
  for (const auto& iv : gamma_intervals) {
    if (iv.hi > 0.0) return iv.midpoint();
  }
  return gamma_intervals.front().midpoint();
}

FeasibilityReport feasible_region(const UtilityTable& table, double chi) {
  require_chi(chi);
  const CETerms terms = ce_terms(table);
  const std::vector<double> d = terms.combined(chi);

  FeasibilityReport report;
  report.chi = chi;
  report.positive_gamma_chi_range = chi_range(terms, true);
  report.negative_gamma_chi_range = chi_range(terms, false);

  std::size_t binding = 0;
  double largest = 0.0;
  for (std::size_t s = 0; s < d.size(); ++s) {
    if (std::abs(d[s]) > largest) {
      largest = std::abs(d[s]);
      binding = s;
    }
  }
  const double bound = largest > 0.0 ? 1.0 / largest : kInf;

  if (signs_hold(d, true)) {
    report.gamma_intervals.push_back({0.0, bound, binding + 1});
  }
  if (signs_hold(d, false)) {
    report.gamma_intervals.push_back({-bound, 0.0, binding + 1});
  }
  report.chi_admissible = !report.gamma_intervals.empty();
  if (report.chi_admissible) report.binding_indices.push_back(binding + 1);
  return report;
}

namespace {

struct OutcomeAnchors {
  double u1;        // u_i^1
  double a_dc;      // A at (D, all C)
  double a_cd;      // A at (C, all D)
  double a_dd;      // A at (D, all D)
};

OutcomeAnchors anchors(const UtilityTable& table, std::size_t device) {
  if (device >= table.num_devices()) {
    throw DimensionMismatch("device index out of range");
  }
  const std::size_t eta = table.num_outcomes();
  const std::size_t half = eta / 2;
  const double us1 = table.server[0];
  return {table.devices[device][0], table.server[half] - us1,
          table.server[half - 1] - us1, table.server[eta - 1] - us1};
}

}  // namespace

ConditionalPayoffs theoretical_conditional_payoffs(const UtilityTable& table,
                                                   std::size_t device,
                                                   double chi,
                                                   const Homogeneous&) {
  require_chi(chi);
  const OutcomeAnchors x = anchors(table, device);
  const double share = 1.0 / (static_cast<double>(table.num_devices()) * chi);
  return {x.u1, x.u1 + share * x.a_dc, x.u1 + share * x.a_cd,
          x.u1 + share * x.a_dd};
}

ConditionalPayoffs theoretical_conditional_payoffs(const UtilityTable& table,
                                                   std::size_t device,
                                                   double chi,
                                                   const Heterogeneous& mode) {
  require_chi(chi);
  const OutcomeAnchors x = anchors(table, device);
  const double delta = mode.delta_others;
  return {x.u1 - delta / chi, x.u1 + (x.a_dc - delta) / chi,
          x.u1 + (x.a_cd - delta) / chi, x.u1 + (x.a_dd - delta) / chi};
}

}  // namespace felce

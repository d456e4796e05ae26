#pragma once

// Collective extortion: a memory-one server strategy p over the eta
// outcomes that pins E_s - u_s^1 = chi * sum_i (E_i - u_i^1) for any
// device behaviour.

#include <cstddef>
#include <optional>
#include <vector>

#include "felce/game_model.hpp"

namespace felce {

// Range checks on p_j accept values within this distance of [0,1].
inline constexpr double kProbabilityTolerance = 1e-12;

// A_j = u_s^j - u_s^1 and B_j = sum_i (u_i^j - u_i^1), stored at slot j - 1.
struct CETerms {
  std::vector<double> A;
  std::vector<double> B;

  // A_j - chi * B_j at slot j - 1.
  std::vector<double> combined(double chi) const;
};

CETerms ce_terms(const UtilityTable& table);

struct CEStrategy {
  std::vector<double> p;  // cooperation probability after each outcome
  double chi = 1.0;
  double gamma = 0.0;

  // Cooperation probability after outcome j (1-based).
  double after(std::size_t outcome) const { return p[outcome - 1]; }
};

// Throws GammaZero, ConfigError for chi < 1, and InfeasiblePoint naming the
// first outcome whose probability leaves [0,1] by more than the tolerance.
// Entries within tolerance of the boundary are snapped onto it.
CEStrategy derive_ce_strategy(const UtilityTable& table, double chi,
                              double gamma);

// Admissible chi values for one sign of gamma: [lo, hi] intersected with
// [1, inf). hi may be +inf.
struct ChiRange {
  double lo = 1.0;
  double hi = 1.0;
};

// Closed interval of gamma excluding zero: (0, hi] for the positive case and
// [lo, 0) for the negative one. An unbounded side is +/-inf.
struct GammaInterval {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t binding_index = 0;  // outcome j attaining max |A_j - chi B_j|

  bool contains(double gamma) const;
  double midpoint() const;
};

struct FeasibilityReport {
  double chi = 1.0;
  bool chi_admissible = false;
  std::vector<GammaInterval> gamma_intervals;  // at most one per sign of gamma
  std::vector<std::size_t> binding_indices;
  std::optional<ChiRange> positive_gamma_chi_range;
  std::optional<ChiRange> negative_gamma_chi_range;

  bool contains(double gamma) const;
  // Midpoint of the positive-gamma interval when present, else of the first.
  std::optional<double> default_gamma() const;
};

FeasibilityReport feasible_region(const UtilityTable& table, double chi);

// Expected payoff of one device conditioned on (server action | own action),
// as implied by the extortion relation. First letter: server action.
struct ConditionalPayoffs {
  double cc = 0.0;
  double dc = 0.0;
  double cd = 0.0;
  double dd = 0.0;
};

// Homogeneous devices share the server's surplus equally (1 / (n chi));
// heterogeneous mode charges the other devices' fixed surplus
// delta_others = chi * sum_{j != i} (E_j - u_j^1) against device i.
struct Homogeneous {};
struct Heterogeneous {
  double delta_others = 0.0;
};

ConditionalPayoffs theoretical_conditional_payoffs(const UtilityTable& table,
                                                   std::size_t device,
                                                   double chi,
                                                   const Homogeneous&);
ConditionalPayoffs theoretical_conditional_payoffs(const UtilityTable& table,
                                                   std::size_t device,
                                                   double chi,
                                                   const Heterogeneous& mode);

}  // namespace felce

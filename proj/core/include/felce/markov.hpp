#pragma once

// Joint memory-one Markov chain over the eta outcomes, its stationary
// distribution, and the determinant form of v . f used as an independent
// check of the extortion relation.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "felce/ce_strategy.hpp"
#include "felce/game_model.hpp"

namespace felce {

// Perturbation applied to {0,1} strategy entries when a caller opts in.
inline constexpr double kDefaultPerturbation = 1e-9;

// Dense determinant route is limited to eta <= 32.
inline constexpr std::size_t kMaxDeterminantDevices = 4;

// A device's conditional cooperation probabilities. Scalar(q) behaves as a
// full vector with every entry equal to q.
class DeviceStrategy {
 public:
  static DeviceStrategy scalar(double q);
  static DeviceStrategy full(std::vector<double> q);

  bool is_scalar() const { return std::holds_alternative<double>(q_); }
  // Cooperation probability after the outcome stored at `slot` (j - 1).
  double after_slot(std::size_t slot) const;
  // Entries clamped into [eps, 1 - eps].
  DeviceStrategy perturbed(double eps) const;
  // Number of entries for a full strategy; zero for scalar.
  std::size_t size() const;

 private:
  explicit DeviceStrategy(std::variant<double, std::vector<double>> q)
      : q_(std::move(q)) {}

  std::variant<double, std::vector<double>> q_;
};

struct TransitionMatrix {
  Eigen::MatrixXd m;  // m(u, v): probability of g_{v+1} following g_{u+1}

  std::size_t size() const { return static_cast<std::size_t>(m.rows()); }
};

// M_uv = P(p_u, server action of g_v) * prod_i Q_i(q^i_u, action of d_i in g_v).
TransitionMatrix build_transition_matrix(std::span<const double> p,
                                         std::span<const DeviceStrategy> devices);

// Largest deviation of any row sum from one.
double max_row_sum_error(const TransitionMatrix& matrix);

// Closed communicating classes of the support graph. More than one means
// the stationary distribution is not unique.
std::size_t count_closed_classes(const TransitionMatrix& matrix);

enum class StationaryMethod { kDirect, kPowerIteration };

struct StationaryDistribution {
  std::vector<double> v;
  double residual = 0.0;  // max |(vM - v)_j|
  StationaryMethod method = StationaryMethod::kDirect;
};

// Direct solve of v(M - I) = 0 with a normalization row; falls back to power
// iteration (made lazy if it stalls) when the direct result misses `tol`.
// Throws NonErgodic when the chain has several closed classes.
StationaryDistribution stationary_distribution(const TransitionMatrix& matrix,
                                               double tol = 1e-10);

struct ExpectedUtilities {
  double server = 0.0;
  std::vector<double> devices;
};

ExpectedUtilities expected_utilities(std::span<const double> v,
                                     const UtilityTable& table);
ExpectedUtilities expected_utilities(const StationaryDistribution& dist,
                                     const UtilityTable& table);

// det[M'_1, ..., M'_{eta-1}, f] with M' = M - I; proportional to v . f with
// a constant independent of f.
double det_dot(std::span<const double> p, std::span<const DeviceStrategy> devices,
               std::span<const double> f);

// Expected utilities as ratios det_dot(u)/det_dot(1).
ExpectedUtilities determinant_expected_utilities(
    std::span<const double> p, std::span<const DeviceStrategy> devices,
    const UtilityTable& table);

struct IdentityCheck {
  double residual = 0.0;  // |E_s - u_s^1 - chi sum(E_i - u_i^1)| / max(1, |u_s^1|)
  double server_surplus = 0.0;       // E_s - u_s^1
  double scaled_device_surplus = 0.0;  // chi * sum(E_i - u_i^1)
  ExpectedUtilities expected;
  bool within_tolerance = false;
};

struct IdentityOptions {
  double tolerance = 1e-8;
  bool perturb = false;  // clamp device strategies into [eps, 1 - eps]
  double perturbation = kDefaultPerturbation;
};

IdentityCheck verify_ce_identity(const UtilityTable& table,
                                 const CEStrategy& strategy,
                                 std::span<const DeviceStrategy> devices,
                                 const IdentityOptions& options = {});

IdentityCheck verify_ce_identity(const GameConfig& cfg, double chi, double gamma,
                                 std::span<const DeviceStrategy> devices,
                                 const IdentityOptions& options = {});

}  // namespace felce

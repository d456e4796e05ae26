#pragma once

// Round-by-round play between one server agent and n evolutionary devices.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "felce/ce_strategy.hpp"
#include "felce/game_model.hpp"

namespace felce {

using Rng = std::mt19937_64;

// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(Rng& rng);

struct CollectiveExtortion {
  CEStrategy strategy;
  double prior = 0.5;  // cooperation probability before any outcome exists
};
struct AllCooperate {};
struct AllDefect {};
// Copies the focal device's previous action; opens with C.
struct TitForTat {
  std::size_t focal = 0;
};
// Repeats its previous action iff the previous server utility reached the
// threshold (default u_s^1); opens with C.
struct WinStayLoseShift {
  std::optional<double> threshold;
};

using ServerAgent =
    std::variant<CollectiveExtortion, AllCooperate, AllDefect, TitForTat, WinStayLoseShift>;

std::string agent_name(const ServerAgent& agent);

struct ServerMove {
  Action action = Action::C;
  double coop_prob = 0.0;  // probability the agent cooperated with
};

// `previous` is the outcome index of the last round, if any. Draws exactly
// one uniform from `rng` regardless of the agent.
ServerMove server_act(const ServerAgent& agent, std::optional<std::size_t> previous,
                      const UtilityTable& table, Rng& rng);

// Device payoff expectations W_C and W_D for one round.
struct Payoffs {
  double cooperate = 0.0;
  double defect = 0.0;
};

// One-round expectation of the device utility under the server's mixed action.
struct ImmediatePayoff {};
// Mixtures of the extortion-implied conditional payoffs.
struct ExtortionPayoff {
  std::variant<Homogeneous, Heterogeneous> devices = Homogeneous{};
};
using PayoffMode = std::variant<ImmediatePayoff, ExtortionPayoff>;

// Throws NonPositivePayoff if a payoff the device update relies on is not
// positive (extortion mode: any conditional payoff; immediate: W_D or W_C < 0).
Payoffs one_step_payoffs(const GameConfig& cfg, const UtilityTable& table,
                         std::size_t device, double server_coop_prob, double chi,
                         const PayoffMode& mode);

// q W_C / (q W_C + (1 - q) W_D).
double evolve_device(double q, double w_cooperate, double w_defect);

struct RoundRecord {
  std::size_t round = 0;
  std::size_t outcome = 0;
  Action server_action = Action::C;
  double server_coop_prob = 0.0;
  double server_utility = 0.0;
  std::vector<double> device_utilities;
  std::vector<double> q;  // cooperation probabilities used in this round
  std::vector<double> w_cooperate;
  std::vector<double> w_defect;
};

struct SimulationTrace {
  std::size_t num_devices = 0;
  std::vector<RoundRecord> rounds;

  std::vector<double> q_series(std::size_t device) const;
};

struct SimulationOptions {
  std::size_t rounds = 200;
  std::uint64_t seed = 0;
  // Defaults to ExtortionPayoff for a CE agent and ImmediatePayoff otherwise.
  std::optional<PayoffMode> payoff;
  // Devices estimate the server's cooperation from its past actions
  // ((1 + #C) / (2 + t)) instead of being told its probability.
  bool empirical_server_estimate = false;
};

SimulationTrace simulate(const GameConfig& cfg, const UtilityTable& table,
                         const ServerAgent& agent, std::span<const double> q0,
                         const SimulationOptions& options);
SimulationTrace simulate(const GameConfig& cfg, const ServerAgent& agent,
                         std::span<const double> q0, const SimulationOptions& options);

// Columns: t, outcome_index, server_action, server_coop_prob, u_s, u_1..u_n,
// q_1..q_n, W_C_1, W_D_1.
void write_trace_csv(const SimulationTrace& trace, std::ostream& out);

struct RelativeUtility {
  std::vector<double> server;
  std::vector<std::vector<double>> devices;
};

// Trailing moving average (window >= 1) of u / u^1 per round.
RelativeUtility relative_utility(const SimulationTrace& trace,
                                 const UtilityTable& table, std::size_t window = 1);

// First position whose value is >= threshold (or <= for `at_most`).
std::optional<std::size_t> first_round_reaching(std::span<const double> series,
                                                double threshold, bool at_most = false);

}  // namespace felce

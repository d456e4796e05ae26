#pragma once

// One-shot federated edge learning game: a server and n devices each pick
// C or D; the joint profile is one of eta = 2^(n+1) outcomes g_1..g_eta.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace felce {

enum class Action : std::uint8_t { C = 0, D = 1 };

constexpr char to_char(Action a) { return a == Action::C ? 'C' : 'D'; }

// Largest device count for which dense eta x eta work is allowed (eta = 8192).
inline constexpr std::size_t kMaxDevices = 12;

struct DeviceParams {
  double alpha = 1.0;      // weight on the returned-model profit
  double beta = 1.0;       // weight on the defection income
  double psi_hi = 2.0;     // profit when the server returns the model
  double psi_lo = 1.0;     // profit when the model is withheld
  double lambda = 1.0;     // defection income scale
  double delta = 0.0;      // fraction of data used when defecting, in [0,1)
  double data_size = 1.0;  // local sample count F_i

  // m_i(D); m_i(C) is zero.
  double defection_income() const { return lambda * (1.0 - delta); }

  void validate() const;
};

struct ServerParams {
  double alpha = 5.0;
  double beta = 2.0;
  double rho = 8.0;  // total cost of sending the model to every device
  double w = 10.0;
  double r = 10.0;
  double t = 5.0;
  double k = 13.2;
  double a = 0.7;

  void validate() const;
};

struct GameConfig {
  std::vector<DeviceParams> devices;
  ServerParams server;

  std::size_t num_devices() const { return devices.size(); }
  std::size_t num_outcomes() const;

  void validate() const;
};

struct JointAction {
  Action server = Action::C;
  std::vector<Action> devices;

  bool operator==(const JointAction&) const = default;
};

// eta = 2^(n+1).
std::size_t num_outcomes(std::size_t num_devices);

// Outcome indices are 1-based: j = 1 + bits, server as the most significant
// bit, device 1 next, device n least significant, C = 0 and D = 1.
// Vectors indexed by outcome store g_j at position j - 1.
std::size_t encode_outcome(Action server, std::span<const Action> devices);
std::size_t encode_outcome(const GameConfig& cfg, Action server,
                           std::span<const Action> devices);
JointAction decode_outcome(std::size_t index, std::size_t num_devices);

// Single-player lookups without materializing the joint action.
Action server_action_at(std::size_t index, std::size_t num_devices);
Action device_action_at(std::size_t index, std::size_t num_devices,
                        std::size_t device);

std::string outcome_label(std::size_t index, std::size_t num_devices);

// Server profit as a function of the device action profile. The logistic
// curve over a power-law model error is the only shipped implementation.
class ProfitModel {
 public:
  virtual ~ProfitModel() = default;
  virtual double profit(std::span<const Action> devices,
                        const GameConfig& cfg) const = 0;
};

class LogisticPowerLawProfit final : public ProfitModel {
 public:
  double profit(std::span<const Action> devices,
                const GameConfig& cfg) const override;
};

const ProfitModel& default_profit_model();

// k * (sum of effective data)^(-a). Throws DegenerateError when the
// effective data is zero and a > 0.
double model_error(std::span<const Action> devices, const GameConfig& cfg);

// w / (1 + exp(r * error - t)).
double server_profit(std::span<const Action> devices, const GameConfig& cfg);

double device_utility(std::size_t device, Action server, Action own,
                      const GameConfig& cfg);

double server_utility(Action server, std::span<const Action> devices,
                      const GameConfig& cfg,
                      const ProfitModel& profit = default_profit_model());

struct UtilityTable {
  std::vector<double> server;                // u_s, length eta
  std::vector<std::vector<double>> devices;  // u_i, n vectors of length eta

  std::size_t num_outcomes() const { return server.size(); }
  std::size_t num_devices() const { return devices.size(); }

  // Sum over devices of u_i at slot (0-based).
  double device_sum(std::size_t slot) const;
};

UtilityTable build_utility_table(const GameConfig& cfg,
                                 const ProfitModel& profit = default_profit_model(),
                                 std::size_t max_devices = kMaxDevices);

struct ViabilityReport {
  std::vector<bool> devices;
  bool server = false;
  double phi_max = 0.0;  // profit with every device cooperating
  double phi_min = 0.0;  // profit with every device defecting

  bool viable() const;
};

// Every player must strictly prefer all-cooperation to all-defection.
ViabilityReport check_viability(const GameConfig& cfg,
                                const ProfitModel& profit = default_profit_model());

// True iff switching C -> D strictly raises the switching player's utility
// for every player and every profile of the others' actions.
bool verify_defection_dominance(const GameConfig& cfg);
bool verify_defection_dominance(const UtilityTable& table);

}  // namespace felce

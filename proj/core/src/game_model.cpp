#include "felce/game_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "felce/errors.hpp"

namespace felce {

InfeasiblePoint::InfeasiblePoint(std::size_t index, double value)
    : Error("p_" + std::to_string(index) + " = " + std::to_string(value) +
            " lies outside [0,1]"),
      index_(index),
      value_(value) {}

InfeasibleChi::InfeasibleChi(double chi)
    : Error("chi = " + std::to_string(chi) + " admits no positive gamma"),
      chi_(chi) {}

NonErgodic::NonErgodic(std::size_t closed_classes)
    : Error("chain has " + std::to_string(closed_classes) +
            " closed classes; stationary distribution is not unique"),
      closed_classes_(closed_classes) {}

RejectionBudgetExceeded::RejectionBudgetExceeded(std::size_t draws)
    : Error("no admissible configuration after " + std::to_string(draws) +
            " draws"),
      draws_(draws) {}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void DeviceParams::validate() const {
  require(finite(alpha) && alpha > 0.0, "device alpha must be positive");
  require(finite(beta) && beta > 0.0, "device beta must be positive");
  require(finite(psi_hi) && finite(psi_lo) && psi_hi > psi_lo,
          "device psi_hi must exceed psi_lo");
  require(finite(lambda) && lambda > 0.0, "device lambda must be positive");
  require(finite(delta) && delta >= 0.0 && delta < 1.0,
          "device delta must lie in [0,1)");
  require(finite(data_size) && data_size > 0.0,
          "device data_size must be positive");
}

void ServerParams::validate() const {
  require(finite(alpha) && alpha > 0.0, "server alpha must be positive");
  require(finite(beta) && beta > 0.0, "server beta must be positive");
  require(finite(rho) && rho > 0.0, "server rho must be positive");
  require(finite(w) && w > 0.0, "server w must be positive");
  require(finite(r) && r > 0.0, "server r must be positive");
  require(finite(t), "server t must be finite");
  require(finite(k) && k >= 0.0, "server k must be nonnegative");
  require(finite(a) && a >= 0.0, "server a must be nonnegative");
}

std::size_t GameConfig::num_outcomes() const {
  return felce::num_outcomes(devices.size());
}

void GameConfig::validate() const {
  require(!devices.empty(), "configuration needs at least one device");
  if (devices.size() > kMaxDevices) {
    throw CapExceeded(std::to_string(devices.size()) + " devices exceeds the cap of " +
                      std::to_string(kMaxDevices));
  }
  server.validate();
  for (const auto& d : devices) d.validate();
}

std::size_t num_outcomes(std::size_t num_devices) {
  if (num_devices + 1 >= 63) throw CapExceeded("too many devices to index");
  return std::size_t{1} << (num_devices + 1);
}

std::size_t encode_outcome(Action server, std::span<const Action> devices) {
  const std::size_t n = devices.size();
  std::size_t bits = static_cast<std::size_t>(server) << n;
  for (std::size_t i = 0; i < n; ++i) {
    bits |= static_cast<std::size_t>(devices[i]) << (n - 1 - i);
  }
  return bits + 1;
}

std::size_t encode_outcome(const GameConfig& cfg, Action server,
                           std::span<const Action> devices) {
  if (devices.size() != cfg.num_devices()) {
    throw DimensionMismatch("expected " + std::to_string(cfg.num_devices()) +
                            " device actions, got " +
                            std::to_string(devices.size()));
  }
  return encode_outcome(server, devices);
}

JointAction decode_outcome(std::size_t index, std::size_t num_devices) {
  const std::size_t eta = num_outcomes(num_devices);
  if (index < 1 || index > eta) {
    throw DimensionMismatch("outcome index " + std::to_string(index) +
                            " outside [1, " + std::to_string(eta) + "]");
  }
  JointAction out;
  out.server = server_action_at(index, num_devices);
  out.devices.resize(num_devices);
  for (std::size_t i = 0; i < num_devices; ++i) {
    out.devices[i] = device_action_at(index, num_devices, i);
  }
  return out;
}

Action server_action_at(std::size_t index, std::size_t num_devices) {
  return static_cast<Action>(((index - 1) >> num_devices) & 1U);
}

Action device_action_at(std::size_t index, std::size_t num_devices,
                        std::size_t device) {
  return static_cast<Action>(((index - 1) >> (num_devices - 1 - device)) & 1U);
}

std::string outcome_label(std::size_t index, std::size_t num_devices) {
  std::string s;
  s.reserve(num_devices + 1);
  s.push_back(to_char(server_action_at(index, num_devices)));
  for (std::size_t i = 0; i < num_devices; ++i) {
    s.push_back(to_char(device_action_at(index, num_devices, i)));
  }
  return s;
}

double model_error(std::span<const Action> devices, const GameConfig& cfg) {
  if (devices.size() != cfg.num_devices()) {
    throw DimensionMismatch("device action count does not match config");
  }
  double effective = 0.0;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const auto& d = cfg.devices[i];
    effective += devices[i] == Action::C ? d.data_size : d.delta * d.data_size;
  }
  const auto& s = cfg.server;
  if (s.k == 0.0) return 0.0;
  if (effective <= 0.0) {
    if (s.a > 0.0) throw DegenerateError("effective training data is zero");
    return s.k;
  }
  return s.k * std::pow(effective, -s.a);
}

double LogisticPowerLawProfit::profit(std::span<const Action> devices,
                                      const GameConfig& cfg) const {
  const auto& s = cfg.server;
  return s.w / (1.0 + std::exp(s.r * model_error(devices, cfg) - s.t));
}

const ProfitModel& default_profit_model() {
  static const LogisticPowerLawProfit model;
  return model;
}

double server_profit(std::span<const Action> devices, const GameConfig& cfg) {
  return default_profit_model().profit(devices, cfg);
}

double device_utility(std::size_t device, Action server, Action own,
                      const GameConfig& cfg) {
  const auto& d = cfg.devices.at(device);
  const double psi = server == Action::C ? d.psi_hi : d.psi_lo;
  const double income = own == Action::C ? 0.0 : d.defection_income();
  return d.alpha * psi + d.beta * income;
}

double server_utility(Action server, std::span<const Action> devices,
                      const GameConfig& cfg, const ProfitModel& profit) {
  const auto& s = cfg.server;
  const double cost = server == Action::C ? s.rho : 0.0;
  return s.alpha * profit.profit(devices, cfg) - s.beta * cost;
}

double UtilityTable::device_sum(std::size_t slot) const {
  double sum = 0.0;
  for (const auto& u : devices) sum += u[slot];
  return sum;
}

UtilityTable build_utility_table(const GameConfig& cfg,
                                 const ProfitModel& profit,
                                 std::size_t max_devices) {
  const std::size_t n = cfg.num_devices();
  if (n > max_devices) {
    throw CapExceeded(std::to_string(n) + " devices exceeds the cap of " +
                      std::to_string(max_devices));
  }
  if (n == 0) throw ConfigError("configuration needs at least one device");
  const std::size_t eta = num_outcomes(n);
  const std::size_t half = eta / 2;

  UtilityTable table;
  table.server.resize(eta);
  table.devices.assign(n, std::vector<double>(eta));

  // Profit depends on device actions only, so evaluate it once per profile.
  std::vector<Action> profile(n);
  for (std::size_t slot = 0; slot < half; ++slot) {
    const std::size_t j = slot + 1;
    for (std::size_t i = 0; i < n; ++i) profile[i] = device_action_at(j, n, i);
    const double phi = profit.profit(profile, cfg);
    table.server[slot] = cfg.server.alpha * phi - cfg.server.beta * cfg.server.rho;
    table.server[slot + half] = cfg.server.alpha * phi;
    for (std::size_t i = 0; i < n; ++i) {
      table.devices[i][slot] = device_utility(i, Action::C, profile[i], cfg);
      table.devices[i][slot + half] = device_utility(i, Action::D, profile[i], cfg);
    }
  }
  return table;
}

bool ViabilityReport::viable() const {
  return server && std::all_of(devices.begin(), devices.end(),
                               [](bool ok) { return ok; });
}

ViabilityReport check_viability(const GameConfig& cfg,
                                const ProfitModel& profit) {
  const std::size_t n = cfg.num_devices();
  ViabilityReport report;
  const std::vector<Action> all_c(n, Action::C);
  const std::vector<Action> all_d(n, Action::D);
  report.phi_max = profit.profit(all_c, cfg);
  report.phi_min = profit.profit(all_d, cfg);
  const auto& s = cfg.server;
  report.server = s.alpha * (report.phi_max - report.phi_min) > s.beta * s.rho;
  report.devices.reserve(n);
  for (const auto& d : cfg.devices) {
    report.devices.push_back(d.alpha * (d.psi_hi - d.psi_lo) >
                             d.beta * d.defection_income());
  }
  return report;
}

bool verify_defection_dominance(const UtilityTable& table) {
  const std::size_t n = table.num_devices();
  const std::size_t eta = table.num_outcomes();
  const std::size_t server_bit = std::size_t{1} << n;
  for (std::size_t bits = 0; bits < eta; ++bits) {
    if ((bits & server_bit) == 0 &&
        !(table.server[bits | server_bit] > table.server[bits])) {
      return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t device_bit = std::size_t{1} << (n - 1 - i);
      if ((bits & device_bit) == 0 &&
          !(table.devices[i][bits | device_bit] > table.devices[i][bits])) {
        return false;
      }
    }
  }
  return true;
}

bool verify_defection_dominance(const GameConfig& cfg) {
  return verify_defection_dominance(build_utility_table(cfg));
}

}  // namespace felce

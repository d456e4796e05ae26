#include "felce/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "felce/csv.hpp"
#include "felce/errors.hpp"

namespace felce {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string agent_name(const ServerAgent& agent) {
  return std::visit(overloaded{
                        [](const CollectiveExtortion&) { return std::string("CE"); },
                        [](const AllCooperate&) { return std::string("ALLC"); },
                        [](const AllDefect&) { return std::string("ALLD"); },
                        [](const TitForTat&) { return std::string("TFT"); },
                        [](const WinStayLoseShift&) { return std::string("WSLS"); },
                    },
                    agent);
}

ServerMove server_act(const ServerAgent& agent, std::optional<std::size_t> previous,
                      const UtilityTable& table, Rng& rng) {
  const std::size_t n = table.num_devices();
  const double coop_prob = std::visit(
      overloaded{
          [&](const CollectiveExtortion& ce) {
            return previous ? ce.strategy.after(*previous) : ce.prior;
          },
          [](const AllCooperate&) { return 1.0; },
          [](const AllDefect&) { return 0.0; },
          [&](const TitForTat& tft) {
            if (!previous) return 1.0;
            if (tft.focal >= n) throw ConfigError("TFT focal device out of range");
            return device_action_at(*previous, n, tft.focal) == Action::C ? 1.0 : 0.0;
          },
          [&](const WinStayLoseShift& wsls) {
            if (!previous) return 1.0;
            const double threshold = wsls.threshold.value_or(table.server[0]);
            const Action last = server_action_at(*previous, n);
            const bool stay = table.server[*previous - 1] >= threshold;
            const Action next = stay ? last : (last == Action::C ? Action::D : Action::C);
            return next == Action::C ? 1.0 : 0.0;
          },
      },
      agent);
  const double draw = uniform01(rng);
  return {draw < coop_prob ? Action::C : Action::D, coop_prob};
}

Payoffs one_step_payoffs(const GameConfig& cfg, const UtilityTable& table,
                         std::size_t device, double server_coop_prob, double chi,
                         const PayoffMode& mode) {
  if (!(server_coop_prob >= 0.0 && server_coop_prob <= 1.0)) {
    throw ConfigError("server cooperation probability must lie in [0,1]");
  }
  const double p = server_coop_prob;
  return std::visit(
      overloaded{
          [&](const ImmediatePayoff&) {
            const double u_cc = device_utility(device, Action::C, Action::C, cfg);
            const double u_dc = device_utility(device, Action::D, Action::C, cfg);
            const double u_cd = device_utility(device, Action::C, Action::D, cfg);
            const double u_dd = device_utility(device, Action::D, Action::D, cfg);
            Payoffs w{p * u_cc + (1.0 - p) * u_dc, p * u_cd + (1.0 - p) * u_dd};
            if (w.cooperate < 0.0 || !(w.defect > 0.0)) {
              throw NonPositivePayoff("immediate payoffs must be positive");
            }
            return w;
          },
          [&](const ExtortionPayoff& ext) {
            const ConditionalPayoffs e = std::visit(
                [&](const auto& devices_mode) {
                  return theoretical_conditional_payoffs(table, device, chi, devices_mode);
                },
                ext.devices);
            if (!(e.cc > 0.0 && e.dc > 0.0 && e.cd > 0.0 && e.dd > 0.0)) {
              throw NonPositivePayoff(
                  "extortion-implied conditional payoffs must be positive for device " +
                  std::to_string(device + 1));
            }
            return Payoffs{p * e.cc + (1.0 - p) * e.dc, p * e.cd + (1.0 - p) * e.dd};
          },
      },
      mode);
}

double evolve_device(double q, double w_cooperate, double w_defect) {
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("q must lie in [0,1]");
  if (w_cooperate < 0.0 || w_defect < 0.0) {
    throw NonPositivePayoff("expected payoffs must be nonnegative");
  }
  const double numerator = q * w_cooperate;
  const double total = numerator + (1.0 - q) * w_defect;
  if (!(total > 0.0)) throw NonPositivePayoff("total expected payoff must be positive");
  return numerator / total;
}

std::vector<double> SimulationTrace::q_series(std::size_t device) const {
  std::vector<double> out;
  out.reserve(rounds.size());
  for (const auto& r : rounds) out.push_back(r.q.at(device));
  return out;
}

SimulationTrace simulate(const GameConfig& cfg, const UtilityTable& table,
                         const ServerAgent& agent, std::span<const double> q0,
                         const SimulationOptions& options) {
  const std::size_t n = cfg.num_devices();
  if (options.rounds < 1) throw ConfigError("rounds must be at least 1");
  if (q0.size() != n) throw DimensionMismatch("one initial q per device is required");
  if (table.num_devices() != n) throw DimensionMismatch("table does not match config");
  for (double q : q0) {
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("initial q must lie in [0,1]");
  }

  const auto* ce = std::get_if<CollectiveExtortion>(&agent);
  const PayoffMode mode = options.payoff.value_or(
      ce ? PayoffMode{ExtortionPayoff{}} : PayoffMode{ImmediatePayoff{}});
  if (std::holds_alternative<ExtortionPayoff>(mode) && ce == nullptr) {
    throw ConfigError("extortion payoff mode requires a CE server agent");
  }
  const double chi = ce ? ce->strategy.chi : 1.0;

  Rng rng(options.seed);
  SimulationTrace trace;
  trace.num_devices = n;
  trace.rounds.reserve(options.rounds);

  std::vector<double> q(q0.begin(), q0.end());
  std::vector<Action> actions(n);
  std::optional<std::size_t> previous;
  std::size_t server_coops = 0;

  for (std::size_t t = 0; t < options.rounds; ++t) {
    const ServerMove move = server_act(agent, previous, table, rng);
    for (std::size_t i = 0; i < n; ++i) {
      actions[i] = uniform01(rng) < q[i] ? Action::C : Action::D;
    }
    const std::size_t j = encode_outcome(move.action, actions);

    const double seen_prob =
        options.empirical_server_estimate
            ? (1.0 + static_cast<double>(server_coops)) / (2.0 + static_cast<double>(t))
            : move.coop_prob;

    RoundRecord rec;
    rec.round = t;
    rec.outcome = j;
    rec.server_action = move.action;
    rec.server_coop_prob = move.coop_prob;
    rec.server_utility = table.server[j - 1];
    rec.device_utilities.resize(n);
    rec.q = q;
    rec.w_cooperate.resize(n);
    rec.w_defect.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      rec.device_utilities[i] = table.devices[i][j - 1];
      const Payoffs w = one_step_payoffs(cfg, table, i, seen_prob, chi, mode);
      rec.w_cooperate[i] = w.cooperate;
      rec.w_defect[i] = w.defect;
      q[i] = evolve_device(q[i], w.cooperate, w.defect);
    }
    trace.rounds.push_back(std::move(rec));

    if (move.action == Action::C) ++server_coops;
    previous = j;
  }
  return trace;
}

SimulationTrace simulate(const GameConfig& cfg, const ServerAgent& agent,
                         std::span<const double> q0, const SimulationOptions& options) {
  return simulate(cfg, build_utility_table(cfg), agent, q0, options);
}

void write_trace_csv(const SimulationTrace& trace, std::ostream& out) {
  CsvWriter csv(out);
  const std::size_t n = trace.num_devices;
  std::vector<std::string> header{"t", "outcome_index", "server_action",
                                  "server_coop_prob", "u_s"};
  for (std::size_t i = 1; i <= n; ++i) header.push_back("u_" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i) header.push_back("q_" + std::to_string(i));
  header.emplace_back("W_C_1");
  header.emplace_back("W_D_1");
  csv.header(header);
  for (const auto& r : trace.rounds) {
    csv.field(r.round).field(r.outcome);
    csv.field(std::string_view(r.server_action == Action::C ? "C" : "D"));
    csv.field(r.server_coop_prob).field(r.server_utility);
    for (double u : r.device_utilities) csv.field(u);
    for (double q : r.q) csv.field(q);
    csv.field(r.w_cooperate.at(0)).field(r.w_defect.at(0));
    csv.end_row();
  }
}

namespace {

std::vector<double> trailing_mean(const std::vector<double>& x, std::size_t window) {
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    sum += x[t];
    if (t >= window) sum -= x[t - window];
    out[t] = sum / static_cast<double>(std::min(t + 1, window));
  }
  return out;
}

}  // namespace

RelativeUtility relative_utility(const SimulationTrace& trace,
                                 const UtilityTable& table, std::size_t window) {
  if (window < 1) throw ConfigError("window must be at least 1");
  const double us1 = table.server[0];
  if (us1 == 0.0) throw ConfigError("server all-cooperation utility is zero");
  std::vector<double> server;
  server.reserve(trace.rounds.size());
  for (const auto& r : trace.rounds) server.push_back(r.server_utility / us1);

  RelativeUtility out;
  out.server = trailing_mean(server, window);
  for (std::size_t i = 0; i < trace.num_devices; ++i) {
    const double ui1 = table.devices.at(i)[0];
    if (ui1 == 0.0) throw ConfigError("device all-cooperation utility is zero");
    std::vector<double> series;
    series.reserve(trace.rounds.size());
    for (const auto& r : trace.rounds) series.push_back(r.device_utilities[i] / ui1);
    out.devices.push_back(trailing_mean(series, window));
  }
  return out;
}

std::optional<std::size_t> first_round_reaching(std::span<const double> series,
                                                double threshold, bool at_most) {
  for (std::size_t t = 0; t < series.size(); ++t) {
    if (at_most ? series[t] <= threshold : series[t] >= threshold) return t;
  }
  return std::nullopt;
}

}  // namespace felce

// felce: command-line front end for the collective-extortion library.
//
// Exit status: 0 success, 1 infeasible (or identity check failed),
// 2 usage or configuration error, 3 any other runtime failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "felce/ce_strategy.hpp"
#include "felce/config_io.hpp"
#include "felce/csv.hpp"
#include "felce/dynamics.hpp"
#include "felce/errors.hpp"
#include "felce/experiment.hpp"
#include "felce/markov.hpp"
#include "felce/sampler.hpp"

namespace {

using namespace felce;

enum Exit { kOk = 0, kInfeasible = 1, kUsage = 2, kFailure = 3 };

void report_error(std::string_view kind, std::string_view message) {
  nlohmann::json j{{"error", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

struct GameSource {
  std::string config_path;
  std::uint64_t seed = kDefaultSeed;
  std::size_t devices = 8;
  std::vector<double> sample_chis{1.0, 2.0, 3.0, 4.0};
};

void add_source_options(CLI::App* cmd, GameSource& src) {
  cmd->add_option("--config", src.config_path, "INI game config; sampled from --seed if absent")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", src.seed, "Base seed")->capture_default_str();
  cmd->add_option("--devices", src.devices, "Device count for sampled configs")
      ->check(CLI::Range(1, static_cast<int>(kMaxDevices)))
      ->capture_default_str();
  cmd->add_option("--sample-chi", src.sample_chis,
                  "Extortion factors a sampled config must admit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

PreparedGame load_game(const GameSource& src) {
  std::optional<GameConfig> cfg;
  if (!src.config_path.empty()) cfg = load_config(src.config_path);
  const ParameterSampler sampler = ParameterSampler::with_devices(src.devices);
  return prepare_game(cfg, sampler, src.sample_chis, src.seed);
}

// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

const GammaInterval* preferred_interval(const FeasibilityReport& report) {
  for (const auto& iv : report.gamma_intervals) {
    if (iv.hi > 0.0) return &iv;
  }
  return report.gamma_intervals.empty() ? nullptr : &report.gamma_intervals.front();
}

// --- derive ---------------------------------------------------------------

struct DeriveArgs {
  GameSource src;
  double chi = 1.0;
  std::optional<double> gamma;
};

int run_derive(const DeriveArgs& args) {
  const PreparedGame game = load_game(args.src);
  const CETerms terms = ce_terms(game.table);
  const FeasibilityReport report = feasible_region(game.table, args.chi);
  const GammaInterval* iv = preferred_interval(report);

  std::optional<CEStrategy> strategy;
  std::optional<double> gamma = args.gamma;
  if (!gamma && iv) gamma = iv->midpoint();
  std::string failure;
  if (gamma) {
    try {
      strategy = derive_ce_strategy(game.table, args.chi, *gamma);
    } catch (const InfeasiblePoint& e) {
      failure = e.what();
    }
  } else {
    failure = "no gamma admits a valid strategy for chi " + format_double(args.chi);
  }

  std::ostringstream s;
  CsvWriter csv(s);
  csv.header({"j", "A_j", "B_j", "p_j"});
  for (std::size_t slot = 0; slot < terms.A.size(); ++slot) {
    csv.field(slot + 1).field(terms.A[slot]).field(terms.B[slot]);
    if (strategy) {
      csv.field(strategy->p[slot]);
    } else {
      csv.field(std::string_view("NA"));
    }
    csv.end_row();
  }
  s << "\n";
  csv.header({"chi", "gamma", "gamma_min", "gamma_max", "binding_index"});
  csv.field(args.chi);
  if (gamma) {
    csv.field(*gamma);
  } else {
    csv.field(std::string_view("NA"));
  }
  if (iv) {
    csv.field(iv->lo).field(iv->hi).field(iv->binding_index);
  } else {
    csv.field(std::string_view("NA")).field(std::string_view("NA")).field(std::string_view("NA"));
  }
  csv.end_row();
  std::cout << s.str();

  if (!strategy) {
    report_error("infeasible", failure);
    return kInfeasible;
  }
  return kOk;
}

// --- verify ---------------------------------------------------------------

struct VerifyArgs {
  GameSource src;
  double chi = 1.0;
  std::optional<double> gamma;
  std::vector<double> q;
  bool full = false;
  double tol = 1e-8;
};

int run_verify(const VerifyArgs& args) {
  const PreparedGame game = load_game(args.src);
  const std::size_t n = game.config.num_devices();
  const CEStrategy strategy = ce_strategy_for(game.table, args.chi, args.gamma);

  std::vector<DeviceStrategy> devices;
  if (!args.q.empty()) {
    if (args.q.size() != 1 && args.q.size() != n) {
      throw DimensionMismatch("--q takes one value or one per device");
    }
    for (std::size_t i = 0; i < n; ++i) {
      devices.push_back(DeviceStrategy::scalar(args.q.size() == 1 ? args.q[0] : args.q[i]));
    }
  } else {
    Rng rng(derive_seed(args.src.seed, {2}));
    for (std::size_t i = 0; i < n; ++i) {
      if (args.full) {
        std::vector<double> q(game.table.num_outcomes());
        for (double& x : q) x = uniform01(rng);
        devices.push_back(DeviceStrategy::full(std::move(q)));
      } else {
        devices.push_back(DeviceStrategy::scalar(uniform01(rng)));
      }
    }
  }

  IdentityOptions opts;
  opts.tolerance = args.tol;
  const IdentityCheck check = verify_ce_identity(game.table, strategy, devices, opts);

  std::ostringstream s;
  CsvWriter csv(s);
  std::vector<std::string> header{"E_s"};
  for (std::size_t i = 1; i <= n; ++i) header.push_back("E_" + std::to_string(i));
  header.push_back("residual");
  csv.header(header);
  csv.field(check.expected.server);
  for (double e : check.expected.devices) csv.field(e);
  csv.field(check.residual);
  csv.end_row();
  std::cout << s.str();

  if (!check.within_tolerance) {
    report_error("identity", "residual " + format_double(check.residual) + " exceeds tolerance " +
                           format_double(args.tol));
    return kInfeasible;
  }
  return kOk;
}

// --- simulate -------------------------------------------------------------

struct SimulateArgs {
  GameSource src;
  std::string agent = "CE";
  double chi = 1.0;
  std::optional<double> gamma;
  std::vector<double> q0{0.5};
  std::size_t rounds = 200;
  std::size_t focal = 1;
  std::string payoff = "auto";
  std::string out;
};

int run_simulate(const SimulateArgs& args) {
  const PreparedGame game = load_game(args.src);
  const std::size_t n = game.config.num_devices();
  const auto kind = parse_agent_kind(args.agent);
  if (!kind) throw ConfigError("unknown agent " + args.agent);
  if (args.focal < 1 || args.focal > n) throw ConfigError("--focal out of range");
  if (args.q0.size() != 1 && args.q0.size() != n) {
    throw DimensionMismatch("--q0 takes one value or one per device");
  }
  std::vector<double> q0(n);
  for (std::size_t i = 0; i < n; ++i) q0[i] = args.q0.size() == 1 ? args.q0[0] : args.q0[i];

  const ServerAgent agent = make_agent(*kind, game.table, args.chi, args.gamma, args.focal - 1);
  SimulationOptions opts;
  opts.rounds = args.rounds;
  opts.seed = derive_seed(args.src.seed, {1, 0});
  if (args.payoff == "immediate") {
    opts.payoff = ImmediatePayoff{};
  } else if (args.payoff == "extortion") {
    opts.payoff = ExtortionPayoff{};
  } else if (args.payoff != "auto") {
    throw ConfigError("unknown payoff mode " + args.payoff);
  }
  const SimulationTrace trace = simulate(game.config, game.table, agent, q0, opts);
  std::ostringstream s;
  write_trace_csv(trace, s);
  emit(args.out, s.str());
  return kOk;
}

// --- experiment -----------------------------------------------------------

struct ExperimentArgs {
  GameSource src;
  std::string scenario = "fig2";
  std::vector<double> q0;
  std::vector<double> chi;
  std::optional<double> gamma;
  std::vector<std::string> agents;
  std::size_t rounds = 200;
  std::size_t replicates = 20;
  std::size_t focal = 1;
  std::size_t window = 20;
  unsigned threads = 0;
  std::string out;
};

int run_experiment_cmd(const ExperimentArgs& args) {
  ExperimentSpec spec;
  const auto scenario = parse_scenario(args.scenario);
  if (!scenario) throw ConfigError("unknown scenario " + args.scenario);
  spec.scenario = *scenario;
  spec.q0_values = args.q0;
  spec.chi_values = args.chi;
  spec.gamma = args.gamma;
  for (const auto& a : args.agents) {
    const auto kind = parse_agent_kind(a);
    if (!kind) throw ConfigError("unknown agent " + a);
    spec.agents.push_back(*kind);
  }
  spec.rounds = args.rounds;
  spec.replicates = args.replicates;
  spec.seed = args.src.seed;
  if (args.focal < 1) throw ConfigError("--focal is 1-based");
  spec.focal_device = args.focal - 1;
  spec.stable_window = args.window;
  spec.threads = args.threads;
  spec.sampler = ParameterSampler::with_devices(args.src.devices);
  spec.sample_chis = args.src.sample_chis;
  if (!args.src.config_path.empty()) spec.config = load_config(args.src.config_path);

  std::string out = args.out;
  if (out.empty()) {
    if (const char* env = std::getenv("FELCE_OUT_DIR"); env && *env) out = env;
  }
  if (out.empty()) throw ConfigError("--out is required when FELCE_OUT_DIR is unset");
  spec.output_dir = out;

  const ExperimentOutcome outcome = run_experiment(spec);
  for (const auto& f : outcome.files) std::cout << f.string() << "\n";
  return kOk;
}

// --- check / sample -------------------------------------------------------

int run_check(const GameSource& src) {
  const PreparedGame game = load_game(src);
  const ViabilityReport via = check_viability(game.config);
  const bool dominance = verify_defection_dominance(game.table);

  std::ostringstream s;
  CsvWriter csv(s);
  csv.header({"player", "viable", "defection_dominant"});
  csv.field(std::string_view("server")).field(via.server ? 1 : 0).field(dominance ? 1 : 0);
  csv.end_row();
  for (std::size_t i = 0; i < via.devices.size(); ++i) {
    csv.field("device_" + std::to_string(i + 1))
        .field(via.devices[i] ? 1 : 0)
        .field(dominance ? 1 : 0);
    csv.end_row();
  }
  s << "\n";
  csv.header({"phi_max", "phi_min", "viable", "defection_dominant"});
  csv.field(via.phi_max).field(via.phi_min).field(via.viable() ? 1 : 0).field(dominance ? 1 : 0);
  csv.end_row();
  std::cout << s.str();
  return via.viable() && dominance ? kOk : kInfeasible;
}

int run_sample(const GameSource& src, const std::string& out) {
  const PreparedGame game = load_game(src);
  emit(out, format_config(game.config));
  return kOk;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Collective extortion in federated edge learning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "felce 0.1.0");

  DeriveArgs derive;
  auto* derive_cmd = app.add_subcommand("derive", "CE strategy vector and feasibility report");
  add_source_options(derive_cmd, derive.src);
  derive_cmd->add_option("--chi", derive.chi, "Extortion factor (>= 1)")->capture_default_str();
  derive_cmd->add_option("--gamma", derive.gamma, "Scale; feasible-interval midpoint if absent");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Check the extortion identity on one instance");
  add_source_options(verify_cmd, verify.src);
  verify_cmd->add_option("--chi", verify.chi, "Extortion factor (>= 1)")->capture_default_str();
  verify_cmd->add_option("--gamma", verify.gamma, "Scale; feasible-interval midpoint if absent");
  verify_cmd->add_option("--q", verify.q, "Device cooperation probabilities (one or per device)")
      ->check(CLI::Range(0.0, 1.0));
  verify_cmd->add_flag("--full", verify.full,
                       "Random memory-one device strategies instead of random scalars");
  verify_cmd->add_option("--tol", verify.tol, "Relative residual tolerance")->capture_default_str();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Single evolutionary trace as CSV");
  add_source_options(sim_cmd, sim.src);
  sim_cmd->add_option("--agent", sim.agent, "CE, ALLC, ALLD, TFT or WSLS")->capture_default_str();
  sim_cmd->add_option("--chi", sim.chi, "Extortion factor (>= 1)")->capture_default_str();
  sim_cmd->add_option("--gamma", sim.gamma, "Scale; feasible-interval midpoint if absent");
  sim_cmd->add_option("--q0", sim.q0, "Initial cooperation probabilities")
      ->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--rounds", sim.rounds, "Rounds")->capture_default_str();
  sim_cmd->add_option("--focal", sim.focal, "Device TFT imitates (1-based)")->capture_default_str();
  sim_cmd->add_option("--payoff", sim.payoff, "auto, extortion or immediate")->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "Output CSV; stdout if absent");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Replicated figure data");
  add_source_options(exp_cmd, exp.src);
  exp_cmd->add_option("--scenario", exp.scenario, "fig2, fig3, fig4, fig5_6, fig7_8 or custom")
      ->capture_default_str();
  exp_cmd->add_option("--q0", exp.q0, "Initial cooperation probabilities")
      ->check(CLI::Range(0.0, 1.0));
  exp_cmd->add_option("--chi", exp.chi, "Extortion factors");
  exp_cmd->add_option("--gamma", exp.gamma, "Scale; feasible-interval midpoint if absent");
  exp_cmd->add_option("--agent", exp.agents, "Agents for the custom scenario");
  exp_cmd->add_option("--rounds", exp.rounds, "Rounds")->capture_default_str();
  exp_cmd->add_option("--replicates", exp.replicates, "Replicates")->capture_default_str();
  exp_cmd->add_option("--focal", exp.focal, "Reported device (1-based)")->capture_default_str();
  exp_cmd->add_option("--window", exp.window, "Rounds averaged for stable values")
      ->capture_default_str();
  exp_cmd->add_option("--threads", exp.threads, "Worker threads; 0 uses all cores");
  exp_cmd->add_option("--out", exp.out, "Output directory (default $FELCE_OUT_DIR)");

  GameSource check_src;
  auto* check_cmd = app.add_subcommand("check", "Viability and defection-dominance report");
  add_source_options(check_cmd, check_src);

  GameSource sample_src;
  std::string sample_out;
  auto* sample_cmd = app.add_subcommand("sample", "Write a sampled config as INI");
  add_source_options(sample_cmd, sample_src);
  sample_cmd->add_option("--out", sample_out, "Output file; stdout if absent");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kUsage;
  }

  try {
    if (*derive_cmd) return run_derive(derive);
    if (*verify_cmd) return run_verify(verify);
    if (*sim_cmd) return run_simulate(sim);
    if (*exp_cmd) return run_experiment_cmd(exp);
    if (*check_cmd) return run_check(check_src);
    if (*sample_cmd) return run_sample(sample_src, sample_out);
  } catch (const InfeasibleChi& e) {
    report_error("infeasible", e.what());
    return kInfeasible;
  } catch (const InfeasiblePoint& e) {
    report_error("infeasible", e.what());
    return kInfeasible;
  } catch (const RejectionBudgetExceeded& e) {
    report_error("infeasible", e.what());
    return kInfeasible;
  } catch (const ConfigError& e) {
    report_error("usage", e.what());
    return kUsage;
  } catch (const GammaZero& e) {
    report_error("usage", e.what());
    return kUsage;
  } catch (const DimensionMismatch& e) {
    report_error("usage", e.what());
    return kUsage;
  } catch (const CapExceeded& e) {
    report_error("usage", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    report_error("failure", e.what());
    return kFailure;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) { return dispatch(argc, argv); }

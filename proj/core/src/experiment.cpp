#include "felce/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "felce/ce_strategy.hpp"
#include "felce/config_io.hpp"
#include "felce/csv.hpp"
#include "felce/errors.hpp"

namespace felce {

namespace {

constexpr double kConvergenceThreshold = 0.99;

struct ScenarioInfo {
  Scenario id;
  const char* name;
};

constexpr ScenarioInfo kScenarios[] = {
    {Scenario::kFig2, "fig2"},      {Scenario::kFig3, "fig3"},
    {Scenario::kFig4, "fig4"},      {Scenario::kFig5_6, "fig5_6"},
    {Scenario::kFig7_8, "fig7_8"},  {Scenario::kCustom, "custom"},
};

constexpr std::pair<AgentKind, const char*> kAgentNames[] = {
    {AgentKind::kCE, "CE"},   {AgentKind::kALLC, "ALLC"}, {AgentKind::kALLD, "ALLD"},
    {AgentKind::kTFT, "TFT"}, {AgentKind::kWSLS, "WSLS"},
};

const std::vector<AgentKind> kAllAgents{AgentKind::kCE, AgentKind::kALLC, AgentKind::kALLD,
                                        AgentKind::kTFT, AgentKind::kWSLS};
const std::vector<AgentKind> kBaselines{AgentKind::kALLC, AgentKind::kALLD, AgentKind::kTFT,
                                        AgentKind::kWSLS};

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  unsigned workers = threads != 0 ? threads : std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void accumulate(std::vector<double>& sum, const std::vector<double>& x) {
  if (sum.empty()) sum.assign(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) sum[t] += x[t];
}

void scale(std::vector<double>& v, double factor) {
  for (double& x : v) x *= factor;
}

// Tracks files so a failed run can remove what it wrote.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(f, ec);
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    files_.push_back(path);
    out << content;
    if (!out) throw Error("failed writing " + path.string());
  }

  void commit() { committed_ = true; }
  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  bool committed_ = false;
};

std::string label(double x) { return format_double(x); }

}  // namespace

std::optional<Scenario> parse_scenario(std::string_view name) {
  for (const auto& s : kScenarios) {
    if (name == s.name) return s.id;
  }
  return std::nullopt;
}

std::string scenario_name(Scenario scenario) {
  for (const auto& s : kScenarios) {
    if (s.id == scenario) return s.name;
  }
  return "unknown";
}

std::optional<AgentKind> parse_agent_kind(std::string_view name) {
  for (const auto& [kind, text] : kAgentNames) {
    if (name == text) return kind;
  }
  return std::nullopt;
}

std::string agent_kind_name(AgentKind kind) {
  for (const auto& [k, text] : kAgentNames) {
    if (k == kind) return text;
  }
  return "unknown";
}

AveragedRun run_replicates(const GameConfig& cfg, const UtilityTable& table,
                           const ServerAgent& agent, double q0,
                           const ReplicateOptions& options) {
  if (options.replicates < 1) throw ConfigError("replicates must be at least 1");
  if (options.focal_device >= cfg.num_devices()) {
    throw ConfigError("focal device out of range");
  }
  const std::vector<double> start(cfg.num_devices(), q0);
  std::vector<AveragedRun> runs(options.replicates);
  parallel_for(options.replicates, options.threads, [&](std::size_t r) {
    SimulationOptions sim;
    sim.rounds = options.rounds;
    sim.seed = derive_seed(options.seed, {1, r});
    sim.payoff = options.payoff;
    const SimulationTrace trace = simulate(cfg, table, agent, start, sim);
    const RelativeUtility rel = relative_utility(trace, table, 1);
    AveragedRun& run = runs[r];
    run.focal_q = trace.q_series(options.focal_device);
    run.server_relative = rel.server;
    run.device_relative = rel.devices[options.focal_device];
    run.min_q.reserve(trace.rounds.size());
    for (const auto& rec : trace.rounds) {
      run.min_q.push_back(*std::min_element(rec.q.begin(), rec.q.end()));
    }
  });

  // Summed in replicate order so results do not depend on thread scheduling.
  AveragedRun mean;
  for (const auto& run : runs) {
    accumulate(mean.focal_q, run.focal_q);
    accumulate(mean.server_relative, run.server_relative);
    accumulate(mean.device_relative, run.device_relative);
    accumulate(mean.min_q, run.min_q);
  }
  const double inv = 1.0 / static_cast<double>(options.replicates);
  scale(mean.focal_q, inv);
  scale(mean.server_relative, inv);
  scale(mean.device_relative, inv);
  scale(mean.min_q, inv);
  return mean;
}

double tail_mean(const std::vector<double>& series, std::size_t window) {
  if (series.empty()) throw ConfigError("empty series");
  const std::size_t w = std::clamp<std::size_t>(window, 1, series.size());
  double sum = 0.0;
  for (std::size_t t = series.size() - w; t < series.size(); ++t) sum += series[t];
  return sum / static_cast<double>(w);
}

void ExperimentSpec::validate() const {
  if (rounds < 1) throw ConfigError("rounds must be at least 1");
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (stable_window < 1) throw ConfigError("stable window must be at least 1");
  for (double chi : chi_values) {
    if (!(chi >= 1.0)) throw ConfigError("every chi must be >= 1");
  }
  for (double q : q0_values) {
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("every q0 must lie in [0,1]");
  }
  if (gamma && *gamma == 0.0) throw GammaZero();
}

PreparedGame prepare_game(const std::optional<GameConfig>& config,
                          const ParameterSampler& sampler,
                          std::span<const double> sample_chis, std::uint64_t seed) {
  PreparedGame game;
  if (config) {
    config->validate();
    game.config = *config;
  } else {
    Rng rng(derive_seed(seed, {0}));
    game.sampled = sample_config(sampler, sample_chis, rng);
    game.config = game.sampled->config;
  }
  game.table = build_utility_table(game.config);
  return game;
}

CEStrategy ce_strategy_for(const UtilityTable& table, double chi,
                           std::optional<double> gamma) {
  if (gamma) return derive_ce_strategy(table, chi, *gamma);
  const FeasibilityReport report = feasible_region(table, chi);
  for (const auto& iv : report.gamma_intervals) {
    if (iv.hi > 0.0) return derive_ce_strategy(table, chi, iv.midpoint());
  }
  throw InfeasibleChi(chi);
}

ServerAgent make_agent(AgentKind kind, const UtilityTable& table, double chi,
                       std::optional<double> gamma, std::size_t focal_device) {
  switch (kind) {
    case AgentKind::kCE:
      return CollectiveExtortion{ce_strategy_for(table, chi, gamma)};
    case AgentKind::kALLC:
      return AllCooperate{};
    case AgentKind::kALLD:
      return AllDefect{};
    case AgentKind::kTFT:
      return TitForTat{focal_device};
    case AgentKind::kWSLS:
      return WinStayLoseShift{};
  }
  throw ConfigError("unknown agent");
}

namespace {

struct Runner {
  const ExperimentSpec& spec;
  const PreparedGame& game;
  OutputSet& out;
  nlohmann::json& manifest;

  ReplicateOptions replicate_options() const {
    ReplicateOptions o;
    o.rounds = spec.rounds;
    o.replicates = spec.replicates;
    o.seed = spec.seed;
    o.focal_device = spec.focal_device;
    o.threads = spec.threads;
    return o;
  }

  ServerAgent agent(AgentKind kind, double chi) {
    ServerAgent a = make_agent(kind, game.table, chi, spec.gamma, spec.focal_device);
    if (const auto* ce = std::get_if<CollectiveExtortion>(&a)) {
      const std::string key = label(chi);
      if (!manifest["gamma"].contains(key)) {
        const FeasibilityReport report = feasible_region(game.table, chi);
        nlohmann::json entry;
        entry["gamma"] = ce->strategy.gamma;
        entry["rule"] = spec.gamma ? "explicit" : "midpoint";
        for (const auto& iv : report.gamma_intervals) {
          entry["intervals"].push_back(
              {{"lo", iv.lo}, {"hi", iv.hi}, {"binding_index", iv.binding_index}});
        }
        manifest["gamma"][key] = entry;
      }
    }
    return a;
  }

  AveragedRun run(AgentKind kind, double chi, double q0) {
    return run_replicates(game.config, game.table, agent(kind, chi), q0, replicate_options());
  }

  std::vector<double> q0s(std::vector<double> fallback) const {
    return spec.q0_values.empty() ? fallback : spec.q0_values;
  }
  std::vector<double> chis(std::vector<double> fallback) const {
    return spec.chi_values.empty() ? fallback : spec.chi_values;
  }

  static std::string series_csv(const std::vector<std::string>& columns,
                                const std::vector<const std::vector<double>*>& series) {
    std::ostringstream s;
    CsvWriter csv(s);
    std::vector<std::string> header{"t"};
    header.insert(header.end(), columns.begin(), columns.end());
    csv.header(header);
    const std::size_t rows = series.empty() ? 0 : series.front()->size();
    for (std::size_t t = 0; t < rows; ++t) {
      csv.field(t);
      for (const auto* col : series) csv.field((*col)[t]);
      csv.end_row();
    }
    return s.str();
  }

  void fig2() {
    const double chi = chis({1.0}).front();
    for (double q0 : q0s({0.1, 0.4, 0.6, 0.9})) {
      std::vector<AveragedRun> runs;
      std::vector<std::string> names;
      for (AgentKind kind : kAllAgents) {
        runs.push_back(run(kind, chi, q0));
        names.push_back(agent_kind_name(kind));
      }
      std::vector<const std::vector<double>*> cols;
      for (const auto& r : runs) cols.push_back(&r.focal_q);
      out.write("fig2_q0_" + label(q0) + ".csv", series_csv(names, cols));
    }
  }

  void fig3() {
    const double chi = chis({1.0}).front();
    const double q0 = q0s({0.4}).front();
    std::ostringstream s;
    CsvWriter csv(s);
    csv.header({"strategy", "server_relative", "device_relative"});
    for (AgentKind kind : kAllAgents) {
      const AveragedRun r = run(kind, chi, q0);
      csv.field(std::string_view(agent_kind_name(kind)))
          .field(tail_mean(r.server_relative, spec.stable_window))
          .field(tail_mean(r.device_relative, spec.stable_window));
      csv.end_row();
    }
    out.write("fig3.csv", s.str());
  }

  void fig4() {
    const double chi = chis({1.0}).front();
    std::ostringstream s;
    CsvWriter csv(s);
    csv.header({"q0", "server_relative", "device_relative"});
    for (double q0 : q0s({0.1, 0.4, 0.6, 0.9})) {
      const AveragedRun r = run(AgentKind::kCE, chi, q0);
      csv.field(q0)
          .field(tail_mean(r.server_relative, spec.stable_window))
          .field(tail_mean(r.device_relative, spec.stable_window));
      csv.end_row();
    }
    out.write("fig4.csv", s.str());
  }

  void fig5_6() {
    const double chi = chis({1.0}).front();
    const std::vector<double> q0_list = q0s({0.1, 0.4, 0.6, 0.9});
    for (double q0 : q0_list) {
      const AveragedRun r = run(AgentKind::kCE, chi, q0);
      out.write("fig5_q0_" + label(q0) + ".csv",
                series_csv({"server_relative", "device_relative"},
                           {&r.server_relative, &r.device_relative}));
    }
    const double q0 = spec.q0_values.empty() ? 0.4 : spec.q0_values.front();
    for (AgentKind kind : kBaselines) {
      const AveragedRun r = run(kind, chi, q0);
      out.write("fig6_" + agent_kind_name(kind) + ".csv",
                series_csv({"server_relative", "device_relative"},
                           {&r.server_relative, &r.device_relative}));
    }
  }

  void fig7_8() {
    const double q0 = q0s({0.5}).front();
    const std::vector<double> chi_list = chis({1.0, 2.0, 3.0, 4.0});
    std::vector<AveragedRun> runs;
    std::vector<std::string> names;
    for (double chi : chi_list) {
      runs.push_back(run(AgentKind::kCE, chi, q0));
      names.push_back("chi_" + label(chi));
    }
    std::vector<const std::vector<double>*> cols;
    for (const auto& r : runs) cols.push_back(&r.focal_q);
    out.write("fig7.csv", series_csv(names, cols));

    std::ostringstream s;
    CsvWriter csv(s);
    csv.header({"chi", "gamma", "rounds_to_q_0.99"});
    for (std::size_t c = 0; c < chi_list.size(); ++c) {
      const auto reached = first_round_reaching(runs[c].focal_q, kConvergenceThreshold);
      csv.field(chi_list[c]).field(manifest["gamma"][label(chi_list[c])]["gamma"].get<double>());
      if (reached) {
        csv.field(*reached);
      } else {
        csv.field(std::string_view("NA"));
      }
      csv.end_row();
    }
    out.write("fig7_convergence.csv", s.str());

    for (std::size_t c = 0; c < chi_list.size(); ++c) {
      out.write("fig8_chi_" + label(chi_list[c]) + ".csv",
                series_csv({"server_relative", "device_relative"},
                           {&runs[c].server_relative, &runs[c].device_relative}));
    }
  }

  void custom() {
    const std::vector<AgentKind> agents = spec.agents.empty() ? kAllAgents : spec.agents;
    for (double chi : chis({1.0})) {
      for (double q0 : q0s({0.5})) {
        std::vector<AveragedRun> runs;
        std::vector<std::string> names;
        for (AgentKind kind : agents) {
          runs.push_back(run(kind, chi, q0));
          const std::string n = agent_kind_name(kind);
          names.push_back(n + "_q");
          names.push_back(n + "_server_relative");
          names.push_back(n + "_device_relative");
        }
        std::vector<const std::vector<double>*> cols;
        for (const auto& r : runs) {
          cols.push_back(&r.focal_q);
          cols.push_back(&r.server_relative);
          cols.push_back(&r.device_relative);
        }
        out.write("custom_chi_" + label(chi) + "_q0_" + label(q0) + ".csv",
                  series_csv(names, cols));
      }
    }
  }
};

}  // namespace

ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto started = std::chrono::steady_clock::now();
  if (spec.output_dir.empty()) throw ConfigError("output directory is required");
  std::filesystem::create_directories(spec.output_dir);

  const PreparedGame game = prepare_game(spec.config, spec.sampler, spec.sample_chis, spec.seed);
  if (spec.focal_device >= game.config.num_devices()) {
    throw ConfigError("focal device out of range");
  }

  OutputSet out(spec.output_dir);
  nlohmann::json manifest;
  manifest["scenario"] = scenario_name(spec.scenario);
  manifest["seed"] = spec.seed;
  manifest["rounds"] = spec.rounds;
  manifest["replicates"] = spec.replicates;
  manifest["focal_device"] = spec.focal_device + 1;
  manifest["stable_window"] = spec.stable_window;
  manifest["gamma"] = nlohmann::json::object();
  manifest["config_source"] = game.sampled ? "sampled" : "file";
  if (game.sampled) {
    manifest["sampling"] = {
        {"device_draws", game.sampled->device_draws},
        {"rejected_device_draws", game.sampled->rejected_device_draws},
        {"rejected_configs", game.sampled->rejected_configs},
        {"required_chis", spec.sample_chis},
        {"psi_draws", "psi_hi and psi_lo drawn independently"},
    };
  }
  manifest["averaging"] =
      "relative utility is taken per replicate and round, then averaged across replicates";

  Runner runner{spec, game, out, manifest};
  switch (spec.scenario) {
    case Scenario::kFig2: runner.fig2(); break;
    case Scenario::kFig3: runner.fig3(); break;
    case Scenario::kFig4: runner.fig4(); break;
    case Scenario::kFig5_6: runner.fig5_6(); break;
    case Scenario::kFig7_8: runner.fig7_8(); break;
    case Scenario::kCustom: runner.custom(); break;
  }

  out.write("config.ini", format_config(game.config));
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : out.files()) files.push_back(f.filename().string());
  manifest["files"] = files;
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
  manifest["runtime_seconds"] = elapsed.count();
  const std::string manifest_text = manifest.dump(2) + "\n";
  out.write("manifest.json", manifest_text);
  out.commit();

  ExperimentOutcome outcome;
  outcome.files = out.files();
  outcome.config = game.config;
  outcome.manifest = manifest_text;
  return outcome;
}

}  // namespace felce

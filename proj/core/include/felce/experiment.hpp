#pragma once

// Figure-data experiments: replicated simulations averaged per round and
// written as schema-stable CSV files plus a JSON manifest.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "felce/dynamics.hpp"
#include "felce/game_model.hpp"
#include "felce/sampler.hpp"

namespace felce {

enum class Scenario { kFig2, kFig3, kFig4, kFig5_6, kFig7_8, kCustom };

std::optional<Scenario> parse_scenario(std::string_view name);
std::string scenario_name(Scenario scenario);

enum class AgentKind { kCE, kALLC, kALLD, kTFT, kWSLS };

std::optional<AgentKind> parse_agent_kind(std::string_view name);
std::string agent_kind_name(AgentKind kind);

inline constexpr std::uint64_t kDefaultSeed = 2021;

struct ReplicateOptions {
  std::size_t rounds = 200;
  std::size_t replicates = 20;
  std::uint64_t seed = kDefaultSeed;
  std::size_t focal_device = 0;
  unsigned threads = 0;  // 0: hardware concurrency
  std::optional<PayoffMode> payoff;
};

// Per-round means across replicates. Relative utilities are ratios taken per
// replicate, then averaged.
struct AveragedRun {
  std::vector<double> focal_q;
  std::vector<double> server_relative;
  std::vector<double> device_relative;  // focal device
  std::vector<double> min_q;            // smallest device q, averaged
};

// Every device starts at q0. Replicate r runs with seed derive_seed(seed, {1, r})
// for every agent, so agents are compared on common random numbers.
AveragedRun run_replicates(const GameConfig& cfg, const UtilityTable& table,
                           const ServerAgent& agent, double q0,
                           const ReplicateOptions& options);

// Mean of the last `window` entries.
double tail_mean(const std::vector<double>& series, std::size_t window);

struct ExperimentSpec {
  Scenario scenario = Scenario::kFig2;
  std::vector<double> q0_values;   // empty: scenario default
  std::vector<double> chi_values;  // empty: scenario default
  std::optional<double> gamma;     // explicit gamma; otherwise interval midpoint
  std::vector<AgentKind> agents;   // custom scenario only; empty: all five
  std::size_t rounds = 200;
  std::size_t replicates = 20;
  std::uint64_t seed = kDefaultSeed;
  std::size_t focal_device = 0;
  std::size_t stable_window = 20;
  unsigned threads = 0;
  std::filesystem::path output_dir;
  std::optional<GameConfig> config;  // sampled from `seed` when absent
  ParameterSampler sampler;
  // Chi values every sampled config must admit, so one seed yields the same
  // config for every scenario.
  std::vector<double> sample_chis{1.0, 2.0, 3.0, 4.0};

  void validate() const;
};

struct ExperimentOutcome {
  std::vector<std::filesystem::path> files;  // CSVs, config.ini, manifest.json
  GameConfig config;
  std::string manifest;  // JSON text
};

// Writes into spec.output_dir (created if missing). Files written before a
// failure are removed; manifest.json is written last.
ExperimentOutcome run_experiment(const ExperimentSpec& spec);

// Config and CE setup shared by the experiment runner and the CLI.
struct PreparedGame {
  GameConfig config;
  UtilityTable table;
  std::optional<SampledConfig> sampled;  // present when the config was sampled
};

PreparedGame prepare_game(const std::optional<GameConfig>& config,
                          const ParameterSampler& sampler,
                          std::span<const double> sample_chis, std::uint64_t seed);

// Gamma for chi: explicit value if given, else the positive-interval
// midpoint. Throws InfeasiblePoint-style errors via derive when infeasible.
CEStrategy ce_strategy_for(const UtilityTable& table, double chi,
                           std::optional<double> gamma);

ServerAgent make_agent(AgentKind kind, const UtilityTable& table, double chi,
                       std::optional<double> gamma, std::size_t focal_device);

}  // namespace felce

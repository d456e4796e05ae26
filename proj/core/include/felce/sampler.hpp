#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>

#include "felce/dynamics.hpp"
#include "felce/game_model.hpp"

namespace felce {

// SplitMix64 chain over `path`; independent streams for config sampling and
// each replicate.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

struct UniformRange {
  double lo = 0.0;
  double hi = 1.0;
};

// Device parameters are drawn independently and uniformly; lambda is
// back-solved from the sampled defection income m = lambda (1 - delta).
struct ParameterSampler {
  std::size_t num_devices = 8;
  UniformRange alpha{0.0, 3.0};
  UniformRange beta{0.0, 2.0};
  UniformRange psi_hi{1.0, 2.0};
  UniformRange psi_lo{0.0, 1.0};
  UniformRange defection_income{0.0, 1.0};
  double delta = 0.018;
  double data_size = 750.0;
  ServerParams server{5.0, 2.0, 8.0, 10.0, 10.0, 5.0, 13.2, 0.7};
  // Reject devices whose extortion-implied conditional payoffs are not all
  // positive for every requested chi (the evolutionary update needs them).
  bool require_positive_extortion_payoffs = true;
  std::size_t max_draws = 100000;

  // n devices sharing the eight-device total of 6000 samples, so the server
  // block and its profit extremes are the same for every n.
  static ParameterSampler with_devices(std::size_t n);
};

struct SampledConfig {
  GameConfig config;
  std::size_t device_draws = 0;
  std::size_t rejected_device_draws = 0;
  std::size_t rejected_configs = 0;
};

// Rejection sampling until the config is viable and admits a positive gamma
// interval for each chi. Device-local conditions are rejected per device,
// which leaves the joint conditional distribution unchanged. Throws
// RejectionBudgetExceeded once `max_draws` device draws are spent.
SampledConfig sample_config(const ParameterSampler& sampler,
                            std::span<const double> chis, Rng& rng);

}  // namespace felce

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "felce/dynamics.hpp"
#include "felce/game_model.hpp"
#include "felce/sampler.hpp"

namespace felce::test {

inline ServerParams reference_server() { return ServerParams{5.0, 2.0, 8.0, 10.0, 10.0, 5.0, 13.2, 0.7}; }

inline DeviceParams reference_device(double alpha = 2.5, double psi_hi = 1.8) {
  DeviceParams d;
  d.alpha = alpha;
  d.beta = 1.0;
  d.psi_hi = psi_hi;
  d.psi_lo = 0.5;
  d.delta = 0.018;
  d.lambda = 0.5 / (1.0 - 0.018);
  d.data_size = 750.0;
  return d;
}

// n identical devices sharing 6000 samples under the fixed server block.
inline GameConfig reference_config(std::size_t n = 8) {
  GameConfig cfg;
  cfg.server = reference_server();
  DeviceParams d = reference_device();
  if (n > 0) d.data_size = 6000.0 / static_cast<double>(n);
  cfg.devices.assign(n, d);
  return cfg;
}

// Sampled without the dynamics-only payoff positivity filter.
inline GameConfig sampled_config(std::size_t n, std::uint64_t seed,
                                  std::vector<double> chis = {1.0}) {
  ParameterSampler s = ParameterSampler::with_devices(n);
  s.require_positive_extortion_payoffs = false;
  Rng rng(seed);
  return sample_config(s, chis, rng).config;
}

inline bool rel_close(double a, double b, double tol) {
  const double scale = std::max({std::abs(a), std::abs(b), 1.0});
  return std::abs(a - b) <= tol * scale;
}

}  // namespace felce::test

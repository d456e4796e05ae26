#include "felce/sampler.hpp"

#include <algorithm>
#include <vector>

#include "felce/ce_strategy.hpp"
#include "felce/errors.hpp"

namespace felce {

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (std::uint64_t x : path) h = mix(h ^ mix(x));
  return h;
}

ParameterSampler ParameterSampler::with_devices(std::size_t n) {
  ParameterSampler s;
  s.num_devices = n;
  s.data_size = 6000.0 / static_cast<double>(n);
  return s;
}

namespace {

// Uniform on (lo, hi].
double draw_upper_closed(const UniformRange& r, Rng& rng) {
  return r.hi - uniform01(rng) * (r.hi - r.lo);
}

// Uniform on [lo, hi).
double draw_lower_closed(const UniformRange& r, Rng& rng) {
  return r.lo + uniform01(rng) * (r.hi - r.lo);
}

DeviceParams draw_device(const ParameterSampler& s, Rng& rng) {
  DeviceParams d;
  d.alpha = draw_upper_closed(s.alpha, rng);
  d.beta = draw_upper_closed(s.beta, rng);
  d.psi_hi = draw_upper_closed(s.psi_hi, rng);
  d.psi_lo = draw_lower_closed(s.psi_lo, rng);
  const double income = draw_upper_closed(s.defection_income, rng);
  d.delta = s.delta;
  d.data_size = s.data_size;
  d.lambda = income / (1.0 - s.delta);
  return d;
}

bool device_valid(const DeviceParams& d) {
  try {
    d.validate();
  } catch (const ConfigError&) {
    return false;
  }
  return true;
}

}  // namespace

SampledConfig sample_config(const ParameterSampler& sampler,
                            std::span<const double> chis, Rng& rng) {
  if (sampler.num_devices == 0 || sampler.num_devices > kMaxDevices) {
    throw ConfigError("sampler device count must lie in [1, 12]");
  }
  for (double chi : chis) {
    if (!(chi >= 1.0)) throw ConfigError("every chi must be >= 1");
  }
  sampler.server.validate();
  const std::size_t n = sampler.num_devices;
  const double min_chi = chis.empty() ? 1.0 : *std::min_element(chis.begin(), chis.end());

  // Profit only depends on delta and data size, which are fixed, so the
  // server-side extremes are known before any device is drawn.
  GameConfig pilot;
  pilot.server = sampler.server;
  DeviceParams fixed;
  fixed.delta = sampler.delta;
  fixed.data_size = sampler.data_size;
  pilot.devices.assign(n, fixed);
  const ViabilityReport pilot_report = check_viability(pilot);
  if (!pilot_report.server) {
    throw ConfigError("fixed server block fails the viability check");
  }
  const auto& srv = sampler.server;
  // Most negative server surplus among (D, all C), (C, all D), (D, all D).
  const double worst_shift =
      std::min({srv.beta * srv.rho, srv.alpha * (pilot_report.phi_min - pilot_report.phi_max),
                srv.alpha * (pilot_report.phi_min - pilot_report.phi_max) + srv.beta * srv.rho});
  const double positivity_floor = -worst_shift / (static_cast<double>(n) * min_chi);

  SampledConfig out;
  while (true) {
    GameConfig cfg;
    cfg.server = sampler.server;
    cfg.devices.reserve(n);
    while (cfg.devices.size() < n) {
      if (out.device_draws >= sampler.max_draws) {
        throw RejectionBudgetExceeded(out.device_draws);
      }
      ++out.device_draws;
      const DeviceParams d = draw_device(sampler, rng);
      const bool viable = device_valid(d) && d.alpha * (d.psi_hi - d.psi_lo) >
                                                 d.beta * d.defection_income();
      const bool positive = !sampler.require_positive_extortion_payoffs ||
                            d.alpha * d.psi_hi > positivity_floor;
      if (viable && positive) {
        cfg.devices.push_back(d);
      } else {
        ++out.rejected_device_draws;
      }
    }

    const UtilityTable table = build_utility_table(cfg);
    bool accepted = check_viability(cfg).viable();
    for (double chi : chis) {
      if (!accepted) break;
      const FeasibilityReport report = feasible_region(table, chi);
      accepted = std::any_of(report.gamma_intervals.begin(), report.gamma_intervals.end(),
                             [](const GammaInterval& iv) { return iv.hi > 0.0; });
    }
    if (accepted) {
      out.config = std::move(cfg);
      return out;
    }
    ++out.rejected_configs;
  }
}

}  // namespace felce

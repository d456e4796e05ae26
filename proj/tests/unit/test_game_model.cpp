#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "felce/errors.hpp"
#include "felce/game_model.hpp"
#include "support.hpp"

using namespace felce;
using felce::test::reference_config;

namespace {

std::vector<Action> all(std::size_t n, Action a) { return std::vector<Action>(n, a); }

}  // namespace

TEST_CASE("outcome indexing anchors") {
  for (std::size_t n = 1; n <= 6; ++n) {
    const std::size_t eta = num_outcomes(n);
    CHECK(eta == (std::size_t{1} << (n + 1)));
    CHECK(encode_outcome(Action::C, all(n, Action::C)) == 1);
    CHECK(encode_outcome(Action::C, all(n, Action::D)) == eta / 2);
    CHECK(encode_outcome(Action::D, all(n, Action::C)) == eta / 2 + 1);
    CHECK(encode_outcome(Action::D, all(n, Action::D)) == eta);
  }
  const JointAction last = decode_outcome(16, 3);
  CHECK(last.server == Action::D);
  CHECK(std::all_of(last.devices.begin(), last.devices.end(),
                    [](Action a) { return a == Action::D; }));
  CHECK(outcome_label(1, 3) == "CCCC");
  CHECK(outcome_label(9, 3) == "DCCC");
}

TEST_CASE("outcome encoding is a bijection up to the device cap") {
  for (std::size_t n = 1; n <= kMaxDevices; ++n) {
    const std::size_t eta = num_outcomes(n);
    // Exhaustive for small n, strided otherwise.
    const std::size_t stride = n <= 8 ? 1 : 97;
    for (std::size_t j = 1; j <= eta; j += stride) {
      const JointAction ja = decode_outcome(j, n);
      REQUIRE(ja.devices.size() == n);
      CHECK(encode_outcome(ja.server, ja.devices) == j);
      CHECK(server_action_at(j, n) == ja.server);
      for (std::size_t i = 0; i < n; ++i) CHECK(device_action_at(j, n, i) == ja.devices[i]);
      CHECK((j <= eta / 2) == (ja.server == Action::C));
    }
  }
}

TEST_CASE("outcome indexing errors") {
  CHECK_THROWS_AS(decode_outcome(0, 2), DimensionMismatch);
  CHECK_THROWS_AS(decode_outcome(9, 2), DimensionMismatch);
  const GameConfig cfg = reference_config(3);
  CHECK_THROWS_AS(encode_outcome(cfg, Action::C, all(2, Action::C)), DimensionMismatch);
}

TEST_CASE("model error and profit at the reference parameters") {
  const GameConfig cfg = reference_config(8);
  CHECK(model_error(all(8, Action::C), cfg) == doctest::Approx(0.029913556874941145).epsilon(1e-13));
  CHECK(model_error(all(8, Action::D), cfg) == doctest::Approx(0.4979403295114544).epsilon(1e-13));
  CHECK(server_profit(all(8, Action::C), cfg) == doctest::Approx(9.909944192220365).epsilon(1e-13));
  CHECK(server_profit(all(8, Action::D), cfg) == doctest::Approx(5.051489941953).epsilon(1e-12));

  std::vector<Action> one_d = all(8, Action::C);
  one_d[3] = Action::D;
  CHECK(model_error(one_d, cfg) == doctest::Approx(0.03278549100084973).epsilon(1e-13));
  CHECK(server_profit(one_d, cfg) == doctest::Approx(9.907344662883968).epsilon(1e-13));
}

TEST_CASE("model error edge cases") {
  GameConfig cfg = reference_config(2);
  cfg.server.k = 0.0;
  CHECK(model_error(all(2, Action::D), cfg) == 0.0);

  cfg = reference_config(2);
  for (auto& d : cfg.devices) d.delta = 0.0;
  CHECK_THROWS_AS(model_error(all(2, Action::D), cfg), DegenerateError);
  CHECK_THROWS_AS(model_error(all(3, Action::C), cfg), DimensionMismatch);
}

TEST_CASE("profit vanishes as the error grows") {
  GameConfig cfg = reference_config(1);
  cfg.server.k = 1e6;
  CHECK(server_profit(all(1, Action::C), cfg) < 1e-100);
}

TEST_CASE("profit falls as more devices defect") {
  const GameConfig cfg = reference_config(6);
  std::vector<Action> y = all(6, Action::C);
  double prev = server_profit(y, cfg);
  for (std::size_t i = 0; i < 6; ++i) {
    y[i] = Action::D;
    const double next = server_profit(y, cfg);
    CHECK(next < prev);
    prev = next;
  }
}

TEST_CASE("device utility") {
  GameConfig cfg = reference_config(1);
  DeviceParams& d = cfg.devices[0];
  d.alpha = 1.0;
  d.beta = 1.0;
  d.psi_hi = 2.0;
  d.psi_lo = 0.3;
  d.lambda = 1.0;
  d.delta = 0.5;
  CHECK(device_utility(0, Action::C, Action::D, cfg) == doctest::Approx(2.5));
  CHECK(device_utility(0, Action::C, Action::C, cfg) == doctest::Approx(2.0));
  CHECK(device_utility(0, Action::D, Action::D, cfg) == doctest::Approx(0.3 + 0.5));
  CHECK(device_utility(0, Action::D, Action::C, cfg) == doctest::Approx(0.3));
}

TEST_CASE("server utility anchors") {
  const GameConfig cfg = reference_config(8);
  const double phi_hi = server_profit(all(8, Action::C), cfg);
  const double phi_lo = server_profit(all(8, Action::D), cfg);
  CHECK(server_utility(Action::C, all(8, Action::C), cfg) ==
        doctest::Approx(33.549720961101826).epsilon(1e-13));
  CHECK(server_utility(Action::D, all(8, Action::D), cfg) == doctest::Approx(5.0 * phi_lo));
  CHECK(server_utility(Action::D, all(8, Action::C), cfg) == doctest::Approx(5.0 * phi_hi));
}

TEST_CASE("single-device table matches hand evaluation") {
  const GameConfig cfg = reference_config(1);
  const DeviceParams& d = cfg.devices[0];
  const double eps_c = 13.2 * std::pow(6000.0, -0.7);
  const double eps_d = 13.2 * std::pow(0.018 * 6000.0, -0.7);
  const double phi_c = 10.0 / (1.0 + std::exp(10.0 * eps_c - 5.0));
  const double phi_d = 10.0 / (1.0 + std::exp(10.0 * eps_d - 5.0));
  const double m = d.lambda * (1.0 - d.delta);

  const UtilityTable t = build_utility_table(cfg);
  REQUIRE(t.num_outcomes() == 4);
  const double server[4] = {5 * phi_c - 16, 5 * phi_d - 16, 5 * phi_c, 5 * phi_d};
  const double device[4] = {2.5 * 1.8, 2.5 * 1.8 + m, 2.5 * 0.5, 2.5 * 0.5 + m};
  for (int j = 0; j < 4; ++j) {
    CHECK(t.server[j] == doctest::Approx(server[j]).epsilon(1e-14));
    CHECK(t.devices[0][j] == doctest::Approx(device[j]).epsilon(1e-14));
  }
}

TEST_CASE("table differences between (C, all C) and (D, all C)") {
  const GameConfig cfg = felce::test::sampled_config(4, 11);
  const UtilityTable t = build_utility_table(cfg);
  const std::size_t half = t.num_outcomes() / 2;
  CHECK(t.server[0] - t.server[half] == doctest::Approx(-cfg.server.beta * cfg.server.rho));
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& d = cfg.devices[i];
    CHECK(t.devices[i][0] - t.devices[i][half] == doctest::Approx(d.alpha * (d.psi_hi - d.psi_lo)));
  }
}

TEST_CASE("table is equivariant under device permutation") {
  const GameConfig cfg = felce::test::sampled_config(4, 5);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  GameConfig permuted = cfg;
  for (std::size_t i = 0; i < 4; ++i) permuted.devices[i] = cfg.devices[perm[i]];
  const UtilityTable a = build_utility_table(cfg);
  const UtilityTable b = build_utility_table(permuted);
  for (std::size_t j = 1; j <= a.num_outcomes(); ++j) {
    const JointAction ja = decode_outcome(j, 4);
    std::vector<Action> moved(4);
    for (std::size_t i = 0; i < 4; ++i) moved[i] = ja.devices[perm[i]];
    const std::size_t k = encode_outcome(ja.server, moved);
    CHECK(b.server[k - 1] == doctest::Approx(a.server[j - 1]).epsilon(1e-14));
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(b.devices[i][k - 1] == doctest::Approx(a.devices[perm[i]][j - 1]).epsilon(1e-14));
    }
  }
}

TEST_CASE("table respects the device cap") {
  GameConfig cfg = reference_config(kMaxDevices + 1);
  CHECK_THROWS_AS(build_utility_table(cfg), CapExceeded);
  CHECK_THROWS_AS(cfg.validate(), CapExceeded);
  CHECK_THROWS_AS(build_utility_table(reference_config(3), default_profit_model(), 2), CapExceeded);
}

TEST_CASE("viability") {
  const GameConfig cfg = reference_config(8);
  const ViabilityReport r = check_viability(cfg);
  CHECK(r.server);
  CHECK(5.0 * (r.phi_max - r.phi_min) == doctest::Approx(24.292271251336825).epsilon(1e-12));
  CHECK(r.viable());

  GameConfig boundary = cfg;
  boundary.server.rho = 5.0 * (r.phi_max - r.phi_min) / boundary.server.beta;
  CHECK_FALSE(check_viability(boundary).server);

  GameConfig greedy = cfg;
  greedy.devices[2].beta = 100.0;
  const ViabilityReport g = check_viability(greedy);
  CHECK_FALSE(g.devices[2]);
  CHECK(g.devices[1]);
  CHECK_FALSE(g.viable());
}

TEST_CASE("defection dominance") {
  CHECK(verify_defection_dominance(reference_config(8)));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CHECK(verify_defection_dominance(felce::test::sampled_config(5, seed)));
  }

  GameConfig free_model = reference_config(3);
  free_model.server.rho = 0.0;
  CHECK_FALSE(verify_defection_dominance(build_utility_table(free_model)));

  GameConfig no_income = reference_config(3);
  no_income.devices[1].lambda = 0.0;
  CHECK_FALSE(verify_defection_dominance(build_utility_table(no_income)));
}

TEST_CASE("parameter validation") {
  GameConfig cfg = reference_config(2);
  CHECK_NOTHROW(cfg.validate());
  cfg.devices[0].psi_lo = cfg.devices[0].psi_hi;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = reference_config(2);
  cfg.devices[1].delta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = reference_config(2);
  cfg.server.alpha = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.devices.clear();
  CHECK_THROWS_AS(reference_config(0).validate(), ConfigError);
}

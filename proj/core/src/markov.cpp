#include "felce/markov.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "felce/determinant.hpp"
#include "felce/errors.hpp"

namespace felce {

namespace {

void require_probability(double q, const char* what) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw ConfigError(std::string(what) + " must lie in [0,1], got " +
                      std::to_string(q));
  }
}

}  // namespace

DeviceStrategy DeviceStrategy::scalar(double q) {
  require_probability(q, "device cooperation probability");
  return DeviceStrategy(q);
}

DeviceStrategy DeviceStrategy::full(std::vector<double> q) {
  for (double x : q) require_probability(x, "device cooperation probability");
  return DeviceStrategy(std::move(q));
}

double DeviceStrategy::after_slot(std::size_t slot) const {
  if (const auto* q = std::get_if<double>(&q_)) return *q;
  return std::get<std::vector<double>>(q_)[slot];
}

DeviceStrategy DeviceStrategy::perturbed(double eps) const {
  if (const auto* q = std::get_if<double>(&q_)) {
    return DeviceStrategy(std::clamp(*q, eps, 1.0 - eps));
  }
  auto q = std::get<std::vector<double>>(q_);
  for (double& x : q) x = std::clamp(x, eps, 1.0 - eps);
  return DeviceStrategy(std::move(q));
}

std::size_t DeviceStrategy::size() const {
  if (is_scalar()) return 0;
  return std::get<std::vector<double>>(q_).size();
}

TransitionMatrix build_transition_matrix(std::span<const double> p,
                                         std::span<const DeviceStrategy> devices) {
  const std::size_t n = devices.size();
  if (n == 0) throw DimensionMismatch("at least one device strategy required");
  if (n > kMaxDevices) throw CapExceeded("too many devices for a dense chain");
  const std::size_t eta = num_outcomes(n);
  if (p.size() != eta) {
    throw DimensionMismatch("server strategy has " + std::to_string(p.size()) +
                            " entries, expected " + std::to_string(eta));
  }
  for (const auto& d : devices) {
    if (!d.is_scalar() && d.size() != eta) {
      throw DimensionMismatch("device strategy length does not match eta");
    }
  }
  for (double x : p) require_probability(x, "server cooperation probability");

  TransitionMatrix out;
  out.m.resize(static_cast<Eigen::Index>(eta), static_cast<Eigen::Index>(eta));
  std::vector<double> row(eta);
  std::vector<double> next(eta);
  for (std::size_t u = 0; u < eta; ++u) {
    // Kronecker product of per-player (coop, defect) pairs, server first;
    // bit value 0 (C) lands on the even position.
    row[0] = p[u];
    row[1] = 1.0 - p[u];
    std::size_t width = 2;
    for (const auto& d : devices) {
      const double q = d.after_slot(u);
      for (std::size_t k = 0; k < width; ++k) {
        next[2 * k] = row[k] * q;
        next[2 * k + 1] = row[k] * (1.0 - q);
      }
      width *= 2;
      std::copy_n(next.begin(), width, row.begin());
    }
    for (std::size_t v = 0; v < eta; ++v) {
      out.m(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = row[v];
    }
  }
  return out;
}

double max_row_sum_error(const TransitionMatrix& matrix) {
  return (matrix.m.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

std::size_t count_closed_classes(const TransitionMatrix& matrix) {
  const auto n = static_cast<std::size_t>(matrix.m.rows());
  const auto& m = matrix.m;
  auto edge = [&m](std::size_t u, std::size_t v) {
    return m(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0;
  };

  // Iterative Tarjan.
  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0), component(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> calls;  // (node, next target)
  std::size_t counter = 0;
  std::size_t components = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    calls.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!calls.empty()) {
      auto& [u, next] = calls.back();
      bool descended = false;
      while (next < n) {
        const std::size_t v = next++;
        if (!edge(u, v)) continue;
        if (index[v] == kUnvisited) {
          index[v] = low[v] = counter++;
          stack.push_back(v);
          on_stack[v] = true;
          calls.emplace_back(v, 0);
          descended = true;
          break;
        }
        if (on_stack[v]) low[u] = std::min(low[u], index[v]);
      }
      if (descended) continue;
      const std::size_t done = u;
      calls.pop_back();
      if (!calls.empty()) {
        const std::size_t parent = calls.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
      if (low[done] == index[done]) {
        std::size_t w = 0;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          component[w] = components;
        } while (w != done);
        ++components;
      }
    }
  }

  std::vector<bool> leaks(components, false);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (component[u] != component[v] && edge(u, v)) {
        leaks[component[u]] = true;
        break;
      }
    }
  }
  return static_cast<std::size_t>(std::count(leaks.begin(), leaks.end(), false));
}

namespace {

double stationary_residual(const Eigen::MatrixXd& m, const Eigen::VectorXd& v) {
  return (m.transpose() * v - v).cwiseAbs().maxCoeff();
}

bool tidy(Eigen::VectorXd& v, double tol) {
  if (!v.allFinite() || v.minCoeff() < -tol) return false;
  v = v.cwiseMax(0.0);
  const double total = v.sum();
  if (!(total > 0.0)) return false;
  v /= total;
  return true;
}

StationaryDistribution to_result(const Eigen::VectorXd& v, double residual,
                                 StationaryMethod method) {
  StationaryDistribution out;
  out.v.assign(v.data(), v.data() + v.size());
  out.residual = residual;
  out.method = method;
  return out;
}

}  // namespace

StationaryDistribution stationary_distribution(const TransitionMatrix& matrix,
                                               double tol) {
  const auto& m = matrix.m;
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionMismatch("transition matrix must be square and nonempty");
  }
  if (const std::size_t closed = count_closed_classes(matrix); closed > 1) {
    throw NonErgodic(closed);
  }
  const Eigen::Index eta = m.rows();

  // Transposed balance equations with the first one replaced by sum(v) = 1.
  Eigen::MatrixXd a = m.transpose();
  a.diagonal().array() -= 1.0;
  a.row(0).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(eta);
  rhs(0) = 1.0;
  Eigen::VectorXd v = Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(rhs);
  if (tidy(v, tol)) {
    const double residual = stationary_residual(m, v);
    if (residual <= tol) return to_result(v, residual, StationaryMethod::kDirect);
  }

  constexpr int kMaxIterations = 200000;
  constexpr int kStallWindow = 64;
  v = Eigen::VectorXd::Constant(eta, 1.0 / static_cast<double>(eta));
  const Eigen::MatrixXd mt = m.transpose();
  bool lazy = false;
  double window_start = stationary_residual(m, v);
  for (int it = 1; it <= kMaxIterations; ++it) {
    Eigen::VectorXd step = mt * v;
    v = lazy ? Eigen::VectorXd(0.5 * (v + step)) : step;
    v /= v.sum();
    const double residual = stationary_residual(m, v);
    if (residual <= tol) {
      return to_result(v, residual, StationaryMethod::kPowerIteration);
    }
    if (it % kStallWindow == 0) {
      // Periodic chains oscillate without shrinking the residual; mixing with
      // the identity keeps the fixed point and removes the period.
      if (!lazy && residual > 0.5 * window_start) lazy = true;
      window_start = residual;
    }
  }
  throw Error("stationary distribution did not converge to tolerance " +
              std::to_string(tol));
}

ExpectedUtilities expected_utilities(std::span<const double> v,
                                     const UtilityTable& table) {
  if (v.size() != table.num_outcomes()) {
    throw DimensionMismatch("distribution length does not match the table");
  }
  auto dot = [&v](const std::vector<double>& u) {
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += v[j] * u[j];
    return s;
  };
  ExpectedUtilities out;
  out.server = dot(table.server);
  out.devices.reserve(table.num_devices());
  for (const auto& u : table.devices) out.devices.push_back(dot(u));
  return out;
}

ExpectedUtilities expected_utilities(const StationaryDistribution& dist,
                                     const UtilityTable& table) {
  return expected_utilities(dist.v, table);
}

double det_dot(std::span<const double> p, std::span<const DeviceStrategy> devices,
               std::span<const double> f) {
  if (devices.size() > kMaxDeterminantDevices) {
    throw CapExceeded("determinant route is limited to " +
                      std::to_string(kMaxDeterminantDevices) + " devices");
  }
  const TransitionMatrix matrix = build_transition_matrix(p, devices);
  const Eigen::Index eta = matrix.m.rows();
  if (f.size() != static_cast<std::size_t>(eta)) {
    throw DimensionMismatch("f must have eta entries");
  }
  Eigen::MatrixXd k = matrix.m;
  k.diagonal().array() -= 1.0;
  for (Eigen::Index row = 0; row < eta; ++row) k(row, eta - 1) = f[static_cast<std::size_t>(row)];
  return pivoted_determinant(std::move(k));
}

ExpectedUtilities determinant_expected_utilities(
    std::span<const double> p, std::span<const DeviceStrategy> devices,
    const UtilityTable& table) {
  const std::vector<double> ones(table.num_outcomes(), 1.0);
  const double norm = det_dot(p, devices, ones);
  if (norm == 0.0) throw NonErgodic(0);
  ExpectedUtilities out;
  out.server = det_dot(p, devices, table.server) / norm;
  for (const auto& u : table.devices) out.devices.push_back(det_dot(p, devices, u) / norm);
  return out;
}

IdentityCheck verify_ce_identity(const UtilityTable& table,
                                 const CEStrategy& strategy,
                                 std::span<const DeviceStrategy> devices,
                                 const IdentityOptions& options) {
  if (devices.size() != table.num_devices()) {
    throw DimensionMismatch("one strategy per device is required");
  }
  std::vector<DeviceStrategy> used(devices.begin(), devices.end());
  if (options.perturb) {
    for (auto& d : used) d = d.perturbed(options.perturbation);
  }
  const TransitionMatrix matrix = build_transition_matrix(strategy.p, used);
  const StationaryDistribution dist = stationary_distribution(matrix);

  IdentityCheck check;
  check.expected = expected_utilities(dist, table);
  check.server_surplus = check.expected.server - table.server[0];
  double device_surplus = 0.0;
  for (std::size_t i = 0; i < table.num_devices(); ++i) {
    device_surplus += check.expected.devices[i] - table.devices[i][0];
  }
  check.scaled_device_surplus = strategy.chi * device_surplus;
  check.residual = std::abs(check.server_surplus - check.scaled_device_surplus) /
                   std::max(1.0, std::abs(table.server[0]));
  check.within_tolerance = check.residual <= options.tolerance;
  return check;
}

IdentityCheck verify_ce_identity(const GameConfig& cfg, double chi, double gamma,
                                 std::span<const DeviceStrategy> devices,
                                 const IdentityOptions& options) {
  const UtilityTable table = build_utility_table(cfg);
  const CEStrategy strategy = derive_ce_strategy(table, chi, gamma);
  return verify_ce_identity(table, strategy, devices, options);
}

}  // namespace felce

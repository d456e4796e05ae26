#include "felce/config_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "felce/csv.hpp"
#include "felce/errors.hpp"

namespace felce {

namespace pt = boost::property_tree;

namespace {

double parse_number(const std::string& section, const std::string& key,
                    const std::string& raw) {
  const char* first = raw.data();
  const char* last = raw.data() + raw.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t')) --last;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("[" + section + "] " + key + ": not a number: '" + raw +
                      "'");
  }
  return value;
}

template <typename Fields>
void read_fields(const std::string& section, const pt::ptree& node,
                 Fields fields) {
  for (const auto& [key, child] : node) {
    auto it = fields.find(key);
    if (it == fields.end()) {
      throw ConfigError("[" + section + "] unknown key '" + key + "'");
    }
    *it->second = parse_number(section, key, child.data());
  }
}

std::map<std::string, double*> server_fields(ServerParams& s) {
  return {{"alpha", &s.alpha}, {"beta", &s.beta}, {"rho", &s.rho},
          {"w", &s.w},         {"r", &s.r},       {"t", &s.t},
          {"k", &s.k},         {"a", &s.a}};
}

std::map<std::string, double*> device_fields(DeviceParams& d) {
  return {{"alpha", &d.alpha},   {"beta", &d.beta},
          {"psi_hi", &d.psi_hi}, {"psi_lo", &d.psi_lo},
          {"lambda", &d.lambda}, {"delta", &d.delta},
          {"data_size", &d.data_size}};
}

}  // namespace

GameConfig parse_config(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  GameConfig cfg;
  bool have_server = false;
  std::map<std::size_t, DeviceParams> devices;
  constexpr std::string_view kDevicePrefix = "device.";
  for (const auto& [section, node] : tree) {
    if (section == "server") {
      read_fields(section, node, server_fields(cfg.server));
      have_server = true;
    } else if (section.starts_with(kDevicePrefix)) {
      std::size_t index = 0;
      const char* first = section.data() + kDevicePrefix.size();
      const char* last = section.data() + section.size();
      auto [ptr, ec] = std::from_chars(first, last, index);
      if (ec != std::errc() || ptr != last || index == 0) {
        throw ConfigError("bad device section [" + section + "]");
      }
      if (devices.contains(index)) {
        throw ConfigError("duplicate section [" + section + "]");
      }
      DeviceParams d;
      read_fields(section, node, device_fields(d));
      devices.emplace(index, d);
    } else {
      throw ConfigError("unknown section [" + section + "]");
    }
  }
  if (!have_server) throw ConfigError("missing [server] section");
  std::size_t expected = 1;
  for (const auto& [index, d] : devices) {
    if (index != expected) {
      throw ConfigError("device sections must be numbered 1..n without gaps");
    }
    cfg.devices.push_back(d);
    ++expected;
  }
  cfg.validate();
  return cfg;
}

GameConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_config(const GameConfig& cfg) {
  pt::ptree tree;
  auto put = [](pt::ptree& node, const char* key, double value) {
    node.push_back({key, pt::ptree(format_double(value))});
  };
  pt::ptree server;
  const auto& s = cfg.server;
  put(server, "alpha", s.alpha);
  put(server, "beta", s.beta);
  put(server, "rho", s.rho);
  put(server, "w", s.w);
  put(server, "r", s.r);
  put(server, "t", s.t);
  put(server, "k", s.k);
  put(server, "a", s.a);
  tree.push_back({"server", server});
  for (std::size_t i = 0; i < cfg.devices.size(); ++i) {
    const auto& d = cfg.devices[i];
    pt::ptree node;
    put(node, "alpha", d.alpha);
    put(node, "beta", d.beta);
    put(node, "psi_hi", d.psi_hi);
    put(node, "psi_lo", d.psi_lo);
    put(node, "lambda", d.lambda);
    put(node, "delta", d.delta);
    put(node, "data_size", d.data_size);
    tree.push_back({"device." + std::to_string(i + 1), node});
  }
  std::ostringstream out;
  pt::write_ini(out, tree);
  return out.str();
}

void save_config(const GameConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << format_config(cfg);
}

}  // namespace felce

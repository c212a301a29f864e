#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ipswitch/params.hpp"

namespace ipswitch {

class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inclusive uniform grid; n = 1 gives {lo}, n = 0 is empty.
struct Grid {
  double lo = 0.0, hi = 0.0;
  std::size_t n = 0;

  std::vector<double> values() const {
    std::vector<double> v;
    for (std::size_t k = 0; k < n; ++k) v.push_back(n == 1 ? lo : lo + (hi - lo) * double(k) / double(n - 1));
    return v;
  }
};

struct RunConfig {
  Params p;
  std::vector<State> starts;  // simulate / zero-delay initial states
  double t_max = 100.0;
  double dt = 1e-3;
  std::size_t stride = 1;
  std::string out = "out";
  std::string mode = "set";    // scan: set | plane | diagram
  std::string curve = "dib";   // asymptote: dib | criticality | homoclinic | rule2
  Grid a_grid, b_grid, tau_grid;
  double sample_a = 1.18;      // burst: a at which re-entry / short-off / attractor are recorded
  unsigned jobs = 1;
  bool plot = true;

  /// Throws config_error naming the offending key.
  void validate(std::string_view command) const {
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
    if (!(dt > 0.0)) throw config_error("dt must be positive");
    if (!(t_max >= 0.0)) throw config_error("tmax must be >= 0");
    if (stride == 0) throw config_error("stride must be >= 1");
    if (jobs == 0) throw config_error("jobs must be >= 1");
    auto need_grid = [](const Grid& g, const char* key) {
      if (g.n == 0) throw config_error(std::string("empty grid: set ") + key + "_n >= 1");
      if (!std::isfinite(g.lo) || !std::isfinite(g.hi) || g.hi < g.lo)
        throw config_error(std::string("bad grid: ") + key + "_min must be <= " + key + "_max");
    };
    if (command == "simulate" || command == "zero-delay") {
      if (starts.empty()) throw config_error("no initial state: set theta0/phi0 or starts");
    } else if (command == "scan") {
      if (mode == "set" || mode == "diagram") {
        need_grid(a_grid, "a");
      } else if (mode == "plane") {
        need_grid(a_grid, "a");
        need_grid(b_grid, "b");
      } else {
        throw config_error("unknown scan mode '" + mode + "' (expected set|plane|diagram)");
      }
    } else if (command == "asymptote") {
      if (curve == "rule2")
        need_grid(tau_grid, "tau");
      else if (curve == "dib" || curve == "criticality" || curve == "homoclinic")
        need_grid(a_grid, "a");
      else
        throw config_error("unknown curve '" + curve + "' (expected dib|criticality|homoclinic|rule2)");
    } else if (command == "burst") {
      need_grid(a_grid, "a");
    }
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw config_error(key + ": '" + v + "' is not a number");
  return x;
}

inline std::size_t to_count(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x < 0.0 || x != std::floor(x)) throw config_error(key + ": '" + v + "' is not a non-negative integer");
  return static_cast<std::size_t>(x);
}

/// "th,ph; th,ph; ..."
inline std::vector<State> to_starts(const std::string& key, const std::string& v) {
  std::vector<State> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto c = item.find(',');
    if (c == std::string::npos) throw config_error(key + ": expected 'theta,phi' pairs separated by ';'");
    out.push_back({to_double(key, trim(item.substr(0, c))), to_double(key, trim(item.substr(c + 1)))});
  }
  return out;
}

}  // namespace detail

/// Applies one key=value setting. theta0/phi0 edit the first start (creating it if needed).
inline void apply_setting(RunConfig& c, const std::string& key_raw, const std::string& value_raw) {
  const std::string key = detail::trim(key_raw);
  const std::string v = detail::trim(value_raw);
  auto num = [&] { return detail::to_double(key, v); };
  auto first_start = [&]() -> State& {
    if (c.starts.empty()) c.starts.push_back({});
    return c.starts.front();
  };
  try {
    if (key == "a") c.p.a = num();
    else if (key == "b") c.p.b = num();
    else if (key == "tau") c.p.tau = num();
    else if (key == "s") c.p.s = num();
    else if (key == "sigma") c.p.sigma = num();
    else if (key == "g") c.p.g = parse_gkind(v);
    else if (key == "rule") c.p.rule = parse_rule(v);
    else if (key == "theta0") first_start().theta = num();
    else if (key == "phi0") first_start().phi = num();
    else if (key == "starts") c.starts = detail::to_starts(key, v);
    else if (key == "tmax") c.t_max = num();
    else if (key == "dt") c.dt = num();
    else if (key == "stride") c.stride = detail::to_count(key, v);
    else if (key == "out") c.out = v;
    else if (key == "mode") c.mode = v;
    else if (key == "curve") c.curve = v;
    else if (key == "a_min") c.a_grid.lo = num();
    else if (key == "a_max") c.a_grid.hi = num();
    else if (key == "a_n") c.a_grid.n = detail::to_count(key, v);
    else if (key == "b_min") c.b_grid.lo = num();
    else if (key == "b_max") c.b_grid.hi = num();
    else if (key == "b_n") c.b_grid.n = detail::to_count(key, v);
    else if (key == "tau_min") c.tau_grid.lo = num();
    else if (key == "tau_max") c.tau_grid.hi = num();
    else if (key == "tau_n") c.tau_grid.n = detail::to_count(key, v);
    else if (key == "sample_a") c.sample_a = num();
    else if (key == "jobs") c.jobs = static_cast<unsigned>(detail::to_count(key, v));
    else if (key == "plot") c.plot = (v == "1" || v == "true" || v == "yes");
    else throw config_error("unknown key '" + key + "'");
  } catch (const config_error&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw config_error(key + ": " + e.what());
  }
}

/// Flat key=value text; '#' starts a comment; blank lines ignored; later keys override earlier.
inline void apply_config_text(RunConfig& c, std::string_view text, std::string_view origin = "config") {
  std::stringstream ss{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(std::string(origin) + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      apply_setting(c, line.substr(0, eq), line.substr(eq + 1));
    } catch (const config_error& e) {
      throw config_error(std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(c, buf.str(), path);
}

}  // namespace ipswitch

#include "coalsfs/config.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "coalsfs/text.hpp"

namespace coalsfs {

namespace {

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

template <class F>
auto guarded(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

int to_int(const std::string& key, const std::string& v) {
  return guarded(key, [&] {
    const auto x = parse_int(v);
    if (x < -2147483647 || x > 2147483647) throw ConfigError("config key '" + key + "': out of range");
    return static_cast<int>(x);
  });
}

}  // namespace

std::string to_string(StopKind k) {
  switch (k) {
    case StopKind::single: return "single";
    case StopKind::larger: return "larger";
    case StopKind::determined: return "determined";
  }
  return "?";
}

StopKind parse_stop(const std::string& s) {
  if (s == "single") return StopKind::single;
  if (s == "larger") return StopKind::larger;
  if (s == "determined") return StopKind::determined;
  throw ConfigError("unknown stop rule '" + s + "' (single|larger|determined)");
}

EngineOptions SimConfig::engine_options() const {
  EngineOptions o;
  o.schedule.base_dt = base_dt();
  o.schedule.steps_per_doubling = steps_per_doubling;
  o.schedule.substep_log2 = substep_log2;
  o.tolerance_fraction = tolerance;
  o.master_seed = seed;
  return o;
}

StopRule SimConfig::stop_rule() const {
  switch (stop) {
    case StopKind::single: return StopRule::single(t_max);
    case StopKind::larger: return StopRule::larger_than(m_max, t_max);
    case StopKind::determined: break;
  }
  std::vector<std::pair<int, int>> lengths;
  for (int i = 1; i <= n; ++i) {
    for (int m = 1; m <= m_max; ++m) lengths.emplace_back(i, m);
  }
  return StopRule::determined(std::move(lengths), t_max);
}

void SimConfig::validate() const {
  if (n < 2 || n > 65535) throw ConfigError("n must be in [2, 65535]");
  if (m_max < 1 || m_max >= n) throw ConfigError("m_max must satisfy 1 <= m_max < n");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (steps_per_doubling < 0) throw ConfigError("steps_per_doubling must be >= 0");
  if (substep_log2 < 0 || substep_log2 > 12) throw ConfigError("substep_log2 must be in [0, 12]");
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw ConfigError("tolerance must be in (0, 1)");
  if (!(t_max > 0.0) || std::isnan(t_max)) throw ConfigError("t_max must be positive");
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw ConfigError("nu must be >= 0");
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be positive");
  if (out.empty()) throw ConfigError("output directory must be non-empty");
}

void set_field(SimConfig& c, const std::string& key, const std::string& value) {
  const std::string v{trim(value)};
  auto real = [&] { return guarded(key, [&] { return parse_double(v); }); };
  auto uint = [&] { return guarded(key, [&] { return parse_uint(v); }); };
  if (key == "n") c.n = to_int(key, v);
  else if (key == "topology") c.topology = guarded(key, [&] { return parse_topology(v); });
  else if (key == "m_max") c.m_max = to_int(key, v);
  else if (key == "dt") c.dt = real();
  else if (key == "dt_scaled") c.dt_scaled = guarded(key, [&] { return parse_bool(v); });
  else if (key == "steps_per_doubling") c.steps_per_doubling = to_int(key, v);
  else if (key == "substep_log2") c.substep_log2 = to_int(key, v);
  else if (key == "tolerance") c.tolerance = real();
  else if (key == "t_max") c.t_max = real();
  else if (key == "stop") c.stop = parse_stop(v);
  else if (key == "nu") c.nu = real();
  else if (key == "seed") c.seed = uint();
  else if (key == "replicates") c.replicates = uint();
  else if (key == "workers") c.workers = to_int(key, v);
  else if (key == "epsilon") c.epsilon = real();
  else if (key == "out") c.out = v;
  else throw ConfigError("unknown config key '" + key + "'");
}

SimConfig read_config(std::istream& in, SimConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const auto body = trim(std::string_view{line}.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    set_field(base, std::string{trim(body.substr(0, eq))}, std::string{body.substr(eq + 1)});
  }
  return base;
}

void write_config(std::ostream& out, const SimConfig& c) {
  out << "n=" << c.n << '\n'
      << "topology=" << to_string(c.topology) << '\n'
      << "m_max=" << c.m_max << '\n'
      << "dt=" << format_double(c.dt) << '\n'
      << "dt_scaled=" << (c.dt_scaled ? "true" : "false") << '\n'
      << "steps_per_doubling=" << c.steps_per_doubling << '\n'
      << "substep_log2=" << c.substep_log2 << '\n'
      << "tolerance=" << format_double(c.tolerance) << '\n'
      << "t_max=" << format_double(c.t_max) << '\n'
      << "stop=" << to_string(c.stop) << '\n'
      << "nu=" << format_double(c.nu) << '\n'
      << "seed=" << c.seed << '\n'
      << "replicates=" << c.replicates << '\n'
      << "workers=" << c.workers << '\n'
      << "epsilon=" << format_double(c.epsilon) << '\n'
      << "out=" << c.out << '\n';
}

std::uint64_t config_hash(const SimConfig& config) {
  SimConfig c = config;
  c.out.clear();
  c.workers = 1;  // results do not depend on the worker count
  std::ostringstream os;
  write_config(os, c);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash_hex(const SimConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(config)));
  return buf;
}

}  // namespace coalsfs

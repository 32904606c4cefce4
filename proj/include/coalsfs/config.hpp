#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "coalsfs/coalescent_engine.hpp"

namespace coalsfs {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StopKind { single, larger, determined };

struct SimConfig {
  int n = 20;
  Topology topology = Topology::line;
  int m_max = 1;
  double dt = 1e-4;        // absolute base step, or multiplier of 1/n^2 when dt_scaled
  bool dt_scaled = true;
  int steps_per_doubling = 32;
  int substep_log2 = 0;
  double tolerance = 1.0 / 1024.0;  // refinement tolerance as a fraction of the fine step
  double t_max = 1e4;
  StopKind stop = StopKind::determined;
  double nu = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t replicates = 100;
  int workers = 1;
  double epsilon = 0.01;
  std::string out = "coalsfs-out";

  [[nodiscard]] double base_dt() const { return dt_scaled ? dt / (static_cast<double>(n) * n) : dt; }
  [[nodiscard]] EngineOptions engine_options() const;
  // The stop rule matching `stop`; determined covers every (i, m) with m <= m_max.
  [[nodiscard]] StopRule stop_rule() const;

  // Throws ConfigError on the first bad field.
  void validate() const;
};

std::string to_string(StopKind k);
StopKind parse_stop(const std::string& s);

/// Set one field from its file/flag spelling. Throws ConfigError.
void set_field(SimConfig& config, const std::string& key, const std::string& value);

/// key=value lines; '#' starts a comment. Later keys override earlier ones.
SimConfig read_config(std::istream& in, SimConfig base = {});
void write_config(std::ostream& out, const SimConfig& config);

// FNV-1a of the canonical text, excluding the output directory.
std::uint64_t config_hash(const SimConfig& config);
std::string config_hash_hex(const SimConfig& config);

}  // namespace coalsfs

#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "coalsfs/config.hpp"
#include "coalsfs/validation.hpp"

namespace coalsfs {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum ExitCode { exit_ok = 0, exit_validation_failed = 1, exit_config_error = 2, exit_io_error = 3 };

using Written = std::vector<std::filesystem::path>;

// Every file goes to config.out and carries the config hash in its name and header.

/// Branch-length and SFS CSVs for R replicates plus a summary with the median
/// of n*L_{n,m} per m. With write_logs, also one event log per replicate.
Written cmd_simulate(const SimConfig& config, bool write_logs, std::ostream& msg);

/// Exceedance fractions of n*L_{n,m} (m = config.m_max) over an n grid.
Written cmd_sweep(const SimConfig& config, const std::vector<int>& grid, double eps, std::ostream& msg);

/// Meeting times of two particles `gap` apart, with the KS distance to the exact law.
Written cmd_pairtime(const SimConfig& config, double gap, std::ostream& msg);

/// First meeting among particles at 0, 1/n, (1+m)/n (m = config.m_max), with a tail fit.
Written cmd_tripletime(const SimConfig& config, double q_lo, double q_hi, std::ostream& msg);

/// Block trajectories of one run (stream 0) as polylines.
Written cmd_tree(const SimConfig& config, int sample_every, std::ostream& msg);

// Returns the results; the report lands in config.out.
std::vector<CriterionResult> cmd_validate(const SimConfig& config, const ValidationOptions& options,
                                          std::ostream& msg, Written* written = nullptr);

}  // namespace coalsfs

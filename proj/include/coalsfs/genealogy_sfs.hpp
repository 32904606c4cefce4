#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "coalsfs/coalescent_engine.hpp"
#include "coalsfs/rng.hpp"

namespace coalsfs {

/// L[i][m] for i in [1, n], m in [1, m_max].
struct BranchLengthTable {
  int n = 0;
  int m_max = 0;
  Topology topology = Topology::line;
  std::vector<CensorableTime> entries;  // row-major by i

  [[nodiscard]] const CensorableTime& at(int i, int m) const;
};

// Mutation counts M[m], m = 1..m_max (stored at m - 1).
struct SfsVector {
  double nu = 0.0;
  std::vector<std::int64_t> counts;
  std::vector<char> censored;
};

/// Length of time during which {i, ..., i+m-1} is a block, from coalescence
/// times: (tau_{i-1,i} ^ tau_{i+m-1,i+m} - tau_{i,i+m-1})^+, with the line
/// boundary cases and circular indices. A censored result is a lower bound.
CensorableTime branch_length_formula(const EventLog& log, int i, int m);

/// Same quantity by replaying the partition and measuring the block's lifetime.
CensorableTime branch_length_scan(const EventLog& log, int i, int m);

/// The formula with the coalescence minimum capped at `cutoff`.
CensorableTime truncated_branch_length(const EventLog& log, int i, int m, double cutoff);

BranchLengthTable branch_length_table(const EventLog& log, int m_max);

// Sum over all i; censored if any term is.
CensorableTime total_length(const BranchLengthTable& table, int m);
// Sum over i in [2, n-m].
CensorableTime interior_total(const BranchLengthTable& table, int m);

/// M[m] ~ Poisson(nu * L_{n,m}), independent across m given the table.
SfsVector sfs_sample(const BranchLengthTable& table, double nu, RngStream& stream);

struct Polyline {
  BlockRange block;
  std::vector<std::pair<double, double>> points;  // (time, coordinate)
};

/// One polyline per block lifetime, built from engine position samples.
/// Circle coordinates are unwrapped. Throws std::runtime_error without samples.
std::vector<Polyline> tree_polylines(const EventLog& log, const std::vector<PositionSample>& samples);

void write_table_csv(std::ostream& out, const BranchLengthTable& table);
void write_sfs_csv(std::ostream& out, const SfsVector& sfs, const BranchLengthTable& table);
void write_polylines(std::ostream& out, const std::vector<Polyline>& lines);

}  // namespace coalsfs

#include "coalsfs/genealogy_sfs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>

#include "coalsfs/text.hpp"

namespace coalsfs {

namespace {

void check_index(const EventLog& log, int i, int m) {
  if (i < 1 || i > log.n) throw std::invalid_argument("branch length: index i out of range");
  if (m < 1 || m > log.n) throw std::invalid_argument("branch length: m out of range");
  if (log.topology == Topology::circle && m >= log.n) {
    throw std::invalid_argument("branch length: m must be < n on the circle");
  }
}

int wrap(int q, int n) { return ((q % n) + n) % n; }

CensorableTime positive_part_difference(CensorableTime upper, CensorableTime lower) {
  if (lower.censored) {
    // lower >= final clock >= any exact upper, so the difference is 0 unless
    // upper is also open.
    return upper.censored ? CensorableTime{0.0, true} : CensorableTime{0.0, false};
  }
  return {std::max(0.0, upper.value - lower.value), upper.censored};
}

struct Boundaries {
  CensorableTime left;
  CensorableTime right;
};

// Join times of the links just outside {i, ..., i+m-1}. A missing link at a
// line edge never joins.
Boundaries boundary_times(const EventLog& log, const std::vector<CensorableTime>& links, int i, int m) {
  const CensorableTime never{log.final_clock, true};
  if (log.topology == Topology::circle) {
    return {links[static_cast<std::size_t>(wrap(i - 2, log.n))],
            links[static_cast<std::size_t>(wrap(i + m - 2, log.n))]};
  }
  return {i >= 2 ? links[static_cast<std::size_t>(i - 2)] : never,
          i + m - 1 <= log.n - 1 ? links[static_cast<std::size_t>(i + m - 2)] : never};
}

// tau for members i and i+m-1 (cyclically on the circle).
CensorableTime span_time(const EventLog& log, const std::vector<CensorableTime>& links, int i, int m) {
  CensorableTime inner{0.0, false};
  for (int q = 0; q < m - 1; ++q) inner = censored_max(inner, links[static_cast<std::size_t>(wrap(i - 1 + q, log.n))]);
  if (log.topology == Topology::line || m == 1) return inner;
  CensorableTime outer{0.0, false};
  for (int q = m - 1; q < log.n; ++q) outer = censored_max(outer, links[static_cast<std::size_t>(wrap(i - 1 + q, log.n))]);
  return censored_min(inner, outer);
}

CensorableTime formula_with_cap(const EventLog& log, const std::vector<CensorableTime>& links, int i, int m,
                                const CensorableTime* cap) {
  check_index(log, i, m);
  if (log.topology == Topology::line && i >= log.n - m + 2) return {0.0, false};
  const auto [left, right] = boundary_times(log, links, i, m);
  CensorableTime first_exit = censored_min(left, right);
  if (cap != nullptr) first_exit = censored_min(first_exit, *cap);
  return positive_part_difference(first_exit, span_time(log, links, i, m));
}

}  // namespace

const CensorableTime& BranchLengthTable::at(int i, int m) const {
  if (i < 1 || i > n || m < 1 || m > m_max) throw std::invalid_argument("table index out of range");
  return entries[static_cast<std::size_t>((i - 1) * m_max + (m - 1))];
}

CensorableTime branch_length_formula(const EventLog& log, int i, int m) {
  return formula_with_cap(log, link_times(log), i, m, nullptr);
}

CensorableTime truncated_branch_length(const EventLog& log, int i, int m, double cutoff) {
  if (std::isnan(cutoff) || cutoff < 0.0) throw std::invalid_argument("truncation cutoff must be >= 0");
  const CensorableTime cap{cutoff, false};
  return formula_with_cap(log, link_times(log), i, m, &cap);
}

CensorableTime branch_length_scan(const EventLog& log, int i, int m) {
  check_index(log, i, m);
  const int n = log.n;
  if (log.topology == Topology::line && i + m - 1 > n) return {0.0, false};
  const BlockRange target{i, log.topology == Topology::circle ? wrap(i + m - 2, n) + 1 : i + m - 1};

  // Replay the partition: starts[p] says member p+1 opens a block.
  std::vector<char> starts(static_cast<std::size_t>(n), 1);
  bool whole = false;
  bool born = m == 1;
  bool died = false;
  double birth = 0.0;
  double death = 0.0;
  for (const auto& ev : log.events) {
    const BlockRange merged{ev.left.lo, ev.right.hi};
    if (!born && merged == target) {
      born = true;
      birth = ev.time;
    }
    if (born && !died && (ev.left == target || ev.right == target)) {
      died = true;
      death = ev.time;
    }
    starts[static_cast<std::size_t>(ev.right.lo - 1)] = 0;
    if (merged.lo == wrap(merged.hi, n) + 1) whole = true;
  }
  if (born) {
    if (died) return {death - birth, false};
    return {std::max(0.0, log.final_clock - birth), true};
  }
  // Never formed. It still could if both of its ends are block boundaries.
  if (whole) return {0.0, false};
  const bool left_open = (log.topology == Topology::line && i == 1) || starts[static_cast<std::size_t>(i - 1)];
  const int after = i + m - 1;  // 0-based position of the member following the range
  const bool right_open = log.topology == Topology::line ? (after == n || starts[static_cast<std::size_t>(after)])
                                                         : starts[static_cast<std::size_t>(wrap(after, n))] != 0;
  if (left_open && right_open) return {0.0, true};
  return {0.0, false};
}

BranchLengthTable branch_length_table(const EventLog& log, int m_max) {
  if (m_max < 1 || m_max > log.n || (log.topology == Topology::circle && m_max >= log.n)) {
    throw std::invalid_argument("branch_length_table: m_max out of range");
  }
  BranchLengthTable t;
  t.n = log.n;
  t.m_max = m_max;
  t.topology = log.topology;
  t.entries.reserve(static_cast<std::size_t>(log.n * m_max));
  const auto links = link_times(log);
  for (int i = 1; i <= log.n; ++i) {
    for (int m = 1; m <= m_max; ++m) t.entries.push_back(formula_with_cap(log, links, i, m, nullptr));
  }
  return t;
}

CensorableTime total_length(const BranchLengthTable& table, int m) {
  CensorableTime sum{0.0, false};
  for (int i = 1; i <= table.n; ++i) {
    const auto& e = table.at(i, m);
    sum.value += e.value;
    sum.censored = sum.censored || e.censored;
  }
  return sum;
}

CensorableTime interior_total(const BranchLengthTable& table, int m) {
  CensorableTime sum{0.0, false};
  for (int i = 2; i <= table.n - m; ++i) {
    const auto& e = table.at(i, m);
    sum.value += e.value;
    sum.censored = sum.censored || e.censored;
  }
  return sum;
}

SfsVector sfs_sample(const BranchLengthTable& table, double nu, RngStream& stream) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw std::invalid_argument("sfs_sample: nu must be >= 0");
  SfsVector out;
  out.nu = nu;
  for (int m = 1; m <= table.m_max; ++m) {
    const auto total = total_length(table, m);
    const double mean = nu * total.value;
    std::int64_t count = 0;
    if (mean > 0.0) count = std::poisson_distribution<std::int64_t>{mean}(stream);
    out.counts.push_back(count);
    out.censored.push_back(total.censored ? 1 : 0);
  }
  return out;
}

std::vector<Polyline> tree_polylines(const EventLog& log, const std::vector<PositionSample>& samples) {
  if (samples.empty()) throw std::runtime_error("tree drawing needs a run with position sampling enabled");
  std::map<std::pair<int, int>, std::size_t> index;
  std::vector<Polyline> lines;
  for (const auto& s : samples) {
    const auto key = std::make_pair(s.block.lo, s.block.hi);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, lines.size()).first;
      lines.push_back({s.block, {}});
    }
    auto& pts = lines[it->second].points;
    if (pts.empty() || pts.back().first != s.time || pts.back().second != s.x) pts.emplace_back(s.time, s.x);
  }
  auto size_of = [&](const BlockRange& r) {
    return r.hi >= r.lo ? r.hi - r.lo + 1 : r.hi + log.n - r.lo + 1;
  };
  std::stable_sort(lines.begin(), lines.end(), [&](const Polyline& a, const Polyline& b) {
    const bool la = size_of(a.block) == 1;
    const bool lb = size_of(b.block) == 1;
    if (la != lb) return la;
    if (la) return a.block.lo < b.block.lo;
    return a.points.front().first < b.points.front().first;
  });
  return lines;
}

void write_table_csv(std::ostream& out, const BranchLengthTable& table) {
  out << "# coalsfs branch-lengths v1 n=" << table.n << " topology=" << to_string(table.topology) << '\n';
  out << "i,m,length,censored\n";
  for (int i = 1; i <= table.n; ++i) {
    for (int m = 1; m <= table.m_max; ++m) {
      const auto& e = table.at(i, m);
      out << i << ',' << m << ',' << format_double(e.value) << ',' << (e.censored ? 1 : 0) << '\n';
    }
  }
}

void write_sfs_csv(std::ostream& out, const SfsVector& sfs, const BranchLengthTable& table) {
  out << "# coalsfs sfs v1 nu=" << format_double(sfs.nu) << '\n';
  out << "m,count,total_length,censored\n";
  for (int m = 1; m <= table.m_max; ++m) {
    const auto total = total_length(table, m);
    out << m << ',' << sfs.counts[static_cast<std::size_t>(m - 1)] << ',' << format_double(total.value) << ','
        << static_cast<int>(sfs.censored[static_cast<std::size_t>(m - 1)]) << '\n';
  }
}

void write_polylines(std::ostream& out, const std::vector<Polyline>& lines) {
  out << "# coalsfs polylines v1: one block per line, 'lo hi' then time:x pairs\n";
  for (const auto& pl : lines) {
    out << pl.block.lo << ' ' << pl.block.hi;
    for (const auto& [t, x] : pl.points) out << ' ' << format_double(t) << ':' << format_double(x);
    out << '\n';
  }
}

}  // namespace coalsfs

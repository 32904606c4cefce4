#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "coalsfs/coalescent_engine.hpp"
#include "coalsfs/genealogy_sfs.hpp"
#include "coalsfs/mc_harness.hpp"

using namespace coalsfs;

namespace {

EventLog line4() {
  // {2,3} at 1, {1}+{2,3} at 2, {1,2,3}+{4} at 3.5
  return {4, Topology::line, {{1.0, {2, 2}, {3, 3}}, {2.0, {1, 1}, {2, 3}}, {3.5, {1, 3}, {4, 4}}}, 3.5, false, {}, {}};
}

EventLog run(int n, Topology top, std::uint64_t stream, double t_max = 1e4) {
  EngineOptions o;
  o.schedule = {1e-3 / (n * n), 16, 0};
  o.master_seed = 19;
  o.stream_id = stream;
  CoalescentSystem s{n, top, o};
  return s.run_until(StopRule::single(t_max));
}

bool same(const CensorableTime& a, const CensorableTime& b) {
  return a.censored == b.censored && std::abs(a.value - b.value) <= 1e-12;
}

}  // namespace

TEST_CASE("branch lengths of a hand-built line genealogy") {
  const auto log = line4();
  CHECK(branch_length_formula(log, 1, 1).value == 2.0);
  CHECK(branch_length_formula(log, 2, 1).value == 1.0);
  CHECK(branch_length_formula(log, 3, 1).value == 1.0);
  CHECK(branch_length_formula(log, 4, 1).value == 3.5);
  CHECK(branch_length_formula(log, 2, 2).value == 1.0);
  CHECK(branch_length_formula(log, 1, 2).value == 0.0);
  CHECK(branch_length_formula(log, 1, 3).value == 1.5);
  CHECK(branch_length_formula(log, 3, 2).value == 0.0);
  CHECK(branch_length_formula(log, 1, 4).value == 0.0);
  for (int i = 1; i <= 4; ++i) {
    for (int m = 1; m <= 4; ++m) CHECK(same(branch_length_formula(log, i, m), branch_length_scan(log, i, m)));
  }
  CHECK_THROWS_AS(branch_length_formula(log, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(branch_length_formula(log, 1, 0), std::invalid_argument);
}

TEST_CASE("branch lengths on the circle") {
  // n = 3: {3}+{1} at 1 (wrapping), then the ring closes at 2
  EventLog ring{3, Topology::circle, {{1.0, {3, 3}, {1, 1}}, {2.0, {3, 1}, {2, 2}}}, 2.0, false, {}, {}};
  CHECK(branch_length_formula(ring, 1, 1).value == 1.0);
  CHECK(branch_length_formula(ring, 3, 1).value == 1.0);
  CHECK(branch_length_formula(ring, 2, 1).value == 2.0);
  CHECK(branch_length_formula(ring, 3, 2).value == 1.0);
  CHECK(branch_length_formula(ring, 1, 2).value == 0.0);
  for (int i = 1; i <= 3; ++i) {
    for (int m = 1; m <= 2; ++m) CHECK(same(branch_length_formula(ring, i, m), branch_length_scan(ring, i, m)));
  }
  CHECK_THROWS_AS(branch_length_formula(ring, 1, 3), std::invalid_argument);
}

TEST_CASE("censored lengths are lower bounds") {
  // n = 3 line, only {1}+{2} at 1, stopped at 4
  EventLog log{3, Topology::line, {{1.0, {1, 1}, {2, 2}}}, 4.0, true, {}, {}};
  const auto l3 = branch_length_formula(log, 3, 1);
  CHECK(l3.censored);
  CHECK(l3.value == 4.0);
  const auto l12 = branch_length_formula(log, 1, 2);
  CHECK(l12.censored);
  CHECK(l12.value == 3.0);
  CHECK(!branch_length_formula(log, 2, 1).censored);
  CHECK(same(branch_length_scan(log, 1, 2), l12));
  CHECK(same(branch_length_scan(log, 3, 1), l3));
  CHECK(same(branch_length_scan(log, 2, 2), branch_length_formula(log, 2, 2)));
}

TEST_CASE("formula and partition scan agree on engine logs") {
  int compared = 0;
  for (auto top : {Topology::line, Topology::circle}) {
    for (std::uint64_t r = 0; r < 80; ++r) {
      const int n = 3 + static_cast<int>(r % 8);
      const auto log = run(n, top, r, r % 5 == 0 ? 1e-3 : 1e4);  // some runs stop early
      const int m_max = top == Topology::circle ? n - 1 : n;
      for (int i = 1; i <= n; ++i) {
        for (int m = 1; m <= m_max; ++m) {
          INFO("n=" << n << " i=" << i << " m=" << m << " stream=" << r);
          CHECK(same(branch_length_formula(log, i, m), branch_length_scan(log, i, m)));
          ++compared;
        }
      }
    }
  }
  CHECK(compared > 1000);
}

TEST_CASE("lengths per m sum to the time spent with blocks of size m") {
  for (std::uint64_t r = 0; r < 30; ++r) {
    const auto log = run(7, Topology::line, r);
    REQUIRE(!log.censored);
    // integrate (number of blocks of size m) over time by replaying the partition
    std::vector<double> time_in(8, 0.0);
    std::vector<int> size_at(8, 1);  // block size keyed by its first member
    std::vector<int> count(8, 0);
    count[1] = 7;
    double t = 0.0;
    for (const auto& ev : log.events) {
      for (int m = 1; m <= 7; ++m) time_in[m] += count[m] * (ev.time - t);
      t = ev.time;
      const int a = size_at[ev.left.lo], b = size_at[ev.right.lo];
      --count[a];
      --count[b];
      ++count[a + b];
      size_at[ev.left.lo] = a + b;
    }
    const auto table = branch_length_table(log, 6);
    for (int m = 1; m <= 6; ++m) CHECK(total_length(table, m).value == doctest::Approx(time_in[m]).epsilon(1e-9));
  }
}

TEST_CASE("table, totals and interior sums") {
  const auto table = branch_length_table(line4(), 3);
  CHECK(table.at(4, 1).value == 3.5);
  CHECK(total_length(table, 1).value == doctest::Approx(7.5));
  CHECK(interior_total(table, 1).value == doctest::Approx(2.0));  // i = 2, 3
  CHECK(interior_total(table, 2).value == doctest::Approx(1.0));  // i = 2
  CHECK_THROWS_AS((void)table.at(5, 1), std::invalid_argument);
  CHECK_THROWS_AS(branch_length_table(line4(), 5), std::invalid_argument);
}

TEST_CASE("interior sums average one 1/n^2 per term") {
  // Each L_{n,i,m} with 2 <= i <= n-m has mean 1/n^2, so the interior sum
  // has mean (n-m-1)/n^2. Edge-adjacent terms are heavy tailed; the band is wide.
  const int n = 6;
  std::vector<std::pair<int, int>> wanted;
  for (int i = 1; i <= n; ++i) {
    for (int m = 1; m <= 2; ++m) wanted.emplace_back(i, m);
  }
  EngineOptions o;
  o.schedule = {1e-4 / (n * n), 32, 0};
  o.master_seed = 23;
  const auto tables = table_samples(n, Topology::line, 2, StopRule::determined(wanted, 1e4), o, 20000, 1);
  for (int m = 1; m <= 2; ++m) {
    double sum = 0.0;
    for (const auto& t : tables) sum += interior_total(t, m).value;
    const double mean = sum / static_cast<double>(tables.size());
    const double terms = static_cast<double>(n - m - 1) / (n * n);
    INFO("m=" << m << " mean=" << mean);
    CHECK(std::abs(mean - terms) < 0.08 * terms);
    CHECK(mean < 0.9 * static_cast<double>(n - m) / (n * n));
  }
}

TEST_CASE("truncated lengths") {
  const auto log = line4();
  CHECK(truncated_branch_length(log, 4, 1, 1.0).value == 1.0);
  CHECK(truncated_branch_length(log, 4, 1, 1e9).value == 3.5);
  CHECK(truncated_branch_length(log, 2, 2, 0.5).value == 0.0);
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto l = run(6, Topology::circle, r);
    for (int i = 1; i <= 6; ++i) {
      CHECK(truncated_branch_length(l, i, 2, 0.01).value <= branch_length_formula(l, i, 2).value);
      CHECK(same(truncated_branch_length(l, i, 2, INFINITY), branch_length_formula(l, i, 2)));
    }
  }
  CHECK_THROWS_AS(truncated_branch_length(log, 1, 1, -1.0), std::invalid_argument);
}

TEST_CASE("mutation counts") {
  const auto table = branch_length_table(line4(), 2);
  RngStream s{1, 1};
  const auto zero = sfs_sample(table, 0.0, s);
  CHECK(zero.counts == std::vector<std::int64_t>{0, 0});
  CHECK_THROWS_AS(sfs_sample(table, -1.0, s), std::invalid_argument);
  double sum = 0.0, sq = 0.0;
  const int N = 40000;
  for (int k = 0; k < N; ++k) {
    const double x = static_cast<double>(sfs_sample(table, 2.0, s).counts[0]);
    sum += x;
    sq += x * x;
  }
  const double lambda = 2.0 * 7.5;
  const double mean = sum / N;
  CHECK(std::abs(mean - lambda) < 4.0 * std::sqrt(lambda / N));
  CHECK(std::abs(sq / N - mean * mean - lambda) < 4.0 * std::sqrt((lambda + 2 * lambda * lambda) / N));
}

TEST_CASE("tree polylines") {
  EngineOptions o;
  o.schedule = {1e-4 / 36, 16, 0};
  o.master_seed = 6;
  o.sample_every = 1;
  CoalescentSystem s{6, Topology::line, o};
  const auto log = s.run_until(StopRule::single(1e4));
  REQUIRE(!log.censored);
  const auto lines = tree_polylines(log, s.samples());
  CHECK(lines.size() == 11);
  for (int p = 0; p < 6; ++p) CHECK(lines[static_cast<std::size_t>(p)].block.lo == p + 1);
  std::ostringstream os;
  write_polylines(os, lines);
  CHECK(os.str().rfind("# coalsfs polylines v1", 0) == 0);
  CHECK_THROWS_AS(tree_polylines(log, {}), std::runtime_error);
}

TEST_CASE("csv writers carry a versioned header") {
  const auto table = branch_length_table(line4(), 2);
  std::ostringstream a, b;
  write_table_csv(a, table);
  CHECK(a.str().rfind("# coalsfs branch-lengths v1", 0) == 0);
  CHECK(a.str().find("\ni,m,length,censored\n1,1,2,0\n") != std::string::npos);
  CHECK(a.str().find("\n4,1,3.5,0\n") != std::string::npos);
  RngStream s{1, 1};
  write_sfs_csv(b, sfs_sample(table, 0.0, s), table);
  CHECK(b.str().find("1,0,7.5,0") != std::string::npos);
}

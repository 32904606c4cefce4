#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <type_traits>
#include <vector>

#include "coalsfs/coalescent_engine.hpp"
#include "coalsfs/genealogy_sfs.hpp"

namespace coalsfs {

struct McSummary {
  std::size_t replicates = 0;
  double mean = 0.0;
  double variance = 0.0;
  double half_width = 0.0;  // 1.96 * sqrt(variance / replicates)
  std::size_t dropped = 0;

  [[nodiscard]] bool covers(double v) const { return v >= mean - half_width && v <= mean + half_width; }
};

McSummary summarize(std::span<const double> values, std::size_t dropped = 0);

// Linear-interpolation sample quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);
inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

struct Proportion {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double estimate = 0.0;
  double lo = 0.0;  // Wilson score interval
  double hi = 0.0;
};

Proportion wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

/// Runs fn(stream_id) for stream ids 0..R-1 on `workers` threads. The result
/// vector is ordered by stream id, so it does not depend on scheduling.
template <class Fn>
auto run_replicates(std::size_t replicates, int workers, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::uint64_t>> {
  using Result = std::invoke_result_t<Fn&, std::uint64_t>;
  if (replicates < 1) throw std::invalid_argument("run_replicates: need at least one replicate");
  if (workers < 1) throw std::invalid_argument("run_replicates: need at least one worker");
  std::vector<Result> out(replicates);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t id = next.fetch_add(1);
      if (id >= replicates) return;
      try {
        out[id] = fn(static_cast<std::uint64_t>(id));
      } catch (...) {
        std::lock_guard lock{failure_mutex};
        if (!failure) failure = std::current_exception();
        next.store(replicates);
        return;
      }
    }
  };
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), replicates);
  if (count == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < count; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// First merge time of a line system started at `positions`, one per stream id.
std::vector<CensorableTime> first_merge_samples(const std::vector<double>& positions, const EngineOptions& options,
                                                double t_max, std::size_t replicates, int workers);

// Branch-length tables of R full-engine runs; options.stream_id is replaced by the replicate id.
std::vector<BranchLengthTable> table_samples(int n, Topology topology, int m_max, const StopRule& stop,
                                             const EngineOptions& options, std::size_t replicates, int workers);

/// Fraction of samples with |x - 1| > eps. A censored sample is a lower
/// bound: it counts as an exceedance when the bound already exceeds 1 + eps
/// and is otherwise reported as undetermined and left out.
struct Exceedance {
  Proportion fraction;
  std::size_t undetermined = 0;
};

Exceedance exceedance_fraction(std::span<const CensorableTime> samples, double eps);

struct ConvergenceRow {
  int n = 0;
  Exceedance exceed;
  double median = 0.0;
};

// samples: n -> draws of n * L_{n,m}. Requires >= 500 draws per n.
std::vector<ConvergenceRow> convergence_test(const std::map<int, std::vector<CensorableTime>>& samples,
                                             double eps);

struct TailFit {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double exponent = 0.0;
  double std_error = 0.0;
  std::size_t in_range = 0;
};

/// Least-squares slope of log empirical survival against log t over the
/// samples between the q_lo and q_hi quantiles. +inf marks a censored sample.
TailFit tail_fit(std::vector<double> samples, double q_lo = 0.9, double q_hi = 0.999,
                 std::size_t min_samples = 10000);

/// sup |F_emp - F|. Samples equal to +inf are censored: they count in the
/// sample size but the supremum runs over finite points only.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Asymptotic critical value of the two-sample statistic at level alpha.
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

/// Full system and neighbourhood subsystems driven by the same paths.
struct CouplingConfig {
  int n = 200;
  Topology topology = Topology::line;
  int m = 1;
  double epsilon = 0.01;
  std::vector<int> centers;
  EngineOptions options;
  double t_max = 4.0;
  std::size_t replicates = 100;
  int workers = 1;
};

struct CouplingOutcome {
  Proportion discrepancy;
  std::size_t censored = 0;
  // (stream id, center) of every disagreement
  std::vector<std::pair<std::uint64_t, int>> flagged;
  // flagged cases where a particle outside the neighbourhood had already
  // joined a block holding a neighbourhood member when the length settled
  std::size_t flagged_with_outside_merge = 0;
};

CouplingOutcome coupling_discrepancy(const CouplingConfig& config);

/// Centers whose neighbourhoods (radius n^(1/3+eps)) are disjoint with a gap
/// of at least one radius, keeping clear of the line edges.
std::vector<int> spaced_centers(int n, Topology topology, double epsilon, int m);

/// Earliest time at which a block holding members both inside and outside
/// `members` (global indices) forms in `log`; +inf if never.
double first_outside_merge(const EventLog& log, const std::vector<int>& members);

}  // namespace coalsfs

#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "coalsfs/brownian_kernels.hpp"
#include "coalsfs/mc_harness.hpp"

using namespace coalsfs;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Inverse-CDF draws from the two-particle meeting law with gap d:
// P(T > t) = erf(d / (2 sqrt t)), so T = (d / (2 erfinv(u)))^2.
std::vector<double> pair_law_samples(double d, int n, std::uint64_t seed) {
  std::mt19937_64 gen{seed};
  std::uniform_real_distribution<double> uni{0.0, 1.0};
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const double u = uni(gen);
    // bisection on the survival function
    double lo = 1e-12, hi = 1e12;
    for (int k = 0; k < 200; ++k) {
      const double mid = std::sqrt(lo * hi);
      (pair_hit_survival(d, mid) > u ? lo : hi) = mid;
    }
    out.push_back(std::sqrt(lo * hi));
  }
  return out;
}

std::vector<double> pareto(double alpha, int n, std::uint64_t seed) {
  std::mt19937_64 gen{seed};
  std::uniform_real_distribution<double> uni{0.0, 1.0};
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(std::pow(1.0 - uni(gen), -1.0 / alpha));
  return out;
}

}  // namespace

TEST_CASE("summaries") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto s = summarize(v, 1);
  CHECK(s.mean == 2.5);
  CHECK(s.variance == doctest::Approx(5.0 / 3.0));
  CHECK(s.half_width == doctest::Approx(1.96 * std::sqrt(5.0 / 12.0)));
  CHECK(s.dropped == 1);
  CHECK(s.covers(2.0));
  CHECK(!s.covers(5.0));
  CHECK_THROWS_AS(summarize(std::vector<double>{}), std::invalid_argument);
  CHECK(quantile({3, 1, 2}, 0.5) == 2.0);
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({1, 2}, 1.0) == 2.0);
  CHECK(median({1, kInf, 5}) == 5.0);
  CHECK_THROWS_AS(quantile({1.0}, 1.5), std::invalid_argument);
}

TEST_CASE("wilson interval") {
  const auto p = wilson_interval(0, 100);
  CHECK(p.estimate == 0.0);
  CHECK(p.lo == 0.0);
  CHECK(p.hi > 0.0);
  const auto q = wilson_interval(50, 100);
  CHECK(q.lo < 0.5);
  CHECK(q.hi > 0.5);
  CHECK(q.hi - 0.5 == doctest::Approx(0.5 - q.lo));
  CHECK_THROWS_AS(wilson_interval(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(wilson_interval(3, 2), std::invalid_argument);
}

TEST_CASE("replicates do not depend on the worker count") {
  auto fn = [](std::uint64_t id) {
    EngineOptions o;
    o.schedule = {1e-6, 16, 0};
    o.master_seed = 77;
    o.stream_id = id;
    CoalescentSystem s{6, Topology::circle, o};
    return s.run_until(StopRule::single(1e3)).events.back().time;
  };
  const auto one = run_replicates(24, 1, fn);
  const auto four = run_replicates(24, 4, fn);
  CHECK(one == four);
  CHECK(one.size() == 24);
  CHECK(run_replicates(1, 3, fn).front() == fn(0));
  CHECK_THROWS_AS(run_replicates(0, 1, fn), std::invalid_argument);
  CHECK_THROWS_AS(run_replicates(3, 0, fn), std::invalid_argument);
  CHECK_THROWS_AS(run_replicates(5, 2, [](std::uint64_t id) -> int {
                    if (id == 3) throw std::runtime_error("boom");
                    return 0;
                  }),
                  std::runtime_error);
}

TEST_CASE("table samples keep every record") {
  EngineOptions o;
  o.schedule = {1e-4 / 2500, 32, 0};
  const auto t = table_samples(50, Topology::line, 2, StopRule::single(1e4), o, 100, 2);
  CHECK(t.size() == 100);
  for (const auto& x : t) CHECK(x.entries.size() == 100);
}

TEST_CASE("exceedance fractions") {
  std::vector<CensorableTime> ones(600, {1.0, false});
  CHECK(exceedance_fraction(ones, 0.3).fraction.estimate == 0.0);
  std::vector<CensorableTime> mixed;
  for (int i = 0; i < 600; ++i) mixed.push_back({0.5 + i / 300.0, i % 50 == 0});
  CHECK(exceedance_fraction(mixed, kInf).fraction.estimate == 0.0);
  double prev = 2.0;
  for (double eps : {0.0, 0.1, 0.3, 0.6, 1.0, 2.0}) {
    const double f = exceedance_fraction(mixed, eps).fraction.estimate;
    CHECK(f <= prev);
    prev = f;
  }
  // censored at 3 with eps 0.3: known exceedance; censored at 1.1: undetermined
  std::vector<CensorableTime> c{{3.0, true}, {1.1, true}, {1.0, false}};
  const auto e = exceedance_fraction(c, 0.3);
  CHECK(e.undetermined == 1);
  CHECK(e.fraction.successes == 1);
  CHECK(e.fraction.trials == 2);
  CHECK_THROWS_AS(exceedance_fraction(std::vector<CensorableTime>{}, 0.3), std::invalid_argument);
}

TEST_CASE("convergence test") {
  std::map<int, std::vector<CensorableTime>> s;
  s[10] = std::vector<CensorableTime>(500, {1.0, false});
  s[20] = std::vector<CensorableTime>(500, {1.5, false});
  const auto rows = convergence_test(s, 0.3);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].exceed.fraction.estimate == 0.0);
  CHECK(rows[1].exceed.fraction.estimate == 1.0);
  CHECK(rows[1].median == 1.5);
  s[30] = std::vector<CensorableTime>(10, {1.0, false});
  CHECK_THROWS_AS(convergence_test(s, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(convergence_test({}, 0.3), std::invalid_argument);
}

TEST_CASE("tail fit recovers power laws") {
  for (double alpha : {0.5, 1.5, 2.5}) {
    const auto fit = tail_fit(pareto(alpha, 100000, 3), 0.9, 0.999);
    CHECK(std::abs(fit.exponent - alpha) < 2.0 * fit.std_error);
    CHECK(fit.t_lo < fit.t_hi);
    CHECK(fit.in_range > 1000);
  }
  const auto p = tail_fit(pair_law_samples(0.1, 20000, 5), 0.9, 0.999);
  CHECK(p.exponent == doctest::Approx(0.5).epsilon(0.1));
  CHECK_THROWS_AS(tail_fit(pareto(1.0, 500, 1)), std::invalid_argument);
  CHECK_THROWS_AS(tail_fit(std::vector<double>(20000, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(tail_fit(pareto(1.0, 20000, 1), 0.3, 0.9), std::invalid_argument);
}

TEST_CASE("censored samples count in the survival curve") {
  auto x = pareto(1.5, 50000, 8);
  const auto plain = tail_fit(x);
  for (auto& v : x) {
    if (v > 200.0) v = kInf;
  }
  const auto cens = tail_fit(x);
  CHECK(cens.exponent == doctest::Approx(plain.exponent).epsilon(1e-9));
}

TEST_CASE("one-sample KS distance") {
  const auto s = pair_law_samples(0.1, 100000, 9);
  const double d = ks_distance(s, [](double t) { return 1.0 - pair_hit_survival(0.1, t); });
  CHECK(d < 0.006);
  CHECK(ks_distance({0.0}, [](double x) { return 0.5 + 0.5 * std::erf(x); }) == doctest::Approx(0.5));
  // shift half of the mass far to the right
  std::vector<double> shifted;
  std::mt19937_64 gen{2};
  std::uniform_real_distribution<double> uni;
  for (int i = 0; i < 20000; ++i) shifted.push_back(i % 2 ? uni(gen) : 5.0 + uni(gen));
  const double ds = ks_distance(shifted, [](double x) { return std::clamp(x, 0.0, 1.0); });
  CHECK(ds == doctest::Approx(0.5).epsilon(0.03));
  CHECK_THROWS_AS(ks_distance({}, [](double) { return 0.0; }), std::invalid_argument);
}

TEST_CASE("two-sample KS") {
  const auto a = pareto(1.0, 5000, 1), b = pareto(1.0, 5000, 2), c = pareto(2.0, 5000, 3);
  CHECK(ks_two_sample(a, a) == 0.0);
  CHECK(ks_two_sample(a, b) < ks_critical_value(5000, 5000, 0.001));
  CHECK(ks_two_sample(a, c) > ks_critical_value(5000, 5000, 0.001));
  CHECK(ks_critical_value(100, 100, 0.05) == doctest::Approx(1.358 * std::sqrt(0.02)).epsilon(1e-3));
  CHECK_THROWS_AS(ks_critical_value(0, 10, 0.05), std::invalid_argument);
}

TEST_CASE("spaced centers have disjoint neighbourhoods") {
  for (int n : {200, 400, 1000}) {
    const auto c = spaced_centers(n, Topology::line, 0.01, 2);
    REQUIRE(c.size() >= 2);
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
      const auto a = subsystem(n, Topology::line, c[k], 0.01);
      const auto b = subsystem(n, Topology::line, c[k + 1], 0.01);
      CHECK(a.back() + 2 < b.front());
    }
  }
}

TEST_CASE("coupling: neighbourhood equal to the system never disagrees") {
  CouplingConfig cfg;
  cfg.n = 12;
  cfg.epsilon = 1.0;
  cfg.centers = {4, 7};
  cfg.options.schedule = {1e-4 / 144, 16, 0};
  cfg.replicates = 40;
  cfg.t_max = 1e3;
  const auto out = coupling_discrepancy(cfg);
  CHECK(out.discrepancy.successes == 0);
  cfg.topology = Topology::circle;
  cfg.centers = {1};
  CHECK_THROWS_AS(coupling_discrepancy(cfg), std::invalid_argument);
}

TEST_CASE("coupling disagreements follow outside merges") {
  CouplingConfig cfg;
  cfg.n = 200;
  cfg.epsilon = 0.01;
  cfg.centers = spaced_centers(200, Topology::line, 0.01, 1);
  cfg.options.schedule = {1e-4 / 40000, 32, 0};
  cfg.replicates = 60;
  cfg.t_max = 1e4;
  const auto out = coupling_discrepancy(cfg);
  CHECK(out.flagged_with_outside_merge == out.flagged.size());
}

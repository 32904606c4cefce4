#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "coalsfs/brownian_kernels.hpp"
#include "coalsfs/mc_harness.hpp"
#include "coalsfs/rng.hpp"

using namespace coalsfs;

TEST_CASE("philox known-answer vectors") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::encrypt({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::encrypt({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::encrypt({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("substreams are pure functions of their identifiers") {
  const RngStream root{42, 7};
  auto a = root.substream(Purpose::crossing, 1, 2, 3);
  RngStream noise{42, 7};
  for (int i = 0; i < 100; ++i) (void)noise();
  auto b = RngStream{42, 7}.substream(Purpose::crossing, 1, 2, 3);
  for (int i = 0; i < 50; ++i) CHECK(a() == b());

  auto c = root.substream(Purpose::reexamine, 1, 2, 3);
  auto d = root.substream(Purpose::crossing, 1, 2, 4);
  auto e = RngStream{42, 8}.substream(Purpose::crossing, 1, 2, 3);
  auto a2 = root.substream(Purpose::crossing, 1, 2, 3);
  const auto first = a2();
  CHECK(c() != first);
  CHECK(d() != first);
  CHECK(e() != first);
}

TEST_CASE("uniforms stay in the open unit interval and look uniform") {
  RngStream s{1, 1};
  std::vector<double> u(20000);
  for (auto& x : u) {
    x = s.uniform();
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
  }
  const double d = ks_distance(u, [](double x) { return x; });
  CHECK(d < 1.63 / std::sqrt(20000.0));  // 1% level
}

TEST_CASE("standard normal moments") {
  RngStream s{9, 0};
  const int N = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < N; ++i) {
    const double z = standard_normal(s);
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= N;
  m2 /= N;
  m4 /= N;
  CHECK(std::abs(m1) < 4.0 / std::sqrt(N));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / N));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / N));
}

TEST_CASE("stream works with standard distributions") {
  RngStream s{3, 3};
  std::poisson_distribution<int> pois{4.0};
  double sum = 0;
  for (int i = 0; i < 20000; ++i) sum += pois(s);
  CHECK(sum / 20000 == doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("gaussian increment") {
  RngStream s{5, 5};
  CHECK(gaussian_increment(s, 0.0) == 0.0);
  CHECK_THROWS_AS(gaussian_increment(s, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_increment(s, NAN), std::invalid_argument);
}

TEST_CASE("bridge crossing probability") {
  CHECK(bridge_crossing_prob(1.0, 1.0, 2.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(bridge_crossing_prob(0.1, 0.3, 0.02) == doctest::Approx(std::exp(-3.0)));
  CHECK(bridge_crossing_prob(1e-12, 5.0, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(bridge_crossing_prob(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(bridge_crossing_prob(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("bridge crossing probability against a fine discretized bridge") {
  // Bridge from a to b over unit time, variance rate 1, on 4000 substeps.
  std::mt19937_64 gen{11};
  std::normal_distribution<double> nd;
  const double a = 0.4, b = 0.6;
  const int steps = 4000, R = 4000;
  int hits = 0;
  for (int r = 0; r < R; ++r) {
    std::vector<double> w(steps + 1, 0.0);
    for (int i = 1; i <= steps; ++i) w[i] = w[i - 1] + nd(gen) / std::sqrt(double(steps));
    bool hit = false;
    for (int i = 0; i <= steps && !hit; ++i) {
      const double s = double(i) / steps;
      hit = a + (b - a) * s + w[i] - s * w[steps] <= 0.0;
    }
    hits += hit;
  }
  const double p = bridge_crossing_prob(a, b, 1.0);
  const double phat = double(hits) / R;
  // discrete monitoring misses some touches, so allow a small downward bias
  CHECK(phat <= p + 3.0 * std::sqrt(p * (1 - p) / R));
  CHECK(phat >= p - 0.04);
}

TEST_CASE("pair hit survival") {
  CHECK(pair_hit_survival(0.1, 0.0) == 1.0);
  CHECK(pair_hit_survival(0.1, 1e12) == doctest::Approx(0.0).epsilon(1e-6));
  for (double t : {0.001, 0.01, 0.3}) {
    CHECK(pair_hit_survival(0.1, t) == doctest::Approx(2.0 * normal_cdf(0.1 / std::sqrt(2.0 * t)) - 1.0));
  }
  CHECK(pair_hit_survival(0.1, 0.01) > pair_hit_survival(0.1, 0.02));
  CHECK_THROWS_AS(pair_hit_survival(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(pair_hit_survival(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("refinement: edge cases") {
  RngStream s{1, 2};
  CHECK(refine_crossing_time({0.0, 1.0, 1.0, 0.0}, 2.0, 1e-3, s).time == 1.0);
  const auto deg = refine_crossing_time({2.0, 1.0, 1.0, -1.0}, 2.0, 1.0, s);
  CHECK(deg.degenerate);
  CHECK(deg.time == 2.5);
  CHECK_THROWS_AS(refine_crossing_time({0.0, 0.0, 1.0, -1.0}, 2.0, 1e-3, s), std::invalid_argument);
  CHECK_THROWS_AS(refine_crossing_time({0.0, 1.0, 1.0, -1.0}, 0.0, 1e-3, s), std::invalid_argument);
  CHECK_THROWS(refine_crossing_time({0.0, 1e-6, 50.0, 50.0}, 2.0, 1e-9, s));
}

TEST_CASE("refinement stays inside the window") {
  for (std::uint32_t r = 0; r < 500; ++r) {
    auto s = RngStream{7, r}.substream(Purpose::crossing, r, 0, 0);
    const StepWindow w{3.0, 0.01, 0.05, r % 2 ? -0.02 : 0.03};
    const auto t = refine_crossing_time(w, 2.0, 1e-6, s);
    CHECK(t.time >= w.t0);
    CHECK(t.time <= w.t0 + w.dt);
  }
}

TEST_CASE("refined first-passage time has the right law") {
  // Brownian motion from 0.3 started at time 0, one window of length 1 with a
  // known endpoint below zero: the refined time is the first hit of 0 given
  // W(1). Compare P(hit before 1/2) with the exact bridge formula.
  const double a = 0.3, b = -0.2;
  int early = 0;
  const int R = 20000;
  for (std::uint32_t r = 0; r < R; ++r) {
    auto s = RngStream{123, r}.substream(Purpose::crossing, 0, 0, r);
    early += refine_crossing_time({0.0, 1.0, a, b}, 1.0, 1e-5, s).time < 0.5;
  }
  // P(tau <= 1/2 | W1 = b): integrate over the midpoint m ~ N((a+b)/2, 1/4).
  std::mt19937_64 gen{5};
  std::normal_distribution<double> nd{(a + b) / 2.0, 0.5};
  double p = 0.0;
  const int M = 400000;
  for (int i = 0; i < M; ++i) {
    const double m = nd(gen);
    p += m <= 0.0 ? 1.0 : std::exp(-2.0 * a * m / 0.5);
  }
  p /= M;
  CHECK(double(early) / R == doctest::Approx(p).epsilon(0.03));
}

TEST_CASE("step schedule") {
  StepSchedule u{0.5, 0, 0};
  CHECK(u.coarse_start(3) == 1.5);
  CHECK(u.coarse_size(1000) == 0.5);
  StepSchedule g{1.0, 4, 0};
  // 8 unit steps, then 4 of size 2, then 4 of size 4
  double t = 0.0;
  for (std::uint64_t k = 0; k < 40; ++k) {
    CHECK(g.coarse_start(k) == doctest::Approx(t));
    t += g.coarse_size(k);
  }
  CHECK(g.coarse_size(7) == 1.0);
  CHECK(g.coarse_size(8) == 2.0);
  CHECK(g.coarse_size(12) == 4.0);
  for (std::uint64_t k = 8; k < 200; ++k) {
    const double ratio = g.coarse_size(k) / g.coarse_start(k);
    CHECK(ratio > 1.0 / 8.0 - 1e-12);
    CHECK(ratio <= 1.0 / 4.0 + 1e-12);
  }
  StepSchedule f{1.0, 0, 3};
  CHECK(f.fine_per_coarse() == 8);
  CHECK_THROWS_AS((StepSchedule{0.0, 0, 0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((StepSchedule{1.0, -1, 0}.validate()), std::invalid_argument);
}

TEST_CASE("brownian paths are nested under refinement") {
  const BrownianPath path{77, 3};
  const double size = 0.25;
  std::vector<double> coarse(3), fine(9);
  coarse[0] = fine[0] = 1.0;
  coarse[2] = fine[8] = 1.0 + path.coarse_increment(5, 10, size);
  path.fill_fine(5, 10, size, coarse);
  path.fill_fine(5, 10, size, fine);
  CHECK(fine[4] == coarse[1]);
  for (int j = 0; j <= 8; ++j) {
    CHECK(path.value_at(5, 10, size, 1, 0.0, 1.0, fine[0], fine[8], j / 8.0) == doctest::Approx(fine[j]));
  }
}

TEST_CASE("path increments have the right variance") {
  const BrownianPath path{8, 8};
  const int N = 20000;
  double s2 = 0.0, q2 = 0.0;
  for (int e = 0; e < N; ++e) {
    std::vector<double> v(5, 0.0);
    v[4] = path.coarse_increment(static_cast<std::uint32_t>(e), 0, 2.0);
    path.fill_fine(static_cast<std::uint32_t>(e), 0, 2.0, v);
    s2 += v[4] * v[4];
    q2 += v[1] * v[1];
  }
  CHECK(s2 / N == doctest::Approx(2.0).epsilon(0.05));
  CHECK(q2 / N == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("two-sided exit: small-sample mean and censoring") {
  StepSchedule s{1e-4, 16, 0};
  std::vector<double> v;
  for (std::uint64_t r = 0; r < 3000; ++r) v.push_back(two_sided_exit_time(0.5, 0.3, s, 100.0, 1e-3, 4, r).time);
  const auto sum = summarize(v);
  CHECK(std::abs(sum.mean - 0.15) < 4.0 * sum.half_width / 1.96);

  const auto c = two_sided_exit_time(5.0, 5.0, StepSchedule{1e-3, 0, 0}, 0.01, 1e-3, 1, 1);
  CHECK(c.censored);
  CHECK(c.time >= 0.01 - 1e-12);
  CHECK_THROWS_AS(two_sided_exit_time(0.0, 1.0, s, 1.0, 1e-3, 1, 1), std::invalid_argument);
}

TEST_CASE("two-sided exit: law matches an independent fixed-step walk") {
  const double a = 0.4, b = 0.6, dt = 1e-5;
  std::mt19937_64 gen{99};
  std::normal_distribution<double> nd{0.0, std::sqrt(dt)};
  std::uniform_real_distribution<double> uni;
  std::vector<double> brute, engine;
  for (int r = 0; r < 1500; ++r) {
    double w = 0.0, t = 0.0;
    for (;;) {
      const double w1 = w + nd(gen);
      t += dt;
      if (w1 >= a || w1 <= -b) break;
      if (uni(gen) < std::exp(-2.0 * (a - w) * (a - w1) / dt) ||
          uni(gen) < std::exp(-2.0 * (w + b) * (w1 + b) / dt)) {
        break;
      }
      w = w1;
    }
    brute.push_back(t);
  }
  for (std::uint64_t r = 0; r < 1500; ++r) {
    engine.push_back(two_sided_exit_time(a, b, StepSchedule{1e-5, 32, 0}, 100.0, 1e-3, 17, r).time);
  }
  CHECK(ks_two_sample(brute, engine) < ks_critical_value(1500, 1500, 0.001));
}

#include "coalsfs/mc_harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coalsfs/genealogy_sfs.hpp"

namespace coalsfs {

McSummary summarize(std::span<const double> values, std::size_t dropped) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  McSummary s;
  s.replicates = values.size();
  s.dropped = dropped;
  // Welford
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double v : values) {
    ++k;
    const double d = v - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (v - mean);
  }
  s.mean = mean;
  s.variance = k > 1 ? m2 / static_cast<double>(k - 1) : 0.0;
  s.half_width = 1.96 * std::sqrt(s.variance / static_cast<double>(k));
  return s;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

Proportion wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw std::invalid_argument("wilson_interval: no trials");
  if (successes > trials) throw std::invalid_argument("wilson_interval: successes > trials");
  Proportion p;
  p.successes = successes;
  p.trials = trials;
  const double nn = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / nn;
  p.estimate = ph;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (ph + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn)) / denom;
  p.lo = std::max(0.0, centre - half);
  p.hi = std::min(1.0, centre + half);
  return p;
}

std::vector<CensorableTime> first_merge_samples(const std::vector<double>& positions, const EngineOptions& options,
                                                double t_max, std::size_t replicates, int workers) {
  const auto stop = StopRule::at_most(static_cast<int>(positions.size()) - 1, t_max);
  return run_replicates(replicates, workers, [&](std::uint64_t id) {
    EngineOptions opts = options;
    opts.stream_id = id;
    CoalescentSystem sys{positions, opts};
    return first_merge_time(sys.run_until(stop));
  });
}

std::vector<BranchLengthTable> table_samples(int n, Topology topology, int m_max, const StopRule& stop,
                                             const EngineOptions& options, std::size_t replicates, int workers) {
  return run_replicates(replicates, workers, [&](std::uint64_t id) {
    EngineOptions opts = options;
    opts.stream_id = id;
    CoalescentSystem sys{n, topology, opts};
    return branch_length_table(sys.run_until(stop), m_max);
  });
}

Exceedance exceedance_fraction(std::span<const CensorableTime> samples, double eps) {
  if (samples.empty()) throw std::invalid_argument("exceedance_fraction: no samples");
  if (std::isnan(eps) || eps < 0.0) throw std::invalid_argument("exceedance_fraction: eps must be >= 0");
  std::size_t hits = 0;
  std::size_t known = 0;
  std::size_t undetermined = 0;
  for (const auto& s : samples) {
    if (s.censored) {
      if (s.value - 1.0 > eps) {
        ++hits;
        ++known;
      } else {
        ++undetermined;
      }
      continue;
    }
    ++known;
    if (std::abs(s.value - 1.0) > eps) ++hits;
  }
  if (known == 0) throw std::invalid_argument("exceedance_fraction: every sample undetermined");
  return {wilson_interval(hits, known), undetermined};
}

std::vector<ConvergenceRow> convergence_test(const std::map<int, std::vector<CensorableTime>>& samples,
                                             double eps) {
  if (samples.empty()) throw std::invalid_argument("convergence_test: no sample sets");
  std::vector<ConvergenceRow> rows;
  for (const auto& [n, draws] : samples) {
    if (draws.empty()) throw std::invalid_argument("convergence_test: empty sample set");
    if (draws.size() < 500) throw std::invalid_argument("convergence_test: need at least 500 draws per n");
    ConvergenceRow row;
    row.n = n;
    row.exceed = exceedance_fraction(draws, eps);
    std::vector<double> v;
    v.reserve(draws.size());
    for (const auto& d : draws) v.push_back(d.value);
    row.median = median(std::move(v));
    rows.push_back(row);
  }
  return rows;
}

TailFit tail_fit(std::vector<double> samples, double q_lo, double q_hi, std::size_t min_samples) {
  if (samples.size() < min_samples) throw std::invalid_argument("tail_fit: too few samples");
  if (!(q_lo >= 0.5 && q_lo < q_hi && q_hi < 1.0)) {
    throw std::invalid_argument("tail_fit: need 0.5 <= q_lo < q_hi < 1");
  }
  std::sort(samples.begin(), samples.end());
  if (!(samples.front() > 0.0)) throw std::invalid_argument("tail_fit: samples must be positive");
  const std::size_t n = samples.size();
  const auto k_lo = static_cast<std::size_t>(std::ceil(q_lo * static_cast<double>(n)));
  const auto k_hi = static_cast<std::size_t>(std::floor(q_hi * static_cast<double>(n)));
  if (k_hi <= k_lo + 1 || !std::isfinite(samples[k_hi])) {
    throw std::invalid_argument("tail_fit: quantile window is empty or censored");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t cnt = 0;
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    // Survival just below x_(k): fraction of samples >= x_(k).
    const double x = std::log(samples[k]);
    const double y = std::log(static_cast<double>(n - k) / static_cast<double>(n));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  const double c = static_cast<double>(cnt);
  const double var_x = sxx - sx * sx / c;
  if (!(var_x > 0.0) || !(samples[k_hi] > samples[k_lo])) {
    throw std::invalid_argument("tail_fit: degenerate samples (no spread in window)");
  }
  TailFit fit;
  fit.t_lo = samples[k_lo];
  fit.t_hi = samples[k_hi];
  fit.exponent = -(sxy - sx * sy / c) / var_x;
  fit.in_range = cnt;
  const double s_lo = static_cast<double>(n - k_lo) / static_cast<double>(n);
  const double s_hi = static_cast<double>(n - k_hi) / static_cast<double>(n);
  // Quantile noise: Var(log t_q) ~ 1 / (N S alpha^2), nested windows.
  fit.std_error = fit.exponent * std::sqrt((1.0 / s_hi - 1.0 / s_lo) / static_cast<double>(n)) / std::log(s_lo / s_hi);
  return fit;
}

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_distance: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) break;
    const double f = cdf(samples[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  if (n == 0 || m == 0 || !(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ks_critical_value: bad input");
  const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

namespace {

int neighbourhood_radius(int n, double epsilon) {
  return static_cast<int>(std::floor(std::pow(static_cast<double>(n), 1.0 / 3.0 + epsilon) * (1.0 + 1e-12)));
}

bool same_length(const CensorableTime& a, const CensorableTime& b) {
  return std::abs(a.value - b.value) <= 1e-12 + 1e-9 * std::abs(a.value);
}

struct CenterOutcome {
  bool censored = false;
  bool differ = false;
  bool outside_before = false;
};

}  // namespace

std::vector<int> spaced_centers(int n, Topology topology, double epsilon, int m) {
  (void)topology;
  const int r = neighbourhood_radius(n, epsilon);
  const int spacing = 3 * r + m + 1;
  std::vector<int> out;
  for (int c = 2 * r + 1; c + 2 * r + m <= n; c += spacing) out.push_back(c);
  return out;
}

double first_outside_merge(const EventLog& log, const std::vector<int>& members) {
  std::vector<char> inside(static_cast<std::size_t>(log.n) + 1, 0);
  for (int g : members) {
    const int local = log.local_index(g);
    if (local > 0) inside[static_cast<std::size_t>(local)] = 1;
  }
  auto scan = [&](const BlockRange& r, bool& in, bool& out) {
    for (int p = r.lo;; p = p % log.n + 1) {
      (inside[static_cast<std::size_t>(p)] ? in : out) = true;
      if (p == r.hi) break;
    }
  };
  for (const auto& ev : log.events) {
    bool in = false, out = false;
    scan(ev.left, in, out);
    scan(ev.right, in, out);
    if (in && out) return ev.time;
  }
  return std::numeric_limits<double>::infinity();
}

CouplingOutcome coupling_discrepancy(const CouplingConfig& config) {
  if (config.centers.empty()) throw std::invalid_argument("coupling_discrepancy: no centers");
  const int r = neighbourhood_radius(config.n, config.epsilon);
  for (int c : config.centers) {
    if (c < 1 || c > config.n) throw std::invalid_argument("coupling_discrepancy: center out of range");
    if (config.topology == Topology::circle && !(c > r && c < config.n - r)) {
      throw std::invalid_argument("coupling_discrepancy: circle comparison needs an interior center");
    }
  }
  std::vector<std::pair<int, int>> lengths;
  for (int c : config.centers) lengths.emplace_back(c, config.m);

  auto per_replicate = [&](std::uint64_t id) {
    EngineOptions opts = config.options;
    opts.stream_id = id;
    CoalescentSystem full{config.n, config.topology, opts};
    const auto log = full.run_until(StopRule::determined(lengths, config.t_max));
    const auto links = link_times(log);
    std::vector<CenterOutcome> res;
    for (int c : config.centers) {
      const auto members = subsystem(config.n, config.topology, c, config.epsilon);
      auto sub = CoalescentSystem::make_subsystem(config.n, config.topology, c, config.epsilon, opts);
      const int local = static_cast<int>(members.size()) == config.n
                            ? c
                            : static_cast<int>(std::find(members.begin(), members.end(), c) - members.begin()) + 1;
      const auto slog = sub.run_until(StopRule::determined({{local, config.m}}, config.t_max));
      const auto lf = branch_length_formula(log, c, config.m);
      const auto ls = branch_length_formula(slog, local, config.m);
      CenterOutcome o;
      if (lf.censored || ls.censored) {
        o.censored = true;
      } else if (!same_length(lf, ls)) {
        o.differ = true;
        const int left_link = ((c - 2) % config.n + config.n) % config.n;
        const int right_link = (c + config.m - 2) % config.n;
        CensorableTime settle{log.final_clock, true};
        if (config.topology == Topology::circle || c >= 2) settle = censored_min(settle, links[static_cast<std::size_t>(left_link)]);
        if (config.topology == Topology::circle || c + config.m - 1 <= config.n - 1) {
          settle = censored_min(settle, links[static_cast<std::size_t>(right_link)]);
        }
        o.outside_before = first_outside_merge(log, members) <= settle.value;
      }
      res.push_back(o);
    }
    return res;
  };
  const auto all = run_replicates(config.replicates, config.workers, per_replicate);

  CouplingOutcome out;
  std::size_t trials = 0;
  std::size_t hits = 0;
  for (std::size_t id = 0; id < all.size(); ++id) {
    for (std::size_t c = 0; c < all[id].size(); ++c) {
      const auto& o = all[id][c];
      if (o.censored) {
        ++out.censored;
        continue;
      }
      ++trials;
      if (o.differ) {
        ++hits;
        out.flagged.emplace_back(id, config.centers[c]);
        if (o.outside_before) ++out.flagged_with_outside_merge;
      }
    }
  }
  if (trials == 0) throw std::runtime_error("coupling_discrepancy: every comparison was censored");
  out.discrepancy = wilson_interval(hits, trials);
  return out;
}

}  // namespace coalsfs

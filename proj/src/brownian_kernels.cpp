#include "coalsfs/brownian_kernels.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace coalsfs {

namespace {

constexpr std::uint64_t kNodeLimit = std::uint64_t{1} << 32;

// Rejection sampling of the conditioned midpoint is bounded; the expected
// number of proposals is 1/P(crossing) for the current interval.
constexpr int kMaxRejections = 50'000'000;

std::uint32_t low32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }

}  // namespace

double gaussian_increment(RngStream& stream, double variance) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument("gaussian_increment: variance must be finite and nonnegative");
  }
  if (variance == 0.0) return 0.0;
  return std::sqrt(variance) * standard_normal(stream);
}

double bridge_crossing_prob(double a, double b, double sigma2dt) {
  if (!(sigma2dt > 0.0)) throw std::invalid_argument("bridge_crossing_prob: sigma2dt must be > 0");
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("bridge_crossing_prob: endpoints must be positive");
  }
  return std::exp(-2.0 * a * b / sigma2dt);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double pair_hit_survival(double d, double t) {
  if (!(d > 0.0) || !(t >= 0.0)) throw std::invalid_argument("pair_hit_survival: need d > 0, t >= 0");
  if (t == 0.0) return 1.0;
  // 2 Phi(d / sqrt(2t)) - 1 == erf(d / (2 sqrt t))
  return std::erf(d / (2.0 * std::sqrt(t)));
}

RefinedTime refine_crossing_time(const StepWindow& window, double sigma2_rate, double tolerance,
                                 RngStream& stream, MidpointSource* source) {
  if (!(window.dt > 0.0) || !std::isfinite(window.a) || !std::isfinite(window.b)) {
    throw std::invalid_argument("refine_crossing_time: bad window");
  }
  if (!(sigma2_rate > 0.0) || !(tolerance > 0.0)) {
    throw std::invalid_argument("refine_crossing_time: sigma2_rate and tolerance must be > 0");
  }
  if (tolerance >= window.dt) return {window.t0 + 0.5 * window.dt, true};
  if (window.a <= 0.0) return {window.t0, false};
  if (window.b == 0.0) return {window.t0 + window.dt, false};

  bool certain = window.b < 0.0;
  if (!certain && bridge_crossing_prob(window.a, window.b, sigma2_rate * window.dt) == 0.0) {
    throw std::logic_error("refine_crossing_time: window cannot contain a crossing");
  }

  double l = window.t0;
  double r = window.t0 + window.dt;
  double gl = window.a;
  double gr = window.b;
  bool use_source = source != nullptr && certain;

  while (0.5 * (r - l) > tolerance) {
    const double h = r - l;
    const double m = l + 0.5 * h;
    const double mean = 0.5 * (gl + gr);
    const double sd = std::sqrt(sigma2_rate * h / 4.0);
    const double half_var = sigma2_rate * h / 2.0;

    if (certain) {
      const double c = use_source ? source->midpoint() : mean + sd * standard_normal(stream);
      bool left = true;
      if (c > 0.0) left = stream.uniform() < std::exp(-2.0 * gl * c / half_var);
      if (use_source) source->descend(left);
      if (left) {
        r = m;
        gr = c;
        if (c > 0.0) {
          certain = false;
          use_source = false;
        }
      } else {
        l = m;
        gl = c;
      }
      continue;
    }

    // Both endpoints positive, crossing asserted: midpoint from the bridge law
    // conditioned on the bridge touching zero.
    double c = 0.0;
    double p_left = 1.0;
    double q = 1.0;
    int tries = 0;
    for (;; ++tries) {
      if (tries >= kMaxRejections) {
        throw std::logic_error("refine_crossing_time: conditioned midpoint sampling did not converge");
      }
      c = mean + sd * standard_normal(stream);
      if (c <= 0.0) {
        p_left = 1.0;
        q = 1.0;
        break;
      }
      p_left = std::exp(-2.0 * gl * c / half_var);
      const double p_right = std::exp(-2.0 * c * gr / half_var);
      q = 1.0 - (1.0 - p_left) * (1.0 - p_right);
      if (stream.uniform() < q) break;
    }
    if (c <= 0.0) {
      r = m;
      gr = c;
      certain = true;
    } else if (stream.uniform() * q < p_left) {
      r = m;
      gr = c;
    } else {
      l = m;
      gl = c;
    }
  }
  return {l, false};
}

void StepSchedule::validate() const {
  if (!(base_dt > 0.0) || !std::isfinite(base_dt)) {
    throw std::invalid_argument("StepSchedule: base_dt must be positive");
  }
  if (steps_per_doubling < 0) throw std::invalid_argument("StepSchedule: steps_per_doubling < 0");
  if (substep_log2 < 0 || substep_log2 > 16) {
    throw std::invalid_argument("StepSchedule: substep_log2 must be in [0, 16]");
  }
}

double StepSchedule::coarse_size(std::uint64_t k) const {
  const auto d = static_cast<std::uint64_t>(steps_per_doubling);
  if (d == 0 || k < 2 * d) return base_dt;
  const auto phase = 1 + (k - 2 * d) / d;
  return std::ldexp(base_dt, static_cast<int>(phase));
}

double StepSchedule::coarse_start(std::uint64_t k) const {
  const auto d = static_cast<std::uint64_t>(steps_per_doubling);
  if (d == 0 || k < 2 * d) return static_cast<double>(k) * base_dt;
  const auto idx = (k - 2 * d) % d;
  return static_cast<double>(d + idx) * coarse_size(k);
}

double BrownianPath::coarse_increment(std::uint32_t entity, std::uint64_t k, double size) const {
  auto s = stream_.substream(Purpose::path_root, low32(k), entity, low32(k >> 32));
  return std::sqrt(size) * standard_normal(s);
}

double BrownianPath::node_normal(std::uint32_t entity, std::uint64_t k, std::uint64_t node) const {
  if (node < kNodeLimit) {
    auto s = stream_.substream(Purpose::path_node, low32(k), entity, low32(node));
    return standard_normal(s);
  }
  auto s = stream_.substream(Purpose::path_leaf, low32(k), entity, low32(node ^ (node >> 32)));
  return standard_normal(s);
}

void BrownianPath::fill_fine(std::uint32_t entity, std::uint64_t k, double size,
                             std::span<double> out) const {
  const std::size_t fine = out.size() - 1;
  for (std::size_t width = fine, first_node = 1; width > 1; width /= 2, first_node *= 2) {
    const double len = static_cast<double>(width) / static_cast<double>(fine);
    const double sd = std::sqrt(len * size / 4.0);
    for (std::size_t i = 0; i * width < fine; ++i) {
      const std::size_t lo = i * width;
      const std::size_t hi = lo + width;
      out[lo + width / 2] =
          0.5 * (out[lo] + out[hi]) + sd * node_normal(entity, k, first_node + i);
    }
  }
}

double BrownianPath::value_at(std::uint32_t entity, std::uint64_t k, double size,
                              std::uint64_t node, double lo, double hi, double v_lo, double v_hi,
                              double x) const {
  for (int depth = 0; depth < 64; ++depth) {
    if (x <= lo) return v_lo;
    if (x >= hi) return v_hi;
    const double mid = lo + 0.5 * (hi - lo);
    const double vm = 0.5 * (v_lo + v_hi) + std::sqrt((hi - lo) * size / 4.0) * node_normal(entity, k, node);
    if (x == mid || mid <= lo || mid >= hi) return vm;
    if (x < mid) {
      hi = mid;
      v_hi = vm;
      node = 2 * node;
    } else {
      lo = mid;
      v_lo = vm;
      node = 2 * node + 1;
    }
  }
  return v_lo + (x - lo) / (hi - lo) * (v_hi - v_lo);
}

double PathCursor::midpoint() const {
  return 0.5 * (v_lo + v_hi) + std::sqrt((hi - lo) * size / 4.0) * path->node_normal(entity, k, node);
}

void PathCursor::descend(bool left, double v_mid) {
  const double mid = lo + 0.5 * (hi - lo);
  if (left) {
    hi = mid;
    v_hi = v_mid;
    node = 2 * node;
  } else {
    lo = mid;
    v_lo = v_mid;
    node = 2 * node + 1;
  }
}

namespace {

// Gap to one barrier: sign * W + offset.
class BarrierSource final : public MidpointSource {
 public:
  BarrierSource(PathCursor cursor, double sign, double offset)
      : cursor_{cursor}, sign_{sign}, offset_{offset} {}

  double midpoint() override {
    last_ = cursor_.midpoint();
    return sign_ * last_ + offset_;
  }
  void descend(bool left) override { cursor_.descend(left, last_); }

 private:
  PathCursor cursor_;
  double sign_;
  double offset_;
  double last_ = 0.0;
};

}  // namespace

ExitSample two_sided_exit_time(double upper, double lower, const StepSchedule& schedule,
                               double t_max, double tolerance_fraction, std::uint64_t master_seed,
                               std::uint64_t stream_id) {
  if (!(upper > 0.0) || !(lower > 0.0)) {
    throw std::invalid_argument("two_sided_exit_time: barriers must be positive distances");
  }
  schedule.validate();
  const BrownianPath path{master_seed, stream_id};
  const int fine = schedule.fine_per_coarse();
  std::vector<double> values(static_cast<std::size_t>(fine) + 1);
  double w = 0.0;

  for (std::uint64_t k = 0;; ++k) {
    const double start = schedule.coarse_start(k);
    if (start >= t_max) return {start, true};
    const double size = schedule.coarse_size(k);
    values.front() = w;
    values.back() = w + path.coarse_increment(0, k, size);
    path.fill_fine(0, k, size, values);

    const double h = size / fine;
    for (int j = 0; j < fine; ++j) {
      const double t0 = start + j * h;
      const double w0 = values[static_cast<std::size_t>(j)];
      const double w1 = values[static_cast<std::size_t>(j) + 1];
      double best = std::numeric_limits<double>::infinity();
      for (int side = 0; side < 2; ++side) {
        const double sign = side == 0 ? -1.0 : 1.0;
        const double offset = side == 0 ? upper : lower;
        const StepWindow win{t0, h, sign * w0 + offset, sign * w1 + offset};
        auto rng = path.stream().substream(Purpose::barrier, low32(k), static_cast<std::uint32_t>(side),
                                           static_cast<std::uint32_t>(j));
        bool crossed = win.b <= 0.0;
        if (!crossed && win.a * win.b / h < 350.0) crossed = rng.uniform() < bridge_crossing_prob(win.a, win.b, h);
        if (!crossed) continue;
        PathCursor cursor{&path, 0, k, size, static_cast<std::uint64_t>(fine + j),
                          static_cast<double>(j) / fine, static_cast<double>(j + 1) / fine, w0, w1};
        BarrierSource source{cursor, sign, offset};
        const auto refined = refine_crossing_time(win, 1.0, h * tolerance_fraction, rng, &source);
        best = std::min(best, refined.time);
      }
      if (best < std::numeric_limits<double>::infinity()) return {best, false};
    }
    w = values.back();
  }
}

}  // namespace coalsfs

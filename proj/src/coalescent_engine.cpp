#include "coalsfs/coalescent_engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "coalsfs/text.hpp"

namespace coalsfs {

namespace {

constexpr int kMaxParticles = 65535;  // global indices share a 32-bit key word with the substep

// Bridge crossing probabilities below exp(-700) are treated as zero; the
// uniform is never drawn for them.
constexpr double kNegligibleExponent = 700.0;

std::uint32_t pair_key(int right_global, std::size_t substep) {
  return static_cast<std::uint32_t>(right_global) | (static_cast<std::uint32_t>(substep) << 16);
}

// Gap between two representatives, midpoints read from their paths.
class GapSource final : public MidpointSource {
 public:
  GapSource(PathCursor left, PathCursor right, double shift)
      : left_{left}, right_{right}, shift_{shift} {}

  double midpoint() override {
    ml_ = left_.midpoint();
    mr_ = right_.midpoint();
    return (mr_ - ml_) + shift_;
  }
  void descend(bool left) override {
    left_.descend(left, ml_);
    right_.descend(left, mr_);
  }

 private:
  PathCursor left_, right_;
  double shift_;
  double ml_ = 0.0, mr_ = 0.0;
};

int range_size(const BlockRange& r, int n) { return r.hi >= r.lo ? r.hi - r.lo + 1 : r.hi + n - r.lo + 1; }

}  // namespace

CensorableTime censored_max(CensorableTime a, CensorableTime b) {
  return {std::max(a.value, b.value), a.censored || b.censored};
}

CensorableTime censored_min(CensorableTime a, CensorableTime b) {
  if (a.censored == b.censored) return {std::min(a.value, b.value), a.censored};
  if (a.censored) std::swap(a, b);
  // a exact, b only a lower bound
  return a.value <= b.value ? a : b;
}

std::string to_string(Topology t) { return t == Topology::line ? "line" : "circle"; }

Topology parse_topology(const std::string& s) {
  if (s == "line") return Topology::line;
  if (s == "circle") return Topology::circle;
  throw std::invalid_argument("unknown topology '" + s + "' (expected line or circle)");
}

int EventLog::local_index(int global_idx) const {
  if (global.empty()) return (global_idx >= 1 && global_idx <= n) ? global_idx : 0;
  for (std::size_t p = 0; p < global.size(); ++p) {
    if (global[p] == global_idx) return static_cast<int>(p) + 1;
  }
  return 0;
}

std::vector<int> subsystem(int n, Topology topology, int center, double epsilon) {
  if (n < 2) throw std::invalid_argument("subsystem: n must be >= 2");
  if (center < 1 || center > n) throw std::invalid_argument("subsystem: center out of range");
  if (!(epsilon > 0.0)) throw std::invalid_argument("subsystem: epsilon must be > 0");
  // d_n(i, j) <= n^(-2/3 + eps)  <=>  index distance <= n^(1/3 + eps)
  const double reach = std::pow(static_cast<double>(n), 1.0 / 3.0 + epsilon) * (1.0 + 1e-12);
  const int r = static_cast<int>(std::floor(reach));
  std::vector<int> out;
  if (topology == Topology::line) {
    for (int j = std::max(1, center - r); j <= std::min(n, center + r); ++j) out.push_back(j);
    return out;
  }
  if (2 * r + 1 >= n) {
    for (int j = 1; j <= n; ++j) out.push_back(j);
    return out;
  }
  for (int d = -r; d <= r; ++d) out.push_back(((center - 1 + d) % n + n) % n + 1);
  return out;
}

SystemState init_system(int n, Topology topology) {
  return CoalescentSystem{n, topology, EngineOptions{}}.state();
}

CoalescentSystem::CoalescentSystem(int n, Topology topology, const EngineOptions& options)
    : CoalescentSystem(
          [n] {
            if (n < 2) throw std::invalid_argument("init_system: n must be >= 2");
            std::vector<double> x(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = static_cast<double>(i + 1) / n;
            return x;
          }(),
          {}, topology, options, false) {}

CoalescentSystem::CoalescentSystem(std::vector<double> positions, const EngineOptions& options)
    : CoalescentSystem(std::move(positions), {}, Topology::line, options, false) {}

CoalescentSystem CoalescentSystem::make_subsystem(int n, Topology topology, int center,
                                                  double epsilon, const EngineOptions& options) {
  auto members = subsystem(n, topology, center, epsilon);
  if (static_cast<int>(members.size()) == n) return CoalescentSystem{n, topology, options};
  std::vector<double> x0;
  double wraps = 0.0;
  for (std::size_t p = 0; p < members.size(); ++p) {
    if (p > 0 && members[p] < members[p - 1]) wraps += 1.0;
    x0.push_back(static_cast<double>(members[p]) / n + wraps);
  }
  return CoalescentSystem{std::move(x0), std::move(members), Topology::line, options, true};
}

CoalescentSystem::CoalescentSystem(std::vector<double> x0, std::vector<int> global,
                                   Topology topology, const EngineOptions& options,
                                   bool is_subsystem)
    : n_{static_cast<int>(x0.size())},
      topology_{topology},
      options_{options},
      path_{options.master_seed, options.stream_id},
      x0_{std::move(x0)},
      global_{std::move(global)},
      is_subsystem_{is_subsystem} {
  if (n_ < 2) throw std::invalid_argument("coalescent system needs at least 2 particles");
  if (n_ > kMaxParticles) throw std::invalid_argument("coalescent system supports at most 65535 particles");
  options_.schedule.validate();
  if (options_.schedule.substep_log2 > 12) {
    throw std::invalid_argument("coalescent system: substep_log2 must be <= 12");
  }
  if (!(options_.tolerance_fraction > 0.0)) {
    throw std::invalid_argument("coalescent system: tolerance fraction must be > 0");
  }
  if (global_.empty()) {
    global_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) global_[static_cast<std::size_t>(i)] = i + 1;
  }
  for (int p = 1; p < n_; ++p) {
    if (!(x0_[static_cast<std::size_t>(p)] > x0_[static_cast<std::size_t>(p - 1)])) {
      throw std::invalid_argument("starting coordinates must be strictly increasing");
    }
  }
  if (topology_ == Topology::circle && !(x0_.back() - x0_.front() < 1.0)) {
    throw std::invalid_argument("circle coordinates must span less than one turn");
  }
  const auto un = static_cast<std::size_t>(n_);
  start_.resize(un);
  end_.resize(un);
  size_.assign(un, 1);
  next_.resize(un);
  prev_.resize(un);
  offset_.assign(un, 0.0);
  alive_.assign(un, 1);
  w_.assign(un, 0.0);
  link_joined_.assign(un, 0);
  const bool circle = topology_ == Topology::circle;
  for (int p = 0; p < n_; ++p) {
    start_[static_cast<std::size_t>(p)] = p;
    end_[static_cast<std::size_t>(p)] = p;
    next_[static_cast<std::size_t>(p)] = p + 1 < n_ ? p + 1 : (circle ? 0 : -1);
    prev_[static_cast<std::size_t>(p)] = p > 0 ? p - 1 : (circle ? n_ - 1 : -1);
  }
  head_ = 0;
  blocks_ = n_;
  if (options_.sample_every > 0) sample_blocks(0.0);
}

double CoalescentSystem::wrap_shift(int right) const {
  return topology_ == Topology::circle && right == head_ ? 1.0 : 0.0;
}

double CoalescentSystem::position(int id, std::size_t grid) const {
  const auto stride = static_cast<std::size_t>(options_.schedule.fine_per_coarse()) + 1;
  const auto u = static_cast<std::size_t>(id);
  return x0_[u] + offset_[u] + fine_[u * stride + grid];
}

double CoalescentSystem::position_at(int id, double t) const {
  const int fine = options_.schedule.fine_per_coarse();
  const auto stride = static_cast<std::size_t>(fine) + 1;
  const auto u = static_cast<std::size_t>(id);
  const double lo = static_cast<double>(fine_j_) / fine;
  const double hi = static_cast<double>(fine_j_ + 1) / fine;
  const double x = std::clamp((t - step_start_) / step_size_, lo, hi);
  const double w = path_.value_at(static_cast<std::uint32_t>(global_[u]), k_, step_size_,
                                  static_cast<std::uint64_t>(fine) + fine_j_, lo, hi,
                                  fine_[u * stride + fine_j_], fine_[u * stride + fine_j_ + 1], x);
  return x0_[u] + offset_[u] + w;
}

BlockRange CoalescentSystem::range_of(int id) const {
  const auto u = static_cast<std::size_t>(id);
  return {start_[u] + 1, end_[u] + 1};
}

bool CoalescentSystem::link_joined(int member_pos) const {
  return link_joined_[static_cast<std::size_t>(member_pos)] != 0;
}

void CoalescentSystem::sample_blocks(double t) {
  if (blocks_ == 0) return;
  const bool have_grid = !fine_.empty();
  int id = head_;
  for (int c = 0; c < blocks_; ++c, id = next_[static_cast<std::size_t>(id)]) {
    const auto u = static_cast<std::size_t>(id);
    const double x = x0_[u] + offset_[u] + (have_grid ? w_[u] : 0.0);
    samples_.push_back({t, range_of(id), x});
  }
}

void CoalescentSystem::decide_link(int a, int b, std::vector<Candidate>& heap) {
  const int fine = options_.schedule.fine_per_coarse();
  const double h = step_size_ / fine;
  const double t0 = step_start_ + static_cast<double>(fine_j_) * h;
  const double shift = wrap_shift(b);
  const double g0 = position(b, fine_j_) - position(a, fine_j_) + shift;
  const double g1 = position(b, fine_j_ + 1) - position(a, fine_j_ + 1) + shift;
  const auto ua = static_cast<std::size_t>(a);
  const auto ub = static_cast<std::size_t>(b);
  auto rng = path_.stream().substream(Purpose::crossing, static_cast<std::uint32_t>(k_),
                                      static_cast<std::uint32_t>(global_[ua]),
                                      pair_key(global_[ub], fine_j_));
  const double dt = fine_t1_ - t0;
  if (g0 <= 0.0) {
    heap.push_back({t0, a, b, false});
    std::push_heap(heap.begin(), heap.end(), std::greater<>{});
    return;
  }
  const bool certain = g1 <= 0.0;
  if (!certain) {
    const double arg = g0 * g1 / dt;
    if (arg > kNegligibleExponent || !(rng.uniform() < std::exp(-arg))) return;
  }

  const StepWindow win{t0, dt, g0, g1};
  const double tol = options_.tolerance_fraction * h;
  RefinedTime rt;
  if (certain) {
    const auto fine_u = static_cast<std::size_t>(fine);
    const auto stride = fine_u + 1;
    const double lo = static_cast<double>(fine_j_) / fine;
    const double hi = static_cast<double>(fine_j_ + 1) / fine;
    const auto node = static_cast<std::uint64_t>(fine) + fine_j_;
    PathCursor ca{&path_, static_cast<std::uint32_t>(global_[ua]), k_, step_size_, node, lo, hi,
                  fine_[ua * stride + fine_j_], fine_[ua * stride + fine_j_ + 1]};
    PathCursor cb{&path_, static_cast<std::uint32_t>(global_[ub]), k_, step_size_, node, lo, hi,
                  fine_[ub * stride + fine_j_], fine_[ub * stride + fine_j_ + 1]};
    GapSource src{ca, cb, (x0_[ub] + offset_[ub]) - (x0_[ua] + offset_[ua]) + shift};
    rt = refine_crossing_time(win, 2.0, tol, rng, &src);
  } else {
    rt = refine_crossing_time(win, 2.0, tol, rng);
  }
  heap.push_back({rt.time, a, b, !rt.degenerate && g1 != 0.0});
  std::push_heap(heap.begin(), heap.end(), std::greater<>{});
}

void CoalescentSystem::reexamine(int a, int b, double t, std::vector<Candidate>& heap) {
  const double shift = wrap_shift(b);
  const double ga = position_at(b, t) - position_at(a, t) + shift;
  const double g1 = position(b, fine_j_ + 1) - position(a, fine_j_ + 1) + shift;
  const double dt = fine_t1_ - t;
  auto push = [&](double time, bool refined) {
    heap.push_back({time, a, b, refined});
    std::push_heap(heap.begin(), heap.end(), std::greater<>{});
  };
  if (ga <= 0.0) {
    push(t, false);
    return;
  }
  if (!(dt > 0.0)) {
    if (g1 <= 0.0) push(t, false);
    return;
  }
  auto rng = path_.stream().substream(Purpose::reexamine, static_cast<std::uint32_t>(k_),
                                      static_cast<std::uint32_t>(global_[static_cast<std::size_t>(a)]),
                                      pair_key(global_[static_cast<std::size_t>(b)], fine_j_));
  const bool certain = g1 <= 0.0;
  if (!certain) {
    const double arg = ga * g1 / dt;
    if (arg > kNegligibleExponent || !(rng.uniform() < std::exp(-arg))) return;
  }
  const double h = step_size_ / options_.schedule.fine_per_coarse();
  const auto rt = refine_crossing_time({t, dt, ga, g1}, 2.0, options_.tolerance_fraction * h, rng);
  push(rt.time, !rt.degenerate && g1 != 0.0);
}

void CoalescentSystem::merge(const Candidate& c, std::vector<Candidate>& heap) {
  double tau = c.time;
  if (!(tau > last_event_)) tau = std::nextafter(last_event_, std::numeric_limits<double>::infinity());
  const int a = c.left;
  const int b = c.right;
  const auto ua = static_cast<std::size_t>(a);
  const auto ub = static_cast<std::size_t>(b);
  const int s = global_[ua] < global_[ub] ? a : b;
  const int other = s == a ? b : a;
  const auto us = static_cast<std::size_t>(s);

  MergeEvent ev{tau, range_of(a), range_of(b), c.refined};
  link_joined_[static_cast<std::size_t>(end_[ua])] = 1;
  const bool sampling = options_.sample_every > 0;
  double xs = 0.0;
  if (sampling) {
    xs = position_at(s, tau);
    samples_.push_back({tau, ev.left, xs});
    samples_.push_back({tau, ev.right, xs});
  }

  if (topology_ == Topology::circle && blocks_ == 2) {
    link_joined_[static_cast<std::size_t>(end_[ub])] = 1;
    start_[us] = start_[ua];
    end_[us] = end_[ub];
    size_[us] = n_;
    next_[us] = prev_[us] = s;
    head_ = s;
  } else {
    const int p = prev_[ua];
    const int nn = next_[ub];
    const bool wrap = topology_ == Topology::circle && b == head_;
    start_[us] = start_[ua];
    end_[us] = end_[ub];
    size_[us] = size_[ua] + size_[ub];
    prev_[us] = p;
    next_[us] = nn;
    if (p != -1) next_[static_cast<std::size_t>(p)] = s;
    if (nn != -1) prev_[static_cast<std::size_t>(nn)] = s;
    if (head_ == a || head_ == b) head_ = s;
    if (wrap && s == a) offset_[us] -= 1.0;
  }
  alive_[static_cast<std::size_t>(other)] = 0;
  --blocks_;
  events_.push_back(ev);
  last_event_ = tau;
  if (sampling) samples_.push_back({tau, range_of(s), xs});

  if (blocks_ >= 2) {
    if (s == a) {
      const int nb = next_[us];
      if (nb != -1) reexamine(s, nb, tau, heap);
    } else {
      const int pb = prev_[us];
      if (pb != -1) reexamine(pb, s, tau, heap);
    }
  }
}

std::vector<MergeEvent> CoalescentSystem::step() {
  const auto& sched = options_.schedule;
  const std::size_t first_event = events_.size();
  step_start_ = sched.coarse_start(k_);
  step_size_ = sched.coarse_size(k_);
  const double step_end = sched.coarse_start(k_ + 1);
  const int fine = sched.fine_per_coarse();
  const auto stride = static_cast<std::size_t>(fine) + 1;
  fine_.resize(static_cast<std::size_t>(n_) * stride);

  int id = head_;
  for (int c = 0; c < blocks_; ++c, id = next_[static_cast<std::size_t>(id)]) {
    const auto u = static_cast<std::size_t>(id);
    std::span<double> vals{fine_.data() + u * stride, stride};
    vals.front() = w_[u];
    vals.back() = w_[u] + path_.coarse_increment(static_cast<std::uint32_t>(global_[u]), k_, step_size_);
    if (fine > 1) path_.fill_fine(static_cast<std::uint32_t>(global_[u]), k_, step_size_, vals);
  }

  std::vector<Candidate> heap;
  const double h = step_size_ / fine;
  for (int j = 0; j < fine; ++j) {
    fine_j_ = static_cast<std::size_t>(j);
    fine_t1_ = j + 1 == fine ? step_end : step_start_ + (j + 1) * h;
    if (blocks_ < 2) break;
    heap.clear();
    id = head_;
    const int count = blocks_;
    for (int c = 0; c < count; ++c, id = next_[static_cast<std::size_t>(id)]) {
      const int nb = next_[static_cast<std::size_t>(id)];
      if (nb == -1) break;
      decide_link(id, nb, heap);
    }
    while (!heap.empty()) {
      std::pop_heap(heap.begin(), heap.end(), std::greater<>{});
      const Candidate cand = heap.back();
      heap.pop_back();
      if (!alive_[static_cast<std::size_t>(cand.left)] || !alive_[static_cast<std::size_t>(cand.right)] ||
          next_[static_cast<std::size_t>(cand.left)] != cand.right || cand.left == cand.right) {
        continue;
      }
      merge(cand, heap);
    }
  }

  id = head_;
  for (int c = 0; c < blocks_; ++c, id = next_[static_cast<std::size_t>(id)]) {
    const auto u = static_cast<std::size_t>(id);
    w_[u] = fine_[u * stride + static_cast<std::size_t>(fine)];
  }
  clock_ = step_end;
  ++k_;
  if (options_.sample_every > 0 && k_ % static_cast<std::uint64_t>(options_.sample_every) == 0) {
    sample_blocks(clock_);
  }
  return {events_.begin() + static_cast<std::ptrdiff_t>(first_event), events_.end()};
}

bool CoalescentSystem::stop_satisfied(const StopRule& stop) const {
  switch (stop.kind) {
    case StopRule::Kind::single_block:
      return blocks_ == 1;
    case StopRule::Kind::blocks_at_most:
      return blocks_ <= stop.m;
    case StopRule::Kind::all_blocks_larger_than: {
      int id = head_;
      for (int c = 0; c < blocks_; ++c, id = next_[static_cast<std::size_t>(id)]) {
        if (size_[static_cast<std::size_t>(id)] <= stop.m) return false;
      }
      return true;
    }
    case StopRule::Kind::lengths_determined: {
      const bool circle = topology_ == Topology::circle;
      for (const auto& [i, m] : stop.lengths) {
        if (i < 1 || i > n_ || m < 1 || m > n_) throw std::invalid_argument("stop rule: length index out of range");
        if (!circle && i >= n_ - m + 2) continue;
        bool det = false;
        if (circle) {
          det = link_joined(((i - 2) % n_ + n_) % n_) || link_joined((i + m - 2) % n_);
        } else {
          det = (i >= 2 && link_joined(i - 2)) || (i + m - 1 <= n_ - 1 && link_joined(i + m - 2));
        }
        if (!det) return false;
      }
      return true;
    }
  }
  return false;
}

EventLog CoalescentSystem::run_until(const StopRule& stop) {
  if (!(stop.t_max > 0.0) || std::isnan(stop.t_max)) throw std::invalid_argument("run_until: t_max must be > 0");
  bool censored = false;
  for (;;) {
    if (stop_satisfied(stop)) break;
    if (clock_ >= stop.t_max) {
      censored = true;
      break;
    }
    step();
  }
  if (options_.sample_every > 0) sample_blocks(clock_);

  EventLog log;
  log.n = n_;
  log.topology = topology_;
  log.events = events_;
  log.final_clock = clock_;
  log.censored = censored;
  log.echo = {options_.schedule.base_dt, options_.schedule.steps_per_doubling,
              options_.schedule.substep_log2, options_.tolerance_fraction, options_.master_seed,
              options_.stream_id};
  if (is_subsystem_) log.global = global_;
  return log;
}

SystemState CoalescentSystem::state() const {
  SystemState st;
  st.n = n_;
  st.topology = topology_;
  st.clock = clock_;
  int id = head_;
  for (int c = 0; c < blocks_; ++c, id = next_[static_cast<std::size_t>(id)]) {
    const auto u = static_cast<std::size_t>(id);
    double x = x0_[u] + offset_[u] + w_[u];
    if (topology_ == Topology::circle) x -= std::floor(x);
    st.blocks.push_back(range_of(id));
    st.positions.push_back(x);
    st.representatives.push_back(global_[u]);
  }
  return st;
}

std::vector<CensorableTime> link_times(const EventLog& log) {
  const int links = log.topology == Topology::circle ? log.n : log.n - 1;
  std::vector<CensorableTime> out(static_cast<std::size_t>(links), CensorableTime{log.final_clock, true});
  for (const auto& ev : log.events) {
    out[static_cast<std::size_t>(ev.left.hi - 1)] = {ev.time, false};
    if (log.topology == Topology::circle && range_size(ev.left, log.n) + range_size(ev.right, log.n) == log.n) {
      out[static_cast<std::size_t>(ev.right.hi - 1)] = {ev.time, false};
    }
  }
  return out;
}

CensorableTime first_merge_time(const EventLog& log) {
  if (log.events.empty()) return {log.final_clock, true};
  return {log.events.front().time, false};
}

CensorableTime coalescence_time(const EventLog& log, int i, int j) {
  if (i < 1 || i > log.n || j < 1 || j > log.n) throw std::invalid_argument("coalescence_time: index out of range");
  if (i == j) return {0.0, false};
  if (i > j) std::swap(i, j);
  const auto links = link_times(log);
  auto span_max = [&](int from, int count) {
    CensorableTime acc{0.0, false};
    for (int q = 0; q < count; ++q) acc = censored_max(acc, links[static_cast<std::size_t>((from + q) % static_cast<int>(links.size()))]);
    return acc;
  };
  const auto inner = span_max(i - 1, j - i);
  if (log.topology == Topology::line) return inner;
  return censored_min(inner, span_max(j - 1, log.n - (j - i)));
}

void write_event_log(std::ostream& out, const EventLog& log) {
  out << "# coalsfs event log v1\n";
  out << "n=" << log.n << '\n';
  out << "topology=" << to_string(log.topology) << '\n';
  out << "dt=" << format_double(log.echo.base_dt) << '\n';
  out << "steps_per_doubling=" << log.echo.steps_per_doubling << '\n';
  out << "substep_log2=" << log.echo.substep_log2 << '\n';
  out << "tolerance_fraction=" << format_double(log.echo.tolerance_fraction) << '\n';
  out << "seed=" << log.echo.seed << '\n';
  out << "stream=" << log.echo.stream_id << '\n';
  out << "final_clock=" << format_double(log.final_clock) << '\n';
  out << "censored=" << (log.censored ? 1 : 0) << '\n';
  if (!log.global.empty()) {
    out << "members=";
    for (std::size_t p = 0; p < log.global.size(); ++p) out << (p ? "," : "") << log.global[p];
    out << '\n';
  }
  out << "time,left_lo,left_hi,right_lo,right_hi,refined\n";
  for (const auto& ev : log.events) {
    out << format_double(ev.time) << ',' << ev.left.lo << ',' << ev.left.hi << ',' << ev.right.lo << ','
        << ev.right.hi << ',' << (ev.refined ? 1 : 0) << '\n';
  }
}

EventLog read_event_log(std::istream& in) {
  EventLog log;
  std::string line;
  bool in_events = false;
  while (std::getline(in, line)) {
    const auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    if (!in_events) {
      if (s.substr(0, 5) == "time,") {
        in_events = true;
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string_view::npos) throw std::invalid_argument("event log: bad header line '" + line + "'");
      const auto key = s.substr(0, eq);
      const auto val = s.substr(eq + 1);
      if (key == "n") log.n = static_cast<int>(parse_int(val));
      else if (key == "topology") log.topology = parse_topology(std::string{val});
      else if (key == "dt") log.echo.base_dt = parse_double(val);
      else if (key == "steps_per_doubling") log.echo.steps_per_doubling = static_cast<int>(parse_int(val));
      else if (key == "substep_log2") log.echo.substep_log2 = static_cast<int>(parse_int(val));
      else if (key == "tolerance_fraction") log.echo.tolerance_fraction = parse_double(val);
      else if (key == "seed") log.echo.seed = parse_uint(val);
      else if (key == "stream") log.echo.stream_id = parse_uint(val);
      else if (key == "final_clock") log.final_clock = parse_double(val);
      else if (key == "censored") log.censored = parse_int(val) != 0;
      else if (key == "members") {
        for (auto f : split(val, ',')) log.global.push_back(static_cast<int>(parse_int(f)));
      } else {
        throw std::invalid_argument("event log: unknown header key '" + std::string{key} + "'");
      }
      continue;
    }
    const auto f = split(s, ',');
    if (f.size() != 5 && f.size() != 6) throw std::invalid_argument("event log: bad event line '" + line + "'");
    MergeEvent ev;
    ev.time = parse_double(f[0]);
    ev.left = {static_cast<int>(parse_int(f[1])), static_cast<int>(parse_int(f[2]))};
    ev.right = {static_cast<int>(parse_int(f[3])), static_cast<int>(parse_int(f[4]))};
    ev.refined = f.size() == 6 && parse_int(f[5]) != 0;
    log.events.push_back(ev);
  }
  if (log.n < 2) throw std::invalid_argument("event log: missing or invalid n");
  return log;
}

}  // namespace coalsfs

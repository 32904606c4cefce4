#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "coalsfs/brownian_kernels.hpp"

namespace coalsfs {

enum class Topology { line, circle };

std::string to_string(Topology t);
Topology parse_topology(const std::string& s);

/// A time that may only be known as a lower bound because the run stopped
/// before the defining event happened.
struct CensorableTime {
  double value = 0.0;
  bool censored = false;
};

// min/max where a censored operand is only known from below.
CensorableTime censored_min(CensorableTime a, CensorableTime b);
CensorableTime censored_max(CensorableTime a, CensorableTime b);

/// Inclusive member range, 1-based. On the circle `lo > hi` means the block
/// wraps past member n.
struct BlockRange {
  int lo = 0;
  int hi = 0;
  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

struct MergeEvent {
  double time = 0.0;
  BlockRange left;
  BlockRange right;
  bool refined = false;  // time came from bisection, not an endpoint touch
};

struct RunEcho {
  double base_dt = 0.0;
  int steps_per_doubling = 0;
  int substep_log2 = 0;
  double tolerance_fraction = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

/// Complete record of a run. Member indices are local (1..n); `global` maps
/// them to particle indices of the parent system when the run was a
/// neighbourhood subsystem, and is empty otherwise.
struct EventLog {
  int n = 0;
  Topology topology = Topology::line;
  std::vector<MergeEvent> events;
  double final_clock = 0.0;
  bool censored = false;
  RunEcho echo;
  std::vector<int> global;

  [[nodiscard]] int global_index(int local) const {
    return global.empty() ? local : global[static_cast<std::size_t>(local - 1)];
  }
  [[nodiscard]] int local_index(int global_idx) const;  // 0 if not a member
};

void write_event_log(std::ostream& out, const EventLog& log);
EventLog read_event_log(std::istream& in);

struct StopRule {
  enum class Kind { all_blocks_larger_than, single_block, lengths_determined, blocks_at_most };
  Kind kind = Kind::single_block;
  int m = 1;  // block size bound, or block count for blocks_at_most
  // (i, m) pairs, local indices, for lengths_determined.
  std::vector<std::pair<int, int>> lengths;
  double t_max = 4.0;

  static StopRule single(double t_max) { return {Kind::single_block, 1, {}, t_max}; }
  static StopRule larger_than(int m, double t_max) { return {Kind::all_blocks_larger_than, m, {}, t_max}; }
  static StopRule at_most(int blocks, double t_max) { return {Kind::blocks_at_most, blocks, {}, t_max}; }
  static StopRule determined(std::vector<std::pair<int, int>> lengths, double t_max) {
    return {Kind::lengths_determined, 1, std::move(lengths), t_max};
  }
};

struct EngineOptions {
  StepSchedule schedule;
  double tolerance_fraction = 1.0 / 1024.0;
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
  int sample_every = 0;  // tree position samples every this many coarse steps; 0 = off
};

struct PositionSample {
  double time = 0.0;
  BlockRange block;
  double x = 0.0;
};

/// Snapshot of a running system.
struct SystemState {
  int n = 0;
  Topology topology = Topology::line;
  double clock = 0.0;
  std::vector<BlockRange> blocks;   // in order, starting with the block holding member 1
  std::vector<double> positions;    // representative coordinate per block ([0,1) on the circle)
  std::vector<int> representatives; // global index per block
  bool censored = false;
};

SystemState init_system(int n, Topology topology);

/// Indices j with d_n(center, j) <= n^(-2/3+epsilon), in walking order from
/// the leftmost (or, on the circle, counter-clockwise-most) member.
std::vector<int> subsystem(int n, Topology topology, int center, double epsilon);

/// Coalescing Brownian motion with bridge-corrected collision detection.
///
/// Each block moves with the path of its representative (its smallest global
/// index). Paths are keyed by global index, so a subsystem and the full
/// system driven by the same seed and stream see the same Brownian motions.
class CoalescentSystem {
 public:
  CoalescentSystem(int n, Topology topology, const EngineOptions& options);

  // Line system with arbitrary strictly increasing starting coordinates.
  CoalescentSystem(std::vector<double> positions, const EngineOptions& options);

  /// Neighbourhood of `center` in an n-particle system, simulated on its own
  /// as a line system with the parent's coordinates and paths.
  static CoalescentSystem make_subsystem(int n, Topology topology, int center, double epsilon,
                                         const EngineOptions& options);

  // Advance one coarse step; returns the merges it produced.
  std::vector<MergeEvent> step();

  EventLog run_until(const StopRule& stop);

  [[nodiscard]] SystemState state() const;
  [[nodiscard]] int block_count() const { return blocks_; }
  [[nodiscard]] double clock() const { return clock_; }
  [[nodiscard]] const std::vector<MergeEvent>& events() const { return events_; }
  [[nodiscard]] const std::vector<PositionSample>& samples() const { return samples_; }
  [[nodiscard]] bool stop_satisfied(const StopRule& stop) const;

 private:
  CoalescentSystem(std::vector<double> x0, std::vector<int> global, Topology topology,
                   const EngineOptions& options, bool is_subsystem);

  struct Candidate {
    double time;
    int left;
    int right;
    bool refined;
    bool operator>(const Candidate& o) const { return time > o.time; }
  };

  [[nodiscard]] double wrap_shift(int right) const;
  [[nodiscard]] double position(int id, std::size_t grid) const;
  [[nodiscard]] double position_at(int id, double t) const;
  [[nodiscard]] BlockRange range_of(int id) const;
  [[nodiscard]] bool link_joined(int member_pos) const;
  void sample_blocks(double t);
  void decide_link(int a, int b, std::vector<Candidate>& heap);
  void reexamine(int a, int b, double t, std::vector<Candidate>& heap);
  void merge(const Candidate& c, std::vector<Candidate>& heap);

  int n_;
  Topology topology_;
  EngineOptions options_;
  BrownianPath path_;
  std::vector<double> x0_;
  std::vector<int> global_;
  bool is_subsystem_;

  // Block data, indexed by the member position of the representative.
  std::vector<int> start_, end_, size_, next_, prev_;
  std::vector<double> offset_;
  std::vector<char> alive_;
  std::vector<double> w_;       // representative path value at the current coarse step start
  std::vector<double> fine_;    // per block: path values on the fine grid of the current step
  std::vector<char> link_joined_;
  int head_ = 0;
  int blocks_ = 0;

  std::uint64_t k_ = 0;
  double clock_ = 0.0;
  double last_event_ = -1.0;
  std::vector<MergeEvent> events_;
  std::vector<PositionSample> samples_;

  // Scratch for the step in progress.
  double step_start_ = 0.0;
  double step_size_ = 0.0;
  std::size_t fine_j_ = 0;
  double fine_t1_ = 0.0;
};

/// First time members i and j (local, 1-based) share a block; 0 when i == j.
CensorableTime coalescence_time(const EventLog& log, int i, int j);

/// Time of the first merge in the log; censored at the final clock if none.
CensorableTime first_merge_time(const EventLog& log);

/// Join time of every link. Link q (0-based) connects members q+1 and q+2,
/// and on the circle link n-1 connects member n to member 1. Unjoined links
/// are censored at the final clock.
std::vector<CensorableTime> link_times(const EventLog& log);

}  // namespace coalsfs

#pragma once

#include <cstdint>
#include <span>

#include "coalsfs/rng.hpp"

namespace coalsfs {

/// One time step of a scalar gap process: value `a` at `t0`, `b` at `t0 + dt`.
struct StepWindow {
  double t0 = 0.0;
  double dt = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// Centered normal with the given variance.
double gaussian_increment(RngStream& stream, double variance);

/// Probability that a Brownian bridge with variance `sigma2dt` over the step,
/// pinned at a > 0 and b > 0, touches zero inside the step: exp(-2ab/sigma2dt).
double bridge_crossing_prob(double a, double b, double sigma2dt);

double normal_cdf(double x);

/// P(two independent unit Brownian particles at distance d have not met by t).
/// Their difference has variance rate 2, so this is 2*Phi(d/sqrt(2t)) - 1.
double pair_hit_survival(double d, double t);

struct RefinedTime {
  double time = 0.0;
  bool degenerate = false;  // tolerance >= dt; time is the window midpoint
};

// Supplies gap midpoints from an externally fixed path while the bisection is
// in a sign-change window. `midpoint()` returns the gap at the midpoint of the
// current interval; `descend(left)` then narrows to the chosen half.
class MidpointSource {
 public:
  virtual ~MidpointSource() = default;
  virtual double midpoint() = 0;
  virtual void descend(bool left) = 0;
};

/// Localize the first zero of a gap process inside a window already known to
/// contain one.
///
/// Bisection: the bridge midpoint is sampled (conditioned on a crossing when
/// both endpoints are positive), the half holding the first crossing is chosen
/// from the sign and the half-bridge crossing probabilities, and the loop
/// continues until the half-width is at most `tolerance`. Returns the left
/// endpoint of the final interval. `b == 0` returns the right end of the
/// window. Throws std::logic_error for a window with a, b > 0 whose crossing
/// probability is zero.
RefinedTime refine_crossing_time(const StepWindow& window, double sigma2_rate, double tolerance,
                                 RngStream& stream, MidpointSource* source = nullptr);

/// Coarse time grid with optional geometric growth.
///
/// Phase 0 runs 2D steps of `base_dt`; phase j >= 1 runs D steps of
/// base_dt * 2^j, so the step stays between 1/(2D) and 1/D of the elapsed
/// time. D = 0 keeps the grid uniform. Each coarse step is cut into
/// 2^substep_log2 fine steps; raising substep_log2 by one halves every step
/// while the underlying Brownian paths stay the same.
struct StepSchedule {
  double base_dt = 1e-4;
  int steps_per_doubling = 0;
  int substep_log2 = 0;

  [[nodiscard]] double coarse_start(std::uint64_t k) const;
  [[nodiscard]] double coarse_size(std::uint64_t k) const;
  [[nodiscard]] int fine_per_coarse() const { return 1 << substep_log2; }
  void validate() const;
};

/// Brownian paths built by midpoint displacement over each coarse step.
///
/// Entity `p`'s increment over coarse step k and every dyadic midpoint below it
/// are drawn from substreams keyed by (p, k, node), so the path is a fixed
/// function of the seed: refining the grid, evaluating at a refinement point,
/// or simulating `p` inside a different particle system all read the same path.
class BrownianPath {
 public:
  BrownianPath(std::uint64_t master_seed, std::uint64_t stream_id)
      : stream_{master_seed, stream_id} {}

  // W_p(end of step k) - W_p(start of step k) for a step of length `size`.
  [[nodiscard]] double coarse_increment(std::uint32_t entity, std::uint64_t k, double size) const;

  // Standard normal attached to heap node `node` (root = 1) of step k.
  [[nodiscard]] double node_normal(std::uint32_t entity, std::uint64_t k, std::uint64_t node) const;

  /// Fill out[0..2^r] with the path at the fine grid points of step k.
  /// out[0] and out[2^r] must already hold the step's start and end values.
  void fill_fine(std::uint32_t entity, std::uint64_t k, double size, std::span<double> out) const;

  /// Path value at fraction x in [0,1] of step k, starting the descent from
  /// heap node `node` covering [lo, hi] with known values there.
  [[nodiscard]] double value_at(std::uint32_t entity, std::uint64_t k, double size,
                                std::uint64_t node, double lo, double hi, double v_lo, double v_hi,
                                double x) const;

  [[nodiscard]] const RngStream& stream() const { return stream_; }

 private:
  RngStream stream_;
};

/// Walks one entity's path down the dyadic refinement of a coarse step.
/// The current interval is heap node `node`, covering fractions [lo, hi].
struct PathCursor {
  const BrownianPath* path = nullptr;
  std::uint32_t entity = 0;
  std::uint64_t k = 0;
  double size = 0.0;
  std::uint64_t node = 1;
  double lo = 0.0, hi = 1.0;
  double v_lo = 0.0, v_hi = 0.0;

  // Path value at the midpoint of the current interval (not cached).
  [[nodiscard]] double midpoint() const;
  void descend(bool left, double v_mid);
};

struct ExitSample {
  double time = 0.0;
  bool censored = false;
};

/// First exit of standard Brownian motion from (-lower, upper), with
/// bridge-corrected barrier detection and bisection refinement.
ExitSample two_sided_exit_time(double upper, double lower, const StepSchedule& schedule,
                               double t_max, double tolerance_fraction, std::uint64_t master_seed,
                               std::uint64_t stream_id);

}  // namespace coalsfs

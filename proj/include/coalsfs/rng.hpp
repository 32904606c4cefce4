#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace coalsfs {

// Philox4x32-10 block function (Salmon, Moraes, Dror, Shaw; SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter encrypt(Counter ctr, Key key) noexcept;
};

// Substream purposes. Each purpose gets its own Philox key so that draws made
// for different roles never share counters.
enum class Purpose : std::uint32_t {
  sequential = 0,
  path_root = 1,
  path_node = 2,
  path_leaf = 3,
  crossing = 4,
  reexamine = 5,
  barrier = 6,
  poisson = 7,
};

/// Counter-based random stream.
///
/// A stream is identified by (master_seed, stream_id); substreams add a
/// purpose and three 32-bit coordinates. Identical identifiers reproduce the
/// identical sequence regardless of thread, call order elsewhere, or which
/// other substreams were drawn. Satisfies UniformRandomBitGenerator, so the
/// standard distributions can consume it.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept;

  [[nodiscard]] RngStream substream(Purpose purpose, std::uint32_t a, std::uint32_t b,
                                    std::uint32_t c) const noexcept;

  result_type operator()() noexcept;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  // Uniform on the open interval (0, 1).
  double uniform() noexcept;

  [[nodiscard]] std::uint64_t master_seed() const noexcept { return master_seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id, std::uint64_t base_key,
            Philox4x32::Key key, Philox4x32::Counter ctr) noexcept;

  void refill() noexcept;

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t base_key_;
  Philox4x32::Key key_;
  Philox4x32::Counter ctr_;
  Philox4x32::Counter block_{};
  int used_ = 4;  // 32-bit words of block_ already consumed
};

// One standard normal draw from the stream.
double standard_normal(RngStream& stream);

// splitmix64 finalizer; also used for config hashing of integers.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace coalsfs

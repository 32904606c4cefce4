#include "coalsfs/rng.hpp"

#include <cmath>
#include <numbers>

namespace coalsfs {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

Philox4x32::Key split_key(std::uint64_t k) {
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Philox4x32::Counter Philox4x32::encrypt(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id) noexcept
    : master_seed_{master_seed},
      stream_id_{stream_id},
      base_key_{mix64(master_seed ^ mix64(stream_id))},
      key_{split_key(mix64(base_key_ ^ static_cast<std::uint64_t>(Purpose::sequential)))},
      ctr_{0, 0, 0, 0} {}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id, std::uint64_t base_key,
                     Philox4x32::Key key, Philox4x32::Counter ctr) noexcept
    : master_seed_{master_seed}, stream_id_{stream_id}, base_key_{base_key}, key_{key}, ctr_{ctr} {}

RngStream RngStream::substream(Purpose purpose, std::uint32_t a, std::uint32_t b,
                               std::uint32_t c) const noexcept {
  const auto key = split_key(mix64(base_key_ ^ static_cast<std::uint64_t>(purpose)));
  return RngStream{master_seed_, stream_id_, base_key_, key, {a, b, c, 0}};
}

void RngStream::refill() noexcept {
  block_ = Philox4x32::encrypt(ctr_, key_);
  // 128-bit increment, least significant word last so substream coordinates
  // (a, b, c) stay fixed for the first 2^32 blocks.
  for (int w = 3; w >= 0; --w) {
    if (++ctr_[static_cast<std::size_t>(w)] != 0) break;
  }
  used_ = 0;
}

RngStream::result_type RngStream::operator()() noexcept {
  if (used_ > 2) refill();
  const auto lo = static_cast<std::uint64_t>(block_[static_cast<std::size_t>(used_)]);
  const auto hi = static_cast<std::uint64_t>(block_[static_cast<std::size_t>(used_ + 1)]);
  used_ += 2;
  return (hi << 32) | lo;
}

double RngStream::uniform() noexcept {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(RngStream& stream) {
  // Box-Muller, cosine branch only: a fresh substream yields its normal from
  // a single Philox block.
  const double u1 = stream.uniform();
  const double u2 = stream.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace coalsfs

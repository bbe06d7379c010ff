#pragma once

// Counter-based random streams.
//
// A stream is addressed by (seed, substream) and walks a 64-bit block counter
// through the Philox4x32-10 bijection, so any replicate can be regenerated
// from its seed alone and distinct substreams never overlap. All variate
// transforms below are written out explicitly rather than delegated to
// <random> distributions, whose algorithms differ between standard libraries.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "habc/types.hpp"

namespace habc {

namespace detail {

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo32(kM0, ctr[0], hi0, lo0);
    detail::mulhilo32(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// SplitMix64 finalizer; used to fold several integers into one key.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine_keys(std::uint64_t a, std::uint64_t b) {
  return mix64(a + 0x9E3779B97F4A7C15ull * (b + 1));
}

/// Single-owner random stream. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::uint64_t substream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        substream_(substream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64() {
    if (have_ == 0) refill();
    const std::uint64_t out = (static_cast<std::uint64_t>(buf_[4 - 2 * have_ + 1]) << 32) |
                              buf_[4 - 2 * have_];
    --have_;
    return out;
  }

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; always consumes exactly two words.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential() { return -std::log(uniform()); }

  /// +1 or -1 with probability 1/2 each.
  int rademacher() { return (next_u64() >> 63) ? 1 : -1; }

  std::uint64_t blocks_consumed() const { return block_; }

 private:
  void refill() {
    const PhiloxBlock ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                          static_cast<std::uint32_t>(substream_),
                          static_cast<std::uint32_t>(substream_ >> 32)};
    buf_ = philox4x32_10(ctr, key_);
    ++block_;
    have_ = 2;
  }

  PhiloxKey key_;
  std::uint64_t substream_;
  std::uint64_t block_ = 0;
  PhiloxBlock buf_{};
  int have_ = 0;
};

/// Deterministic stream for (seed, substream). Pure: no global state.
inline Stream derive_stream(std::uint64_t seed, std::uint64_t substream) {
  return Stream(seed, substream);
}

/// S seeds drawn uniformly from the full 64-bit seed space.
inline SeedVector draw_seed_vector(std::size_t count, Stream& stream) {
  if (count < 1) throw precondition_error("draw_seed_vector: count must be >= 1");
  SeedVector out;
  out.seeds.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.seeds.push_back(stream.next_u64());
  return out;
}

/// Gamma(shape, rate=1) variate. Marsaglia-Tsang for shape >= 1; inverse CDF
/// (one uniform, no rejection) for shape < 1. Give each variate its own
/// stream when draw alignment across parameter values matters.
inline double gamma_variate(Stream& stream, double shape) {
  if (!(shape > 0.0)) throw std::domain_error("gamma_variate: shape must be > 0");
  if (shape < 1.0) {
    return boost::math::gamma_p_inv(shape, stream.uniform());
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double z = stream.normal();
    const double v0 = 1.0 + c * z;
    if (v0 <= 0.0) continue;
    const double v = v0 * v0 * v0;
    const double u = stream.uniform();
    if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) return d * v;
  }
}

}  // namespace habc

// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random numbers for reproducible parallel simulation.
//
// Every draw is a pure function of (seed, path_index, stream, position):
// the Philox4x32-10 block cipher (Salmon et al., SC'11) is keyed with the
// 64-bit seed and applied to the counter
//   (block, stream, path_index_lo, path_index_hi),
// so a path's random numbers never depend on which worker simulates it or on
// how paths are grouped into chunks.
//
// Streams in use: 0 = martingale steps, 1 = per-path environment (covariates,
// magnitudes), 2 = Bolthausen padding steps.
#pragma once

#include <array>
#include <cstdint>

namespace mgbound {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One application of Philox4x32 with 10 rounds.
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept;

enum class RngStream : std::uint32_t { steps = 0, environment = 1, padding = 2 };

/// Probability as a 64-bit fixed-point threshold: P(true) = q / 2^64, or 1.
struct BernoulliThreshold {
  std::uint64_t q = 0;
  bool certain = false;

  /// Exact for p >= 2^-11; smaller p are truncated to a multiple of 2^-64.
  static BernoulliThreshold from_probability(double p) noexcept;
};

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t path_index, RngStream stream) noexcept;

  std::uint32_t next_u32() noexcept {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  bool next_bit() noexcept {
    if (nbits_ == 0) {
      bits_ = next_u32();
      nbits_ = 32;
    }
    const bool b = (bits_ & 1u) != 0;
    bits_ >>= 1;
    --nbits_;
    return b;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Bernoulli draw by lazy comparison of random bits against the threshold.
  /// Consumes one 32-bit word, a second one only on a tie of the high words.
  bool bernoulli(const BernoulliThreshold& t) noexcept {
    if (t.certain) return true;
    const std::uint32_t qhi = static_cast<std::uint32_t>(t.q >> 32);
    const std::uint32_t hi = next_u32();
    if (hi != qhi) return hi < qhi;
    return next_u32() < static_cast<std::uint32_t>(t.q);
  }

 private:
  void refill() noexcept;

  PhiloxKey key_;
  PhiloxCounter ctr_;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  std::uint32_t bits_ = 0;
  int nbits_ = 0;
};

}  // namespace mgbound

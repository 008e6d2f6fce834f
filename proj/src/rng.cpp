// SPDX-License-Identifier: Apache-2.0
#include "mgbound/rng.hpp"

#include <cmath>

namespace mgbound {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline PhiloxCounter round(PhiloxCounter c, PhiloxKey k) noexcept {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    ctr = round(ctr, key);
  }
  return ctr;
}

BernoulliThreshold BernoulliThreshold::from_probability(double p) noexcept {
  if (!(p > 0.0)) return {0, false};
  if (p >= 1.0) return {0, true};
  return {static_cast<std::uint64_t>(std::ldexp(p, 64)), false};
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t path_index, RngStream stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(path_index),
           static_cast<std::uint32_t>(path_index >> 32)} {}

void CounterRng::refill() noexcept {
  buf_ = philox4x32_10(ctr_, key_);
  ++ctr_[0];
  pos_ = 0;
}

}  // namespace mgbound

// SPDX-License-Identifier: Apache-2.0
//
// Phi is evaluated through two routes:
//   * x < 5: the complementary error function, 1 - Phi(x) = erfc(x/sqrt 2)/2
//     (libm's erfc is a piecewise rational approximation with ~1 ulp error);
//   * x >= 5: Laplace's continued fraction for the Mills ratio
//       R(x) = (1 - Phi(x)) / phi(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))),
//     evaluated with the modified Lentz algorithm. exp(-x^2/2) is formed from
//     an exact two-term split of x^2 so that the tail keeps ~1e-15 relative
//     accuracy up to the underflow threshold, and log(1 - Phi) stays finite
//     beyond it.
// Only the upper tail for x >= 0 is computed directly; negative arguments use
// the reflection 1 - Phi(x) = Phi(-x).
#include "mgbound/gaussian.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mgbound/errors.hpp"

namespace mgbound {
namespace {

constexpr double kContinuedFractionCutoff = 5.0;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw DomainError(std::string(what) + ": argument must be finite");
  }
}

// R(x) = (1 - Phi(x)) / phi(x), x > 0.
double mills_ratio_cf(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = f;
  double d = 0.0;
  for (int j = 1; j < 10000; ++j) {
    const double a = static_cast<double>(j);
    d = x + a * d;
    if (d == 0.0) d = tiny;
    d = 1.0 / d;
    c = x + a / c;
    if (c == 0.0) c = tiny;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return 1.0 / f;
}

// -x^2/2 as an unevaluated sum hi + lo.
struct HalfSquare {
  double hi;
  double lo;
};

HalfSquare neg_half_square(double x) {
  const double sq = x * x;
  const double err = std::fma(x, x, -sq);
  return {-0.5 * sq, -0.5 * err};
}

double upper_tail(double x) {
  if (x < kContinuedFractionCutoff) {
    return 0.5 * std::erfc(x * std::numbers::sqrt2 * 0.5);
  }
  const HalfSquare e = neg_half_square(x);
  const double density = std::exp(e.hi) * std::exp(e.lo) / (std::numbers::sqrt2 * std::sqrt(std::numbers::pi));
  return density * mills_ratio_cf(x);
}

double log_upper_tail(double x) {
  if (x < kContinuedFractionCutoff) {
    return std::log(0.5 * std::erfc(x * std::numbers::sqrt2 * 0.5));
  }
  const HalfSquare e = neg_half_square(x);
  return (e.hi - kLogSqrt2Pi) + (e.lo + std::log(mills_ratio_cf(x)));
}

}  // namespace

double std_normal_sf(double x) {
  require_finite(x, "std_normal_sf");
  return x >= 0.0 ? upper_tail(x) : 1.0 - upper_tail(-x);
}

double std_normal_cdf(double x) {
  require_finite(x, "std_normal_cdf");
  return x >= 0.0 ? 1.0 - upper_tail(x) : upper_tail(-x);
}

double std_normal_log_sf(double x) {
  require_finite(x, "std_normal_log_sf");
  return x >= 0.0 ? log_upper_tail(x) : std::log1p(-upper_tail(-x));
}

NormalEval normal_eval(double x) {
  require_finite(x, "normal_eval");
  return {x, std_normal_cdf(x), std_normal_sf(x), std_normal_log_sf(x)};
}

double scaled_normal_sf(double x) {
  require_finite(x, "scaled_normal_sf");
  if (x < 0.0) throw DomainError("scaled_normal_sf: x must be >= 0");
  if (x < kContinuedFractionCutoff) {
    return upper_tail(x) * std::exp(0.5 * x * x);
  }
  return mills_ratio_cf(x) / (std::numbers::sqrt2 * std::sqrt(std::numbers::pi));
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("std_normal_quantile: p must lie in (0, 1)");
  }
  // Solve 1 - Phi(t) = target for t >= 0 by bisection in the log domain.
  const bool lower = p < 0.5;
  const double log_target = lower ? std::log(p) : std::log1p(-p);
  double lo = 0.0;
  double hi = 40.0;
  while (log_upper_tail(hi) > log_target) hi *= 2.0;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (log_upper_tail(mid) > log_target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double t = 0.5 * (lo + hi);
  return lower ? -t : t;
}

MillsSandwich mills_sandwich(double x) {
  require_finite(x, "mills_sandwich");
  if (x < 0.0) throw DomainError("mills_sandwich: x must be >= 0");
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  return {1.0 / (std::numbers::sqrt2 * sqrt_pi * (1.0 + x)), 1.0 / (sqrt_pi * (1.0 + x))};
}

}  // namespace mgbound

// SPDX-License-Identifier: Apache-2.0
//
// Standard normal primitives. Every tail quantity has a log-domain twin so
// that arguments up to x = 40 (where 1 - Phi(x) ~ 1e-350) stay representable.
#pragma once

namespace mgbound {

struct NormalEval {
  double x;
  double cdf;     ///< Phi(x)
  double sf;      ///< 1 - Phi(x)
  double log_sf;  ///< log(1 - Phi(x)); finite even where sf underflows
};

/// Phi(x). Absolute error below 1e-15 on |x| <= 8.
double std_normal_cdf(double x);

/// 1 - Phi(x), without cancellation for large positive x.
double std_normal_sf(double x);

/// log(1 - Phi(x)).
double std_normal_log_sf(double x);

NormalEval normal_eval(double x);

/// (1 - Phi(x)) * exp(x^2 / 2) for x >= 0, i.e. sqrt(2 pi)^-1 times the Mills ratio.
double scaled_normal_sf(double x);

/// Inverse of Phi on (0, 1).
double std_normal_quantile(double p);

/// Two-sided elementary bound on the scaled Gaussian tail:
///   1/(sqrt(2 pi)(1+x)) <= (1 - Phi(x)) exp(x^2/2) <= 1/(sqrt(pi)(1+x)),  x >= 0.
struct MillsSandwich {
  double lower;
  double upper;
};

MillsSandwich mills_sandwich(double x);

}  // namespace mgbound

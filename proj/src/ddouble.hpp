// SPDX-License-Identifier: Apache-2.0
//
// Minimal double-double arithmetic (about 106 significant bits) built from
// error-free transformations.
#pragma once

#include <cmath>

namespace mgbound::detail {

struct DD {
  double hi = 0.0;
  double lo = 0.0;
};

inline DD two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

inline DD quick_two_sum(double a, double b) {
  const double s = a + b;
  return {s, b - (s - a)};
}

inline DD two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline DD operator+(DD a, DD b) {
  DD s = two_sum(a.hi, b.hi);
  DD t = two_sum(a.lo, b.lo);
  s.lo += t.hi;
  s = quick_two_sum(s.hi, s.lo);
  s.lo += t.lo;
  return quick_two_sum(s.hi, s.lo);
}

inline DD operator-(DD a) { return {-a.hi, -a.lo}; }
inline DD operator-(DD a, DD b) { return a + (-b); }

inline DD operator*(DD a, DD b) {
  DD p = two_prod(a.hi, b.hi);
  p.lo += a.hi * b.lo + a.lo * b.hi;
  return quick_two_sum(p.hi, p.lo);
}

inline DD operator/(DD a, DD b) {
  const double q1 = a.hi / b.hi;
  DD r = a - b * DD{q1, 0.0};
  const double q2 = r.hi / b.hi;
  r = r - b * DD{q2, 0.0};
  const double q3 = r.hi / b.hi;
  return DD{q1, 0.0} + DD{q2, 0.0} + DD{q3, 0.0};
}

inline DD dd_sqrt(DD a) {
  if (a.hi <= 0.0) return {0.0, 0.0};
  const double x = 1.0 / std::sqrt(a.hi);
  const double ax = a.hi * x;
  const DD diff = a - two_prod(ax, ax);
  return two_sum(ax, diff.hi * (x * 0.5));
}

inline double to_double(DD a) { return a.hi + a.lo; }

}  // namespace mgbound::detail

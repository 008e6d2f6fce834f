// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>

#include "doctest.h"
#include "hp_oracle.hpp"
#include "mgbound/errors.hpp"
#include "mgbound/gaussian.hpp"

using namespace mgbound;

namespace {
double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }
}  // namespace

TEST_CASE("normal cdf at reference points") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std_normal_sf(0.0) == 0.5);
  CHECK(rel(std_normal_cdf(1.0), 0.8413447460685429) < 1e-15);
  const NormalEval e = normal_eval(40.0);
  CHECK(e.sf < 1e-300);
  CHECK(std::isfinite(e.log_sf));
  CHECK(e.cdf == 1.0);
}

TEST_CASE("tail functions agree with the 50-digit oracle") {
  for (double x = -9.0; x <= 38.0; x += 0.125) {
    const double ref = static_cast<double>(oracle::normal_sf(oracle::hp(x)));
    CAPTURE(x);
    CHECK(rel(std_normal_sf(x), ref) < 2e-14);
  }
  for (double x = -9.0; x <= 40.0; x += 0.25) {
    const double ref = static_cast<double>(oracle::log_normal_sf(oracle::hp(x)));
    CAPTURE(x);
    CHECK(std::fabs(std_normal_log_sf(x) - ref) <= 1e-14 * std::max(1.0, std::fabs(ref)));
  }
  for (double x = -38.0; x <= 9.0; x += 0.125) {
    const double ref = static_cast<double>(oracle::normal_cdf(oracle::hp(x)));
    CAPTURE(x);
    CHECK(rel(std_normal_cdf(x), ref) < 2e-14);
  }
}

TEST_CASE("sf and cdf are mirror images") {
  for (double x = -20.0; x <= 20.0; x += 0.37) CHECK(std_normal_sf(x) == std_normal_cdf(-x));
}

TEST_CASE("quantile inverts the cdf") {
  CHECK(std::fabs(std_normal_quantile(0.975) - 1.959963984540054) < 1e-13);
  CHECK(std_normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  for (double p : {1e-300, 1e-20, 1e-6, 0.01, 0.3, 0.7, 0.99, 1 - 1e-12}) {
    const double q = std_normal_quantile(p);
    CAPTURE(p);
    CHECK(rel(std_normal_cdf(q), p) < 1e-12);
  }
  CHECK_THROWS_AS(std_normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(std_normal_quantile(1.0), DomainError);
}

TEST_CASE("Mills sandwich brackets the scaled tail") {
  const MillsSandwich s0 = mills_sandwich(0.0);
  CHECK(s0.lower == doctest::Approx(0.3989422804014327).epsilon(1e-15));
  CHECK(s0.upper == doctest::Approx(0.5641895835477563).epsilon(1e-15));
  CHECK(s0.lower <= 0.5);
  CHECK(0.5 <= s0.upper);
  // Frozen from the 50-digit oracle.
  CHECK(scaled_normal_sf(1.0) == doctest::Approx(0.26157829186512337).epsilon(1e-14));
  CHECK(scaled_normal_sf(10.0) == doctest::Approx(0.039506694101386003).epsilon(1e-14));
  for (double x : {1.0, 10.0}) {
    const MillsSandwich s = mills_sandwich(x);
    CHECK(s.lower * (1 + x) * std::sqrt(2 * M_PI) == doctest::Approx(1.0));
    CHECK(s.lower <= scaled_normal_sf(x));
    CHECK(scaled_normal_sf(x) <= s.upper);
  }
}

TEST_CASE("non-finite input is rejected") {
  CHECK_THROWS_AS(std_normal_cdf(std::numeric_limits<double>::quiet_NaN()), DomainError);
  CHECK_THROWS_AS(mills_sandwich(-1.0), DomainError);
}

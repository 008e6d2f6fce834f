// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hp_oracle.hpp"
#include "mgbound/applications.hpp"
#include "mgbound/errors.hpp"
#include "mgbound/gaussian.hpp"

using namespace mgbound;
using doctest::Approx;

TEST_CASE("least squares") {
  CHECK(least_squares({{1, 1}, {2, 0}, 1.0}) == 1.0);
  CHECK(least_squares({{0.3, 1.7, 2.2}, {0.3 * 2.5, 1.7 * 2.5, 2.2 * 2.5}, 1.0}) == Approx(2.5).epsilon(1e-15));
  CHECK_THROWS_AS(least_squares({{0, 0}, {1, 2}, 1.0}), ConfigError);
  CHECK_THROWS_AS(least_squares({{1}, {1, 2}, 1.0}), ConfigError);
  CHECK_THROWS_AS(least_squares({{}, {}, 1.0}), ConfigError);
}

TEST_CASE("least squares concentrates around theta") {
  const RegressionModel m{1.5, 10000, 1.0, 2.0, 1.0, NoiseFamily::rademacher_scaled};
  const auto d = simulate_regression(m, 3, 0);
  double e = 0;
  for (double p : d.covariates) e += p * p;
  CHECK(std::fabs(least_squares(d) - 1.5) <= 5.0 / std::sqrt(e));
}

TEST_CASE("reduction identity") {
  const auto z = regression_reduction_check({{1, 2, 3}, {2, 4, 6}, 1.0}, 2.0);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  CHECK(z.relative == 0.0);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.5, 3.0), n(-2.0, 2.0);
  for (int rep = 0; rep < 1000; ++rep) {
    RegressionData d;
    d.sigma = u(gen);
    const double theta = n(gen);
    for (int i = 0; i < 50; ++i) {
      d.covariates.push_back(u(gen));
      d.responses.push_back(theta * d.covariates.back() + n(gen));
    }
    CHECK(regression_reduction_check(d, theta).relative <= 1e-12);
  }
}

TEST_CASE("reduction identity at large magnitudes against extended precision") {
  RegressionData d;
  d.sigma = 3.0;
  const double theta = 0.7;
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(1e8, 3e8), n(-1.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    d.covariates.push_back(u(gen));
    d.responses.push_back(theta * d.covariates.back() + n(gen));
  }
  oracle::hp sxx = 0, sxy = 0, spe = 0;
  for (int i = 0; i < 40; ++i) {
    const oracle::hp p = d.covariates[i], x = d.responses[i];
    sxx += p * p;
    sxy += p * x;
    spe += p * (x - oracle::hp(theta) * p);
  }
  const oracle::hp ref = spe / (oracle::hp(3.0) * sqrt(sxx));
  const auto r = regression_reduction_check(d, theta);
  CHECK(std::fabs(r.rhs - static_cast<double>(ref)) <= 1e-12 * std::fabs(static_cast<double>(ref)));
  CHECK(r.relative <= 1e-12);
}

TEST_CASE("regression epsilons") {
  const RegressionData d{std::vector<double>(16, 2.0), std::vector<double>(16, 0.0), 1.0};
  const auto e = regression_epsilons(d, NoiseFamily::rademacher_scaled);
  CHECK(e.eps1 == Approx(0.25).epsilon(1e-15));
  CHECK(e.eps2 == Approx(1.0 / std::sqrt(12.0)).epsilon(1e-14));
  CHECK(e.eps == Approx(e.eps1 * e.eps2 / d.sigma).epsilon(1e-15));
  const RegressionModel m{0, 400, 1.0, 2.0, 2.0, NoiseFamily::truncated_symmetric};
  const auto em = regression_epsilons(m);
  CHECK(em.eps1 == Approx(2.0 / 20.0).epsilon(1e-15));
  CHECK(em.eps2 == Approx(2.0 / std::sqrt(6.0)).epsilon(1e-14));
  CHECK(em.eps == Approx(MartingaleModel(m).epsilon()).epsilon(1e-14));
  const auto sim = simulate_regression(m, 1, 0);
  CHECK(regression_epsilons(sim, m.noise).eps1 <= em.eps1);
}

TEST_CASE("regression envelope") {
  const auto r = regression_envelope(0.0, 0.1);
  CHECK(r.nonuniform.value == Approx(0.23025850929940457).epsilon(1e-14));
  CHECK(r.uniform == Approx(0.23025850929940457).epsilon(1e-14));
  CHECK(r.valid);
  CHECK_FALSE(regression_envelope(1.0, 0.7).valid);
  CHECK_THROWS_AS(regression_envelope(1.0, 0.0), DomainError);
  for (double x : {0.5, 2.0, 6.0}) {
    const double v = regression_envelope(x, 0.05).nonuniform.value;
    const double ref = (1 + x * x) * 0.05 * std::fabs(std::log(0.05)) * std::exp(-0.5 * std::pow(breve_x(x, 0.05), 2));
    CHECK(v == Approx(ref).epsilon(1e-13));
  }
  CHECK(regression_envelope(1.0, 1e-12).nonuniform.value < 1e-9);
}

TEST_CASE("critical values and intervals") {
  const auto g = regression_critical_value(0.01, 0.95, BoundConstant::absolute(0.0));
  CHECK(g.x_star == Approx(1.959963984540054).epsilon(1e-12));
  const auto c1 = regression_critical_value(0.01, 0.95);
  CHECK(c1.valid);
  CHECK(c1.x_star > 1.96);
  CHECK(c1.x_star < 2.2);
  const double eb = 0.01 * std::fabs(std::log(0.01));
  CHECK(2 * std_normal_sf(c1.x_star) * (1 + (1 + std::pow(c1.x_star, 3)) * eb) <= 0.05 * (1 + 1e-12));
  CHECK(2 * std_normal_sf(c1.x_star - 1e-6) * (1 + (1 + std::pow(c1.x_star - 1e-6, 3)) * eb) > 0.05);
  const auto bad = regression_critical_value(0.3, 0.999);
  CHECK_FALSE(bad.valid);
  CHECK_FALSE(bad.warning.empty());

  const RegressionModel m{1.0, 500, 1.0, 2.0, 1.0, NoiseFamily::rademacher_scaled};
  const auto d = simulate_regression(m, 2, 0);
  const double eps = regression_epsilons(d, m.noise).eps;
  double prev = 0;
  for (double level : {0.5, 0.8, 0.9, 0.95, 0.99}) {
    const auto ci = regression_ci(d, eps, level);
    CHECK(ci.hi - ci.lo >= prev);
    prev = ci.hi - ci.lo;
    CHECK(ci.lo <= ci.theta_hat);
    CHECK(ci.theta_hat <= ci.hi);
  }
  prev = 0;
  for (double c : {0.0, 0.5, 1.0, 2.0}) {
    const auto ci = regression_ci(d, eps, 0.95, BoundConstant::absolute(c));
    CHECK(ci.hi - ci.lo >= prev);
    prev = ci.hi - ci.lo;
  }
  double e = 0;
  for (double p : d.covariates) e += p * p;
  const auto gauss = regression_ci(d, eps, 0.95, BoundConstant::absolute(0.0));
  CHECK(gauss.half_width == Approx(1.959963984540054 / std::sqrt(e)).epsilon(1e-12));
}

TEST_CASE("coverage is reproducible and near nominal") {
  const RegressionModel m{1.0, 400, 1.0, 2.0, 1.0, NoiseFamily::rademacher_scaled};
  const auto a = regression_coverage(m, 0.9, BoundConstant::absolute(1.0), 2000, 7, 1);
  const auto b = regression_coverage(m, 0.9, BoundConstant::absolute(1.0), 2000, 7, 4);
  CHECK(a.covered == b.covered);
  CHECK(a.coverage >= 0.9 - 3 * a.std_error);
  CHECK(a.replications == 2000);
}

TEST_CASE("regression CSV input") {
  const auto d = parse_regression_csv("phi,x\r\n1,2\n2,4.5\n\n", 1.5);
  CHECK(d.covariates == std::vector<double>{1, 2});
  CHECK(d.responses == std::vector<double>{2, 4.5});
  CHECK(d.sigma == 1.5);
  CHECK_THROWS_AS(parse_regression_csv("a,b\n1,2\n", 1.0), IoError);
  CHECK_THROWS_AS(parse_regression_csv("phi,x\n1,zz\n", 1.0), IoError);
  CHECK_THROWS_AS(parse_regression_csv("phi,x\n1\n", 1.0), IoError);
  std::istringstream in("phi,x\n3,3\n");
  CHECK(read_regression_csv(in, 1.0).responses.size() == 1);
}

TEST_CASE("self-normalized statistic") {
  CHECK(self_norm_statistic({1, -1, 1}) == Approx(0.57735026918962576).epsilon(1e-15));
  CHECK(self_norm_statistic(std::vector<double>(49, 0.3)) == Approx(7.0).epsilon(1e-15));
  CHECK_THROWS_AS(self_norm_statistic({0, 0}), DomainError);
  CHECK_THROWS_AS(self_norm_statistic({}), DomainError);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> v(37);
    for (double& x : v) x = u(gen);
    const double s = self_norm_statistic(v);
    CHECK(std::fabs(s) <= std::sqrt(37.0));
    // Power-of-two scalings are exact in floating point, so the statistic is bit-identical.
    for (double c : {0.125, 1024.0, 0x1p-600}) {
      std::vector<double> w(v);
      for (double& x : w) x *= c;
      CHECK(self_norm_statistic(w) == s);
    }
    // Other scalings perturb each input by half an ulp; the statistic moves by at most that much.
    for (double c : {7.0, 0.3, 1e100}) {
      std::vector<double> w(v);
      for (double& x : w) x *= c;
      CHECK(std::fabs(self_norm_statistic(w) - s) <= 0x1p-52 * std::sqrt(37.0));
    }
  }
}

TEST_CASE("self-normalized envelope and report") {
  CHECK(self_norm_envelope(0.0, 0.1).envelope.value == Approx(0.23025850929940457).epsilon(1e-14));
  CHECK(self_norm_envelope(1.3, 0.1).envelope.value == self_norm_envelope(-1.3, 0.1).envelope.value);
  CHECK_FALSE(self_norm_envelope(1.0, 0.6).valid);
  const auto r = self_norm_report({1, -1, 1, 1}, std::nullopt, {0.0, 1.0});
  CHECK(r.n == 4);
  CHECK(r.statistic == 1.0);
  CHECK(r.eps == 0.5);
  CHECK_FALSE(r.eps_declared);
  CHECK(r.envelope_at.size() == 2);
  CHECK(self_norm_report({1, -1}, 0.2, {0.0}).eps_declared);
}

TEST_CASE("normalized self-normalized differences have unit bracket") {
  const MartingaleModel m(SelfNormalized{200, 1.0, 4.0});
  for (std::uint64_t i = 0; i < 20; ++i) CHECK(simulate_path(m, 1, i).sq_bracket == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("piecewise comparison bound for self-normalized sums") {
  CHECK(wang_jing_bound(0.4, 0.1, 0.0) == Approx(0.1 * 1.16 * std::exp(-0.08)).epsilon(1e-15));
  CHECK(wang_jing_bound(1.0, 0.1, 0.0) == Approx((1 + 1 / std::sqrt(2 * M_PI)) * std::exp(-0.5)).epsilon(1e-15));
  CHECK(wang_jing_bound(0.0, 0.1, 0.0) == Approx(0.1).epsilon(1e-15));
  for (double x : {0.0, 3.0, 30.0}) CHECK(wang_jing_bound(x, 0.0, 0.2) == Approx(0.2 * std::exp(-0.5 * x * x)).epsilon(1e-15));
  CHECK_THROWS_AS(wang_jing_bound(1.0, -0.1, 0.0), DomainError);
  const auto in = wang_jing_inputs(SelfNormalized{100, 1.0, 1.0}, 1.0);
  CHECK(in.L3n == Approx(0.1).epsilon(1e-15));
  CHECK(in.tail_prob_sum == 0.0);
  CHECK(wang_jing_inputs(SelfNormalized{100, 1.0, 1.0}, 10.0).tail_prob_sum == 100.0);
}

// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "mgbound/errors.hpp"
#include "mgbound/gaussian.hpp"
#include "mgbound/montecarlo.hpp"

using namespace mgbound;
using doctest::Approx;

namespace {
SimulationConfig cfg_for(MartingaleModel m, std::uint64_t paths, Enumeration e = Enumeration::never) {
  SimulationConfig c(std::move(m));
  c.paths = paths;
  c.seed = 1234;
  c.chunk_size = 1000;
  c.enumeration = e;
  return c;
}
}  // namespace

TEST_CASE("interval helpers") {
  const Interval a = clopper_pearson(5, 10, 0.95);
  CHECK(a.lo == Approx(0.18708602844739855).epsilon(1e-10));
  CHECK(a.hi == Approx(0.8129139715526015).epsilon(1e-10));
  const Interval b = clopper_pearson(0, 10, 0.95);
  CHECK(b.lo == 0.0);
  CHECK(b.hi == Approx(0.30849710781876083).epsilon(1e-10));
  CHECK(clopper_pearson(10, 10, 0.95).hi == 1.0);
  CHECK(dkw_band(1000, 0.95) == Approx(0.04294694083467376).epsilon(1e-14));
}

TEST_CASE("configuration validation") {
  auto c = cfg_for(MartingaleModel::equal_weights(4), 0);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.paths = 10;
  c.confidence_level = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.confidence_level = 0.9;
  c.chunk_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  auto big = cfg_for(MartingaleModel::equal_weights(400), 10, Enumeration::always);
  CHECK_THROWS_AS(estimate_tail_plain(big, 0.0), UnsupportedModel);
  CHECK(uses_enumeration(cfg_for(MartingaleModel::equal_weights(16), 10, Enumeration::automatic)));
  CHECK_FALSE(uses_enumeration(cfg_for(MartingaleModel::equal_weights(64), 10, Enumeration::automatic)));
}

TEST_CASE("exhaustive tails of the four-step example") {
  const auto c = cfg_for(MartingaleModel::equal_weights(4), 1, Enumeration::always);
  const TailEstimate t = estimate_tail_plain(c, 0.9);
  CHECK(t.method == TailMethod::exhaustive);
  CHECK(t.p_hat == 0.3125);
  CHECK(t.ci_lo == t.p_hat);
  CHECK(t.ci_hi == t.p_hat);
  CHECK(estimate_tail_plain(c, -2.5).p_hat == 1.0);
  const TailEstimate top = estimate_tail_plain(c, 2.5);
  CHECK(top.p_hat == 0.0);
  CHECK(top.ci_lo == 0.0);
  CHECK(exact_tail(c.model, 0.9) == 0.3125);
  for (double tilt : {0.0, 0.3, 1.0, 1.9}) {
    CHECK(exact_tail_is(c.model, 0.9, tilt) == Approx(0.3125).epsilon(1e-15));
    CHECK(estimate_tail_is(c, 0.9, tilt).p_hat == Approx(0.3125).epsilon(1e-15));
  }
  CHECK_THROWS_AS(estimate_tail_is(c, 0.9, 2.0), DomainError);
  CHECK(exact_cdf(c.model, {0.0})[0] == 0.6875);
  const auto be = estimate_be_distance(c, {0.0});
  CHECK(be.exact);
  CHECK(be.d_hat == 0.1875);
}

TEST_CASE("plain sampling brackets the exact value") {
  const auto c = cfg_for(MartingaleModel::equal_weights(4), 20000);
  const TailEstimate t = estimate_tail_plain(c, 0.9);
  CHECK(t.method == TailMethod::plain_clopper_pearson);
  CHECK(t.ci_lo <= 0.3125);
  CHECK(t.ci_hi >= 0.3125);
  CHECK(t.ci_lo <= t.p_hat);
  CHECK(t.p_hat <= t.ci_hi);
  CHECK(t.p_hat == double(t.hits) / t.paths);
  CHECK(estimate_tail_plain(c, -3.0).p_hat == 1.0);
  const TailEstimate z = estimate_tail_plain(c, 3.0);
  CHECK(z.p_hat == 0.0);
  CHECK(z.ci_lo == 0.0);
}

TEST_CASE("grid estimates match single estimates") {
  const auto c = cfg_for(MartingaleModel(VarianceSwitch{30, 0.4}), 5000);
  const std::vector<double> xs{-1.0, 0.0, 0.5, 2.0};
  const auto grid = estimate_tail_plain_grid(c, xs);
  REQUIRE(grid.size() == xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto one = estimate_tail_plain(c, xs[i]);
    CHECK(one.hits == grid[i].hits);
    CHECK(one.ci_hi == grid[i].ci_hi);
  }
}

TEST_CASE("results do not depend on the worker count") {
  auto c = cfg_for(MartingaleModel(SelfNormalized{100, 1.0, 2.0}), 9000);
  c.chunk_size = 500;
  std::vector<TailEstimate> plain, is;
  std::vector<double> be;
  for (unsigned w : {1u, 2u, 8u}) {
    c.workers = w;
    plain.push_back(estimate_tail_plain(c, 1.0));
    is.push_back(estimate_tail_is(c, 2.0));
    be.push_back(estimate_be_distance(c, {-1.0, 0.0, 1.0}).d_hat);
  }
  for (std::size_t i = 1; i < plain.size(); ++i) {
    CHECK(plain[i].hits == plain[0].hits);
    CHECK(is[i].p_hat == is[0].p_hat);
    CHECK(is[i].std_error == is[0].std_error);
    CHECK(be[i] == be[0]);
  }
}

TEST_CASE("zero tilt coincides with plain sampling") {
  const auto c = cfg_for(MartingaleModel::equal_weights(36), 4000);
  const auto a = estimate_tail_plain(c, 1.0);
  const auto b = estimate_tail_is(c, 1.0, 0.0);
  CHECK(b.p_hat == a.p_hat);
}

TEST_CASE("plain and importance-sampled estimates agree") {
  for (const auto& m : {MartingaleModel::equal_weights(64), MartingaleModel(VarianceSwitch{64, 0.5}),
                        MartingaleModel(RegressionModel{0.0, 100, 1.0, 2.0, 1.0, NoiseFamily::truncated_symmetric})}) {
    CAPTURE(m.id());
    const auto c = cfg_for(m, 40000);
    const auto a = estimate_tail_plain(c, 1.5);
    const auto b = estimate_tail_is(c, 1.5);
    REQUIRE(a.hits >= 100);
    const double se_a = std::sqrt(a.p_hat * (1 - a.p_hat) / a.paths);
    CHECK(std::fabs(a.p_hat - b.p_hat) <= 3 * std::hypot(se_a, b.std_error));
    CHECK(b.effective_samples > 0);
    CHECK(b.ci_lo <= b.p_hat);
    CHECK(b.p_hat <= b.ci_hi);
  }
}

TEST_CASE("importance sampling respects the constant-free tail bound") {
  const auto m = MartingaleModel::equal_weights(1000);
  const auto c = cfg_for(m, 20000);
  const auto t = estimate_tail_is(c, 4.0);
  CHECK(t.tilt == Approx(lambda_bar(4.0, m.params())).epsilon(1e-15));
  CHECK(t.ci_hi <= std::exp(-0.5 * std::pow(xhat(4.0, m.params()), 2)));
  CHECK(t.p_hat == Approx(std_normal_sf(4.0)).epsilon(0.25));
}

TEST_CASE("Monte Carlo distance matches the exact lattice distance within the band") {
  const auto m = MartingaleModel::equal_weights(16);
  std::vector<double> grid;
  for (double x = -3.0; x <= 3.0; x += 0.25) grid.push_back(x);
  const auto ex = estimate_be_distance(cfg_for(m, 1, Enumeration::always), grid);
  const auto mc = estimate_be_distance(cfg_for(m, 20000), grid);
  CHECK(ex.exact);
  CHECK_FALSE(mc.exact);
  CHECK(mc.uniform_error_band == Approx(dkw_band(20000, 0.99)));
  CHECK(std::fabs(mc.d_hat - ex.d_hat) <= mc.uniform_error_band);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::fabs(mc.cdf[i] - ex.cdf[i]) <= mc.uniform_error_band);
}

TEST_CASE("a Gaussian sample sits inside the band") {
  const std::size_t n = 5000;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std_normal_quantile((i + 0.5) / n);
  const auto r = be_distance_of_sample(v, {-2.0, -1.0, 0.0, 1.0, 2.0}, 0.99);
  CHECK(r.d_hat <= r.uniform_error_band);
  CHECK_THROWS(be_distance_of_sample(v, {}, 0.99));
}

TEST_CASE("calibration from empirical inputs") {
  CalibrationInputs in;
  in.params = BernsteinParams::checked(0.05, 0.1);
  for (double x : {0.0, 1.0, 2.0}) {
    const double f = std_normal_cdf(x);
    in.points.push_back({x, f, f, 1 - f, 1 - f});
  }
  for (auto e : {CalibrationEnvelope::thm21, CalibrationEnvelope::brmti, CalibrationEnvelope::cor21}) {
    CHECK(calibrate_from_empirical(e, in).c_hat == 0.0);
  }
  CalibrationInputs a = in, b = in;
  const double d[] = {0.02, 0.01, 0.004};
  for (int i = 0; i < 3; ++i) {
    a.points[i].cdf_lo = a.points[i].cdf_hi = in.points[i].cdf_hi + d[i];
    b.points[i].cdf_lo = b.points[i].cdf_hi = in.points[i].cdf_hi + d[i] / 2;
  }
  const double ca = calibrate_from_empirical(CalibrationEnvelope::thm21, a).c_hat;
  const double cb = calibrate_from_empirical(CalibrationEnvelope::thm21, b).c_hat;
  CHECK(ca > 0);
  CHECK(cb == Approx(ca / 2).epsilon(1e-12));
  const auto r = calibrate_from_empirical(CalibrationEnvelope::thm21, a);
  for (const auto& p : r.points) CHECK(p.c_required <= r.c_hat);
  CHECK(parse_calibration_envelope("thm22") == CalibrationEnvelope::thm22);
  CHECK_FALSE(parse_calibration_envelope("thm99").has_value());
}

TEST_CASE("calibration against a simulated model is finite and grid monotone") {
  const auto c = cfg_for(MartingaleModel::equal_weights(100), 20000);
  const auto coarse = calibrate_constant(c, CalibrationEnvelope::thm21, {0.0, 1.0, 2.0});
  const auto fine = calibrate_constant(c, CalibrationEnvelope::thm21, {0.0, 0.5, 1.0, 1.5, 2.0});
  CHECK(std::isfinite(coarse.c_hat));
  CHECK(fine.c_hat >= coarse.c_hat);
}

TEST_CASE("conjugate CLT and Z checks") {
  const auto c = cfg_for(MartingaleModel::equal_weights(100), 20000);
  const auto deg = conjugate_clt_check(c, 0.0, {-1.0, 0.0, 1.0});
  CHECK(deg.degenerate);
  CHECK(deg.lambda_bar == 0.0);
  const auto r = conjugate_clt_check(c, 1.0, {-2.0, -1.0, 0.0, 1.0, 2.0});
  CHECK_FALSE(r.degenerate);
  CHECK(r.sup_u_distance < 0.1);
  CHECK(r.sup_y_distance < 0.1);
  const auto ez = z_martingale_check(cfg_for(MartingaleModel::equal_weights(4), 1, Enumeration::always), 1.3);
  CHECK(ez.exact);
  CHECK(ez.mean == Approx(1.0).epsilon(1e-14));
  const auto mz = z_martingale_check(cfg_for(MartingaleModel::equal_weights(16), 100000), 1.0);
  CHECK(std::fabs(mz.z_score) <= 4.0);
}

TEST_CASE("quadratic characteristic deviation") {
  CHECK(qc_deviation_l1(cfg_for(MartingaleModel::equal_weights(16), 1000)) == Approx(0.0).scale(1.0).epsilon(1e-14));
  const double d = qc_deviation_l1(cfg_for(MartingaleModel(VarianceSwitch{40, 0.5}), 2000));
  CHECK(d > 0.0);
  CHECK(d <= 0.25 + 1e-12);
}

TEST_CASE("verification suite passes on every family") {
  VerificationOptions o;
  o.path_check_paths = 300;
  for (const auto& m : {MartingaleModel::equal_weights(16), MartingaleModel(VarianceSwitch{50, 0.3}),
                        MartingaleModel(RegressionModel{2.0, 120, 1.0, 2.0, 1.0, NoiseFamily::rademacher_scaled}),
                        MartingaleModel(SelfNormalized{60, 1.0, 2.0})}) {
    CAPTURE(m.id());
    const auto r = run_verification(cfg_for(m, 4000), o);
    CHECK(r.ok());
    CHECK(r.paths_checked == 300);
    CHECK(r.domination.size() == o.domination_grid.size());
    CHECK(r.min_drift_upper_slack >= 0.0);
    CHECK(r.min_psi_upper_slack >= 0.0);
  }
}

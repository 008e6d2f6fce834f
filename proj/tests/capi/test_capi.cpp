// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mgbound/mgbound.h"

using doctest::Approx;

namespace {

struct Model {
  mgb_model* h = nullptr;
  ~Model() { mgb_model_free(h); }
};
struct Path {
  mgb_path* h = nullptr;
  ~Path() { mgb_path_free(h); }
};
struct Data {
  mgb_dataset* h = nullptr;
  ~Data() { mgb_dataset_free(h); }
};

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::strlen(mgb_version()) > 0);
  double out = 0;
  CHECK(mgb_normal_quantile(1.5, &out) == MGB_ERR_DOMAIN);
  CHECK(std::strlen(mgb_last_error()) > 0);
  CHECK(mgb_normal_cdf(0.0, nullptr) == MGB_ERR_NULL);
  CHECK(mgb_normal_cdf(1.0, &out) == MGB_OK);
  CHECK(out == Approx(0.8413447460685429).epsilon(1e-15));
  double lo = 0, hi = 0;
  CHECK(mgb_mills_sandwich(2.0, &lo, &hi) == MGB_OK);
  double sf = 0;
  mgb_normal_sf(2.0, &sf);
  const double scaled = sf * std::exp(2.0);
  CHECK(lo <= scaled);
  CHECK(scaled <= hi);
}

TEST_CASE("envelopes through the C API") {
  mgb_envelope e{};
  REQUIRE(mgb_envelope_eval(MGB_ENV_TAIL_SQ, 1.0, 0.1, 0.2, 1.0, 0.0, &e) == MGB_OK);
  CHECK(e.value == Approx(0.64439494812127093).epsilon(1e-14));
  CHECK(e.xhat == Approx(0.93748969847447418).epsilon(1e-14));
  CHECK(e.lambda_bar == Approx(0.84189060220749034).epsilon(1e-14));
  REQUIRE(mgb_envelope_eval(MGB_ENV_NONUNIFORM_BE, 1.0, 0.1, 0.2, 1.0, 0.0, &e) == MGB_OK);
  CHECK(e.value == Approx(0.42563382993319616).epsilon(1e-13));
  REQUIRE(mgb_envelope_eval(MGB_ENV_BENNETT, 1.0, 0.1, 0.0, 1.0, 1.0, &e) == MGB_OK);
  CHECK(e.value == Approx(0.63413811645863946).epsilon(1e-14));
  CHECK(std::isnan(e.xhat));
  REQUIRE(mgb_envelope_eval(MGB_ENV_SELFNORM, 0.0, 0.1, 0.0, 1.0, 0.0, &e) == MGB_OK);
  CHECK(e.value == Approx(0.23025850929940457).epsilon(1e-14));
  CHECK(mgb_envelope_eval(MGB_ENV_TAIL_SQ, 1.0, 0.9, 0.0, 1.0, 0.0, &e) == MGB_ERR_DOMAIN);
  CHECK(std::string(mgb_last_error()).find("(A1)") != std::string::npos);
  CHECK(mgb_envelope_eval(MGB_ENV_REGRESSION, 1.0, 0.7, 0.0, 1.0, 0.0, &e) == MGB_ERR_DOMAIN);
  double w = 0;
  CHECK(mgb_wang_jing_bound(0.4, 0.1, 0.0, 1.0, &w) == MGB_OK);
  CHECK(w == Approx(0.116 * std::exp(-0.08)).epsilon(1e-14));
  double lb = 0;
  CHECK(mgb_lambda_bar(1.0, 0.1, 0.2, &lb) == MGB_OK);
  CHECK(lb == Approx(0.84189060220749034).epsilon(1e-14));
}

TEST_CASE("model handles and string buffers") {
  Model m;
  REQUIRE(mgb_model_equal_weights(4, &m.h) == MGB_OK);
  size_t needed = 0;
  CHECK(mgb_model_id(m.h, nullptr, 0, &needed) == MGB_OK);
  std::vector<char> small(2);
  CHECK(mgb_model_id(m.h, small.data(), small.size(), &needed) == MGB_ERR_BUFFER);
  std::vector<char> buf(needed);
  REQUIRE(mgb_model_id(m.h, buf.data(), buf.size(), &needed) == MGB_OK);
  CHECK(std::string(buf.data()).find("scaled_rademacher") != std::string::npos);
  CHECK(mgb_model_to_json(m.h, nullptr, 0, &needed) == MGB_OK);
  std::vector<char> js(needed);
  REQUIRE(mgb_model_to_json(m.h, js.data(), js.size(), &needed) == MGB_OK);
  Model back;
  REQUIRE(mgb_model_from_json(js.data(), &back.h) == MGB_OK);
  mgb_model_info info{};
  REQUIRE(mgb_model_get_info(back.h, &info) == MGB_OK);
  CHECK(info.steps == 4);
  CHECK(info.epsilon == 0.5);
  CHECK(info.normalized == 1);
  Model bad;
  CHECK(mgb_model_equal_weights(3, &bad.h) == MGB_ERR_CONFIG);
  CHECK(bad.h == nullptr);
  CHECK(mgb_model_variance_switch(10, 2.0, &bad.h) == MGB_ERR_CONFIG);
  CHECK(mgb_model_from_json("{", &bad.h) == MGB_ERR_CONFIG);
  mgb_model_free(nullptr);
  mgb_a1_report a1{};
  REQUIRE(mgb_verify_a1(m.h, 12, 1e-12, &a1) == MGB_OK);
  CHECK(a1.pass == 1);
  double d2 = -1;
  int exact = 0;
  Model vs;
  REQUIRE(mgb_model_variance_switch(10, 0.3, &vs.h) == MGB_OK);
  REQUIRE(mgb_verify_a2(vs.h, &d2, &exact) == MGB_OK);
  CHECK(d2 == Approx(0.09).epsilon(1e-15));
  CHECK(exact == 1);
}

TEST_CASE("paths and conjugate statistics") {
  Model m;
  REQUIRE(mgb_model_equal_weights(4, &m.h) == MGB_OK);
  Path p, q;
  REQUIRE(mgb_simulate_path(m.h, 3, 0, &p.h) == MGB_OK);
  REQUIRE(mgb_simulate_tilted_path(m.h, 0.0, 3, 0, &q.h) == MGB_OK);
  size_t n = 0, needed = 0;
  REQUIRE(mgb_path_steps(p.h, &n) == MGB_OK);
  CHECK(n == 4);
  std::vector<double> a(4), b(4), s(5);
  REQUIRE(mgb_path_copy(p.h, MGB_PATH_DIFFERENCES, a.data(), a.size(), &needed) == MGB_OK);
  REQUIRE(mgb_path_copy(q.h, MGB_PATH_DIFFERENCES, b.data(), b.size(), &needed) == MGB_OK);
  CHECK(a == b);
  CHECK(mgb_path_copy(p.h, MGB_PATH_PARTIAL_SUMS, s.data(), 2, &needed) == MGB_ERR_BUFFER);
  CHECK(needed == 5);
  REQUIRE(mgb_path_copy(p.h, MGB_PATH_PARTIAL_SUMS, s.data(), s.size(), &needed) == MGB_OK);
  mgb_conjugate_stats cs{};
  REQUIRE(mgb_conjugate_stats_eval(p.h, m.h, 1.0, &cs) == MGB_OK);
  CHECK(cs.psi == Approx(0.48045802783311010).epsilon(1e-14));
  CHECK(cs.b_drift == Approx(0.92423431452001952).epsilon(1e-14));
  CHECK(mgb_conjugate_stats_eval(p.h, m.h, 2.0, &cs) == MGB_ERR_DOMAIN);
  mgb_lemma_report lr{};
  REQUIRE(mgb_lemma_checks(p.h, m.h, 1.0, &lr) == MGB_OK);
  CHECK(lr.ok == 1);
  Path aug;
  REQUIRE(mgb_bolthausen_augment(p.h, 0.5, 1, &aug.h) == MGB_OK);
  REQUIRE(mgb_path_steps(aug.h, &n) == MGB_OK);
  CHECK(n == 4 + 4 + 1);
  CHECK(mgb_bolthausen_augment(p.h, 0.0, 1, &aug.h) == MGB_ERR_DOMAIN);
  REQUIRE(mgb_path_to_csv(p.h, nullptr, 0, &needed) == MGB_OK);
  std::vector<char> csv(needed);
  REQUIRE(mgb_path_to_csv(p.h, csv.data(), csv.size(), &needed) == MGB_OK);
  CHECK(std::string(csv.data()).rfind("step,xi,s,qc", 0) == 0);
}

TEST_CASE("simulation entry points") {
  Model m;
  REQUIRE(mgb_model_equal_weights(4, &m.h) == MGB_OK);
  mgb_sim_config cfg = mgb_sim_config_default();
  CHECK(cfg.paths == 100000);
  CHECK(cfg.confidence_level == 0.99);
  cfg.enumeration = MGB_ENUM_ALWAYS;
  const double xs[] = {0.9, 2.5};
  mgb_tail_estimate t[2]{};
  REQUIRE(mgb_estimate_tail_plain(m.h, &cfg, xs, 2, t) == MGB_OK);
  CHECK(t[0].p_hat == 0.3125);
  CHECK(t[0].method == MGB_TAIL_EXHAUSTIVE);
  CHECK(t[1].p_hat == 0.0);
  mgb_tail_estimate is{};
  REQUIRE(mgb_estimate_tail_is(m.h, &cfg, 0.9, NAN, &is) == MGB_OK);
  CHECK(is.p_hat == Approx(0.3125).epsilon(1e-15));
  const double g0[] = {0.0};
  double cdf = 0;
  mgb_be_distance be{};
  REQUIRE(mgb_estimate_be_distance(m.h, &cfg, g0, 1, &cdf, &be) == MGB_OK);
  CHECK(be.d_hat == 0.1875);
  CHECK(cdf == 0.6875);
  cfg.paths = 0;
  cfg.enumeration = MGB_ENUM_NEVER;
  CHECK(mgb_estimate_tail_plain(m.h, &cfg, xs, 1, t) == MGB_ERR_CONFIG);
  Model big;
  REQUIRE(mgb_model_equal_weights(400, &big.h) == MGB_OK);
  cfg = mgb_sim_config_default();
  cfg.paths = 10;
  cfg.enumeration = MGB_ENUM_ALWAYS;
  CHECK(mgb_estimate_tail_plain(big.h, &cfg, xs, 1, t) == MGB_ERR_UNSUPPORTED);
  cfg = mgb_sim_config_default();
  cfg.paths = 2000;
  mgb_calibration cal{};
  const double grid[] = {0.0, 1.0, 2.0};
  double emp[3], unit[3], req[3];
  REQUIRE(mgb_calibrate(big.h, &cfg, "thm21", grid, 3, &cal, emp, unit, req) == MGB_OK);
  CHECK(std::isfinite(cal.c_hat));
  CHECK(mgb_calibrate(big.h, &cfg, "nope", grid, 3, &cal, nullptr, nullptr, nullptr) == MGB_ERR_CONFIG);
  mgb_z_report z{};
  cfg.enumeration = MGB_ENUM_ALWAYS;
  REQUIRE(mgb_z_martingale_check(m.h, &cfg, 1.0, &z) == MGB_OK);
  CHECK(z.mean == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("verification report") {
  Model m;
  REQUIRE(mgb_model_variance_switch(40, 0.3, &m.h) == MGB_OK);
  mgb_sim_config cfg = mgb_sim_config_default();
  cfg.paths = 2000;
  mgb_verify_options o = mgb_verify_options_default();
  o.path_check_paths = 200;
  mgb_verify_report* r = nullptr;
  REQUIRE(mgb_run_verification(m.h, &cfg, &o, &r) == MGB_OK);
  mgb_verify_summary s{};
  REQUIRE(mgb_verify_get_summary(r, &s) == MGB_OK);
  CHECK(s.ok == 1);
  CHECK(s.paths_checked == 200);
  CHECK(s.n_domination == 8);
  mgb_tail_estimate t{};
  double bound = 0;
  REQUIRE(mgb_verify_get_domination(r, 0, &t, &bound) == MGB_OK);
  CHECK(t.ci_hi <= bound);
  CHECK(mgb_verify_get_domination(r, 99, &t, &bound) == MGB_ERR_DOMAIN);
  mgb_verify_report_free(r);
}

TEST_CASE("applications through the C API") {
  const double phi[] = {1.0, 1.0}, x[] = {2.0, 0.0};
  Data d;
  REQUIRE(mgb_dataset_create(phi, x, 2, 1.0, &d.h) == MGB_OK);
  double th = 0;
  REQUIRE(mgb_least_squares(d.h, &th) == MGB_OK);
  CHECK(th == 1.0);
  const double zero[] = {0.0, 0.0};
  Data bad;
  CHECK(mgb_dataset_create(zero, x, 2, 1.0, &bad.h) == MGB_ERR_CONFIG);
  CHECK(mgb_dataset_from_csv("/nonexistent/file.csv", 1.0, &bad.h) == MGB_ERR_IO);
  double xs = 0;
  int valid = 0;
  REQUIRE(mgb_regression_critical_value(0.01, 0.95, 0.0, MGB_CI_RATIO_BAND, &xs, &valid) == MGB_OK);
  CHECK(xs == Approx(1.959963984540054).epsilon(1e-12));
  CHECK(valid == 1);
  const double sample[] = {1.0, -1.0, 1.0};
  double st = 0;
  REQUIRE(mgb_self_norm_statistic(sample, 3, &st) == MGB_OK);
  CHECK(st == Approx(0.57735026918962576).epsilon(1e-15));
  CHECK(mgb_self_norm_statistic(zero, 2, &st) == MGB_ERR_DOMAIN);
  Model rm;
  REQUIRE(mgb_model_regression(2.0, 300, 1.0, 2.0, 1.0, MGB_NOISE_RADEMACHER, &rm.h) == MGB_OK);
  Data sim;
  REQUIRE(mgb_dataset_simulate(rm.h, 4, 0, &sim.h) == MGB_OK);
  size_t n = 0;
  REQUIRE(mgb_dataset_size(sim.h, &n) == MGB_OK);
  CHECK(n == 300);
  mgb_regression_eps e{};
  REQUIRE(mgb_regression_epsilons(sim.h, MGB_NOISE_RADEMACHER, &e) == MGB_OK);
  mgb_interval ci{};
  REQUIRE(mgb_regression_ci(sim.h, e.eps, 0.95, 1.0, MGB_CI_RATIO_BAND, &ci) == MGB_OK);
  CHECK(ci.lo < ci.hi);
  mgb_coverage cov{};
  REQUIRE(mgb_regression_coverage(rm.h, 0.9, 1.0, 200, 1, 1, 64, MGB_CI_RATIO_BAND, &cov) == MGB_OK);
  CHECK(cov.replications == 200);
  Model sn;
  REQUIRE(mgb_model_self_normalized(100, 1.0, 1.0, &sn.h) == MGB_OK);
  CHECK(mgb_dataset_simulate(sn.h, 1, 0, &bad.h) == MGB_ERR_UNSUPPORTED);
}

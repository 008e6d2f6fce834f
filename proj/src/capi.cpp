// SPDX-License-Identifier: Apache-2.0
#include "mgbound/mgbound.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <new>
#include <string>

#include "mgbound/applications.hpp"
#include "mgbound/bounds.hpp"
#include "mgbound/errors.hpp"
#include "mgbound/gaussian.hpp"
#include "mgbound/martingales.hpp"
#include "mgbound/montecarlo.hpp"

#ifndef MGBOUND_VERSION_STRING
#define MGBOUND_VERSION_STRING "0.0.0"
#endif

struct mgb_model {
  mgbound::MartingaleModel model;
};
struct mgb_path {
  mgbound::PathSample path;
};
struct mgb_verify_report {
  mgbound::VerificationReport report;
  std::vector<double> bounds;
};
struct mgb_dataset {
  mgbound::RegressionData data;
};

namespace {

using namespace mgbound;

thread_local std::string g_last_error;

mgb_status fail(mgb_status s, const char* what) {
  g_last_error = what;
  return s;
}

template <class F>
mgb_status guarded(F&& f) {
  try {
    f();
    return MGB_OK;
  } catch (const DomainError& e) {
    return fail(MGB_ERR_DOMAIN, e.what());
  } catch (const ConfigError& e) {
    return fail(MGB_ERR_CONFIG, e.what());
  } catch (const UnsupportedModel& e) {
    return fail(MGB_ERR_UNSUPPORTED, e.what());
  } catch (const IoError& e) {
    return fail(MGB_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MGB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MGB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MGB_ERR_INTERNAL, "unknown error");
  }
}


#define MGB_REQUIRE(ptr)                                          \
  do {                                                            \
    if ((ptr) == nullptr) return fail(MGB_ERR_NULL, #ptr " is NULL"); \
  } while (0)

mgb_status write_string(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf == nullptr && cap == 0) return needed ? MGB_OK : fail(MGB_ERR_NULL, "buf and needed are NULL");
  if (buf == nullptr) return fail(MGB_ERR_NULL, "buf is NULL");
  if (cap < s.size() + 1) return fail(MGB_ERR_BUFFER, "buffer too small");
  std::memcpy(buf, s.data(), s.size());
  buf[s.size()] = '\0';
  return MGB_OK;
}

void copy_cstr(char* dst, size_t cap, const std::string& src) {
  const size_t n = std::min(cap - 1, src.size());
  std::memcpy(dst, src.data(), n);
  dst[n] = '\0';
}

mgb_envelope to_c(const TailEnvelope& e) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {e.x, e.value, e.log_value, e.xhat.value_or(nan), e.lambda_bar.value_or(nan)};
}

NoiseFamily to_noise(mgb_noise n) {
  switch (n) {
    case MGB_NOISE_RADEMACHER: return NoiseFamily::rademacher_scaled;
    case MGB_NOISE_THREE_POINT: return NoiseFamily::truncated_symmetric;
  }
  throw ConfigError("unknown noise family");
}

CiInversion to_inversion(mgb_ci_inversion h) {
  switch (h) {
    case MGB_CI_RATIO_BAND: return CiInversion::ratio_band;
    case MGB_CI_ENVELOPE: return CiInversion::envelope;
  }
  throw ConfigError("unknown interval inversion");
}

SimulationConfig to_config(const mgb_model* m, const mgb_sim_config* c) {
  SimulationConfig cfg(m->model);
  cfg.paths = c->paths;
  cfg.seed = c->seed;
  cfg.chunk_size = c->chunk_size;
  cfg.confidence_level = c->confidence_level;
  cfg.workers = c->workers;
  switch (c->enumeration) {
    case MGB_ENUM_AUTO: cfg.enumeration = Enumeration::automatic; break;
    case MGB_ENUM_NEVER: cfg.enumeration = Enumeration::never; break;
    case MGB_ENUM_ALWAYS: cfg.enumeration = Enumeration::always; break;
    default: throw ConfigError("unknown enumeration policy");
  }
  cfg.validate();
  return cfg;
}

mgb_tail_estimate to_c(const TailEstimate& e) {
  mgb_tail_estimate o{};
  o.x = e.x;
  o.p_hat = e.p_hat;
  o.ci_lo = e.ci_lo;
  o.ci_hi = e.ci_hi;
  o.method = e.method == TailMethod::plain_clopper_pearson      ? MGB_TAIL_PLAIN
             : e.method == TailMethod::importance_sampled_delta ? MGB_TAIL_IMPORTANCE
                                                                : MGB_TAIL_EXHAUSTIVE;
  o.effective_samples = e.effective_samples;
  o.seed = e.seed;
  o.paths = e.paths;
  o.hits = e.hits;
  o.tilt = e.tilt;
  o.std_error = e.std_error;
  return o;
}

mgb_z_report to_c(const ZMartingaleReport& z) {
  return {z.lambda, z.mean, z.std_error, z.z_score, z.paths, z.exact ? 1 : 0};
}

mgb_status make_model(MartingaleModel::Family f, mgb_model** out) {
  MGB_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new mgb_model{MartingaleModel(std::move(f))}; });
}

}  // namespace

extern "C" {

const char* mgb_last_error(void) { return g_last_error.c_str(); }
const char* mgb_version(void) { return MGBOUND_VERSION_STRING; }

// ---- Gaussian

mgb_status mgb_normal_cdf(double x, double* out) {
  MGB_REQUIRE(out);
  return guarded([&] { *out = std_normal_cdf(x); });
}
mgb_status mgb_normal_sf(double x, double* out) {
  MGB_REQUIRE(out);
  return guarded([&] { *out = std_normal_sf(x); });
}
mgb_status mgb_normal_log_sf(double x, double* out) {
  MGB_REQUIRE(out);
  return guarded([&] { *out = std_normal_log_sf(x); });
}
mgb_status mgb_normal_quantile(double p, double* out) {
  MGB_REQUIRE(out);
  return guarded([&] { *out = std_normal_quantile(p); });
}
mgb_status mgb_mills_sandwich(double x, double* lower, double* upper) {
  MGB_REQUIRE(lower);
  MGB_REQUIRE(upper);
  return guarded([&] {
    const MillsSandwich s = mills_sandwich(x);
    *lower = s.lower;
    *upper = s.upper;
  });
}

// ---- Bounds

mgb_status mgb_envelope_eval(mgb_envelope_kind kind, double x, double epsilon, double delta, double c, double aux,
                             mgb_envelope* out) {
  MGB_REQUIRE(out);
  return guarded([&] {
    const BoundConstant k = BoundConstant::absolute(c);
    switch (kind) {
      case MGB_ENV_TAIL_SQ: *out = to_c(tail_bound_sq(x, BernsteinParams::permissive(epsilon, delta))); break;
      case MGB_ENV_NONUNIFORM_BE:
        *out = to_c(nonuniform_be_envelope(x, BernsteinParams::permissive(epsilon, delta), k));
        break;
      case MGB_ENV_STRENGTHENED:
        *out = to_c(strengthened_tail_envelope(x, BernsteinParams::permissive(epsilon, delta), k));
        break;
      case MGB_ENV_STRENGTHENED_F:
        *out = to_c(strengthened_tail_f_form(x, BernsteinParams::permissive(epsilon, delta), k));
        break;
      case MGB_ENV_COROLLARY: *out = to_c(corollary_envelope(x, epsilon, aux, k)); break;
      case MGB_ENV_BENNETT: *out = to_c(de_la_pena_bennett(x, aux, epsilon, BennettForm::corrected)); break;
      case MGB_ENV_BENNETT_PRINTED: *out = to_c(de_la_pena_bennett(x, aux, epsilon, BennettForm::as_printed)); break;
      case MGB_ENV_BERNSTEIN: *out = to_c(de_la_pena_bernstein(x, aux, epsilon)); break;
      case MGB_ENV_REGRESSION: {
        const RegressionEnvelope r = regression_envelope(x, epsilon, k);
        if (!r.valid) throw DomainError("epsilon violates condition (A1): epsilon must lie in (0, 1/2]");
        *out = to_c(r.nonuniform);
        break;
      }
      case MGB_ENV_SELFNORM: {
        const SelfNormEnvelope r = self_norm_envelope(x, epsilon, k);
        if (!r.valid) throw DomainError("epsilon violates condition (A1): epsilon must lie in (0, 1/2]");
        *out = to_c(r.envelope);
        break;
      }
      default: throw ConfigError("unknown envelope kind");
    }
  });
}

mgb_status mgb_xhat(double x, double epsilon, double delta, double* out) {
  MGB_REQUIRE(out);
  return guarded([&] { *out = xhat(x, BernsteinParams::permissive(epsilon, delta)); });
}
mgb_status mgb_breve_x(double x, double epsilon, double* out) {
  MGB_REQUIRE(out);
  return guarded([&] { *out = breve_x(x, epsilon); });
}
mgb_status mgb_lambda_bar(double x, double epsilon, double delta, double* out) {
  MGB_REQUIRE(out);
  return guarded([&] { *out = lambda_bar(x, BernsteinParams::permissive(epsilon, delta)); });
}
mgb_status mgb_ratio_band(double x, double epsilon, double delta, double c, double* lo, double* hi, int* valid) {
  MGB_REQUIRE(lo);
  MGB_REQUIRE(hi);
  MGB_REQUIRE(valid);
  return guarded([&] {
    const RatioBand b = cramer_ratio_band(x, BernsteinParams::checked(epsilon, delta), BoundConstant::absolute(c));
    *lo = b.lo;
    *hi = b.hi;
    *valid = b.valid ? 1 : 0;
  });
}
mgb_status mgb_uniform_be_bound(double epsilon, double delta, double c, double* out) {
  MGB_REQUIRE(out);
  return guarded(
      [&] { *out = uniform_be_bound(BernsteinParams::checked(epsilon, delta), BoundConstant::absolute(c)); });
}
mgb_status mgb_corollary_uniform_bound(double epsilon, double qc_l1, double c, double* out) {
  MGB_REQUIRE(out);
  return guarded([&] { *out = corollary_uniform_bound(epsilon, qc_l1, BoundConstant::absolute(c)); });
}
mgb_status mgb_classical_envelopes(double x, const mgb_moment_summary* m, double delta_m, double c, double out[3]) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(out);
  return guarded([&] {
    MomentSummary s;
    s.third_moments_sum = m->third_moments_sum;
    s.truncated_second = m->truncated_second;
    s.truncated_third = m->truncated_third;
    s.qc_deviation_moment = m->qc_deviation_moment;
    s.L3n = m->L3n;
    s.Bn2 = m->Bn2;
    s.tail_prob_sum = m->tail_prob_sum;
    const ClassicalEnvelopes e = classical_envelopes(x, s, delta_m, BoundConstant::absolute(c));
    out[0] = e.bikelis;
    out[1] = e.chen_shao;
    out[2] = e.haeusler_joos;
  });
}
mgb_status mgb_wang_jing_bound(double x, double L3n, double tail_prob_sum, double c, double* out) {
  MGB_REQUIRE(out);
  return guarded([&] { *out = wang_jing_bound(x, L3n, tail_prob_sum, BoundConstant::absolute(c)); });
}
mgb_status mgb_wang_jing_inputs(size_t n, double a, double b, double x, double* L3n, double* tail_prob_sum) {
  MGB_REQUIRE(L3n);
  MGB_REQUIRE(tail_prob_sum);
  return guarded([&] {
    const WangJingInputs w = wang_jing_inputs(SelfNormalized{n, a, b}, x);
    *L3n = w.L3n;
    *tail_prob_sum = w.tail_prob_sum;
  });
}

// ---- Models

mgb_status mgb_model_scaled_rademacher(const double* weights, size_t n, mgb_model** out) {
  if (n > 0) MGB_REQUIRE(weights);
  return make_model(ScaledRademacher{std::vector<double>(weights, weights + n)}, out);
}
mgb_status mgb_model_equal_weights(size_t n, mgb_model** out) {
  MGB_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new mgb_model{MartingaleModel::equal_weights(n)}; });
}
mgb_status mgb_model_variance_switch(size_t n, double delta, mgb_model** out) {
  return make_model(VarianceSwitch{n, delta}, out);
}
mgb_status mgb_model_regression(double theta, size_t n, double a, double b, double sigma, mgb_noise noise,
                                mgb_model** out) {
  MGB_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    *out = new mgb_model{MartingaleModel(RegressionModel{theta, n, a, b, sigma, to_noise(noise)})};
  });
}
mgb_status mgb_model_self_normalized(size_t n, double a, double b, mgb_model** out) {
  return make_model(SelfNormalized{n, a, b}, out);
}
mgb_status mgb_model_from_json(const char* json, mgb_model** out) {
  MGB_REQUIRE(json);
  MGB_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new mgb_model{model_from_json(json)}; });
}
mgb_status mgb_model_to_json(const mgb_model* m, char* buf, size_t cap, size_t* needed) {
  MGB_REQUIRE(m);
  std::string s;
  const mgb_status st = guarded([&] { s = model_to_json(m->model); });
  return st != MGB_OK ? st : write_string(s, buf, cap, needed);
}
mgb_status mgb_model_id(const mgb_model* m, char* buf, size_t cap, size_t* needed) {
  MGB_REQUIRE(m);
  std::string s;
  const mgb_status st = guarded([&] { s = m->model.id(); });
  return st != MGB_OK ? st : write_string(s, buf, cap, needed);
}
void mgb_model_free(mgb_model* m) { delete m; }

mgb_status mgb_model_get_info(const mgb_model* m, mgb_model_info* out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(out);
  out->steps = m->model.steps();
  out->epsilon = m->model.epsilon();
  out->delta = m->model.delta();
  out->normalized = m->model.normalized() ? 1 : 0;
  out->deterministic_environment = m->model.deterministic_environment() ? 1 : 0;
  return MGB_OK;
}

mgb_status mgb_verify_a1(const mgb_model* m, int max_order, double tol, mgb_a1_report* out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(out);
  return guarded([&] {
    const A1Report r = verify_A1(m->model, max_order, tol);
    *out = {r.pass ? 1 : 0, r.declared_epsilon, r.binding_epsilon, r.worst_margin, r.checks.size()};
  });
}
mgb_status mgb_verify_a2(const mgb_model* m, double* delta_sq_bound, int* exact) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(delta_sq_bound);
  MGB_REQUIRE(exact);
  return guarded([&] {
    const A2Report r = verify_A2(m->model);
    *delta_sq_bound = r.delta_sq_bound;
    *exact = r.exact ? 1 : 0;
  });
}
mgb_status mgb_noise_bernstein_constant(mgb_noise noise, double sigma, int max_order, double* out) {
  MGB_REQUIRE(out);
  return guarded([&] { *out = noise_bernstein_constant(to_noise(noise), sigma, max_order); });
}

// ---- Paths

mgb_status mgb_simulate_path(const mgb_model* m, uint64_t seed, uint64_t path_index, mgb_path** out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new mgb_path{simulate_path(m->model, seed, path_index)}; });
}
mgb_status mgb_simulate_tilted_path(const mgb_model* m, double lambda, uint64_t seed, uint64_t path_index,
                                    mgb_path** out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new mgb_path{simulate_tilted_path(m->model, lambda, seed, path_index)}; });
}
mgb_status mgb_bolthausen_augment(const mgb_path* p, double epsilon, uint64_t seed, mgb_path** out) {
  MGB_REQUIRE(p);
  MGB_REQUIRE(out);
  *out = nullptr;
  return guarded([&] { *out = new mgb_path{bolthausen_augment(p->path, epsilon, seed)}; });
}
void mgb_path_free(mgb_path* p) { delete p; }

mgb_status mgb_path_steps(const mgb_path* p, size_t* out) {
  MGB_REQUIRE(p);
  MGB_REQUIRE(out);
  *out = p->path.steps();
  return MGB_OK;
}
mgb_status mgb_path_copy(const mgb_path* p, mgb_path_field field, double* buf, size_t cap, size_t* needed) {
  MGB_REQUIRE(p);
  const std::vector<double>* v = nullptr;
  switch (field) {
    case MGB_PATH_DIFFERENCES: v = &p->path.differences; break;
    case MGB_PATH_PARTIAL_SUMS: v = &p->path.partial_sums; break;
    case MGB_PATH_QC: v = &p->path.qc; break;
    default: return fail(MGB_ERR_CONFIG, "unknown path field");
  }
  if (needed) *needed = v->size();
  if (buf == nullptr) return needed ? MGB_OK : fail(MGB_ERR_NULL, "buf and needed are NULL");
  if (cap < v->size()) return fail(MGB_ERR_BUFFER, "buffer too small");
  std::copy(v->begin(), v->end(), buf);
  return MGB_OK;
}
mgb_status mgb_path_sq_bracket(const mgb_path* p, double* out) {
  MGB_REQUIRE(p);
  MGB_REQUIRE(out);
  *out = p->path.sq_bracket;
  return MGB_OK;
}
mgb_status mgb_path_to_csv(const mgb_path* p, char* buf, size_t cap, size_t* needed) {
  MGB_REQUIRE(p);
  std::string s;
  const mgb_status st = guarded([&] { s = path_to_csv(p->path); });
  return st != MGB_OK ? st : write_string(s, buf, cap, needed);
}

mgb_status mgb_conjugate_stats_eval(const mgb_path* p, const mgb_model* m, double lambda, mgb_conjugate_stats* out) {
  MGB_REQUIRE(p);
  MGB_REQUIRE(m);
  MGB_REQUIRE(out);
  return guarded([&] {
    const ConjugatePathStats s = conjugate_stats(p->path, m->model, lambda);
    *out = {s.lambda, s.z, s.log_z, s.psi, s.b_drift, s.y};
  });
}
mgb_status mgb_lemma_checks(const mgb_path* p, const mgb_model* m, double lambda, mgb_lemma_report* out) {
  MGB_REQUIRE(p);
  MGB_REQUIRE(m);
  MGB_REQUIRE(out);
  return guarded([&] {
    const ConjugatePathStats s = conjugate_stats(p->path, m->model, lambda);
    const LemmaReport r = lemma_checks(p->path, s, m->model.params(), m->model.normalized());
    *out = {r.ok ? 1 : 0, r.drift_upper_slack, r.psi_upper_slack, r.half_cosh_slack, r.drift_lower_slack_c1,
            r.violations.size()};
  });
}

// ---- Simulation

mgb_sim_config mgb_sim_config_default(void) { return {100000, 0, 4096, 0.99, 1, MGB_ENUM_AUTO}; }

mgb_status mgb_estimate_tail_plain(const mgb_model* m, const mgb_sim_config* cfg, const double* xs, size_t nx,
                                   mgb_tail_estimate* out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(cfg);
  if (nx > 0) {
    MGB_REQUIRE(xs);
    MGB_REQUIRE(out);
  }
  return guarded([&] {
    const auto est = estimate_tail_plain_grid(to_config(m, cfg), std::vector<double>(xs, xs + nx));
    for (size_t i = 0; i < est.size(); ++i) out[i] = to_c(est[i]);
  });
}
mgb_status mgb_estimate_tail_is(const mgb_model* m, const mgb_sim_config* cfg, double x, double tilt,
                                mgb_tail_estimate* out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(cfg);
  MGB_REQUIRE(out);
  return guarded([&] {
    const std::optional<double> t = std::isnan(tilt) ? std::nullopt : std::optional<double>(tilt);
    *out = to_c(estimate_tail_is(to_config(m, cfg), x, t));
  });
}
mgb_status mgb_exact_tail(const mgb_model* m, double x, double* out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(out);
  return guarded([&] { *out = exact_tail(m->model, x); });
}
mgb_status mgb_exact_tail_is(const mgb_model* m, double x, double tilt, double* out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(out);
  return guarded([&] { *out = exact_tail_is(m->model, x, tilt); });
}
mgb_status mgb_estimate_be_distance(const mgb_model* m, const mgb_sim_config* cfg, const double* grid, size_t ng,
                                    double* cdf_out, mgb_be_distance* out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(cfg);
  MGB_REQUIRE(out);
  if (ng > 0) MGB_REQUIRE(grid);
  return guarded([&] {
    const BEDistanceEstimate e = estimate_be_distance(to_config(m, cfg), std::vector<double>(grid, grid + ng));
    *out = {e.d_hat, e.argmax_x, e.uniform_error_band, e.paths, e.exact ? 1 : 0};
    if (cdf_out) std::copy(e.cdf.begin(), e.cdf.end(), cdf_out);
  });
}
mgb_status mgb_calibrate(const mgb_model* m, const mgb_sim_config* cfg, const char* envelope, const double* grid,
                         size_t ng, mgb_calibration* out, double* empirical, double* unit, double* c_required) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(cfg);
  MGB_REQUIRE(envelope);
  MGB_REQUIRE(out);
  if (ng > 0) MGB_REQUIRE(grid);
  return guarded([&] {
    const auto env = parse_calibration_envelope(envelope);
    if (!env) throw ConfigError(std::string("unknown calibration envelope '") + envelope + "'");
    const CalibrationResult r = calibrate_constant(to_config(m, cfg), *env, std::vector<double>(grid, grid + ng));
    *out = {r.c_hat, r.binding_x, r.qc_l1, r.paths, r.exact ? 1 : 0};
    for (size_t i = 0; i < r.points.size(); ++i) {
      if (empirical) empirical[i] = r.points[i].empirical;
      if (unit) unit[i] = r.points[i].unit;
      if (c_required) c_required[i] = r.points[i].c_required;
    }
  });
}
mgb_status mgb_conjugate_clt_check(const mgb_model* m, const mgb_sim_config* cfg, double x, const double* u_grid,
                                   size_t nu, mgb_clt_report* out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(cfg);
  MGB_REQUIRE(out);
  if (nu > 0) MGB_REQUIRE(u_grid);
  return guarded([&] {
    const ConjugateCltReport r = conjugate_clt_check(to_config(m, cfg), x, std::vector<double>(u_grid, u_grid + nu));
    *out = {r.x,           r.lambda_bar,         r.xhat,  r.degenerate ? 1 : 0, r.sup_u_distance, r.sup_y_distance,
            r.uniform_error_band, r.paths, r.exact ? 1 : 0};
  });
}
mgb_status mgb_z_martingale_check(const mgb_model* m, const mgb_sim_config* cfg, double lambda, mgb_z_report* out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(cfg);
  MGB_REQUIRE(out);
  return guarded([&] { *out = to_c(z_martingale_check(to_config(m, cfg), lambda)); });
}
mgb_status mgb_qc_deviation_l1(const mgb_model* m, const mgb_sim_config* cfg, double* out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(cfg);
  MGB_REQUIRE(out);
  return guarded([&] { *out = qc_deviation_l1(to_config(m, cfg)); });
}

// ---- Assertion suite

mgb_verify_options mgb_verify_options_default(void) { return {nullptr, 0, nullptr, 0, 0, 1, 1}; }

mgb_status mgb_run_verification(const mgb_model* m, const mgb_sim_config* cfg, const mgb_verify_options* opts,
                                mgb_verify_report** out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(cfg);
  MGB_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    VerificationOptions o;
    if (opts) {
      if (opts->tilt_fractions)
        o.tilt_fractions.assign(opts->tilt_fractions, opts->tilt_fractions + opts->n_tilt_fractions);
      if (opts->domination_grid)
        o.domination_grid.assign(opts->domination_grid, opts->domination_grid + opts->n_domination_grid);
      o.path_check_paths = opts->path_check_paths;
      o.check_domination = opts->check_domination != 0;
      o.check_z_mean = opts->check_z_mean != 0;
    }
    auto* r = new mgb_verify_report{run_verification(to_config(m, cfg), o), {}};
    const BernsteinParams params = m->model.params();
    for (const auto& e : r->report.domination) r->bounds.push_back(tail_bound_sq(e.x, params).value);
    *out = r;
  });
}
mgb_status mgb_verify_get_summary(const mgb_verify_report* r, mgb_verify_summary* out) {
  MGB_REQUIRE(r);
  MGB_REQUIRE(out);
  const VerificationReport& v = r->report;
  *out = {v.ok() ? 1 : 0,
          v.a1_pass ? 1 : 0,
          v.a1_binding_epsilon,
          v.a2_delta_sq,
          v.paths_checked,
          v.path_violation_count,
          v.min_drift_upper_slack,
          v.min_psi_upper_slack,
          v.min_half_cosh_slack,
          v.domination.size(),
          v.z_checks.size(),
          v.violations.size()};
  return MGB_OK;
}
mgb_status mgb_verify_get_domination(const mgb_verify_report* r, size_t i, mgb_tail_estimate* out, double* bound) {
  MGB_REQUIRE(r);
  MGB_REQUIRE(out);
  if (i >= r->report.domination.size()) return fail(MGB_ERR_DOMAIN, "index out of range");
  *out = to_c(r->report.domination[i]);
  if (bound) *bound = r->bounds[i];
  return MGB_OK;
}
mgb_status mgb_verify_get_z_check(const mgb_verify_report* r, size_t i, mgb_z_report* out) {
  MGB_REQUIRE(r);
  MGB_REQUIRE(out);
  if (i >= r->report.z_checks.size()) return fail(MGB_ERR_DOMAIN, "index out of range");
  *out = to_c(r->report.z_checks[i]);
  return MGB_OK;
}
mgb_status mgb_verify_get_violation(const mgb_verify_report* r, size_t i, mgb_violation* out) {
  MGB_REQUIRE(r);
  MGB_REQUIRE(out);
  if (i >= r->report.violations.size()) return fail(MGB_ERR_DOMAIN, "index out of range");
  const Violation& v = r->report.violations[i];
  copy_cstr(out->check, sizeof out->check, v.check);
  out->seed = v.seed;
  out->path_index = v.path_index;
  out->lambda = v.lambda;
  out->lhs = v.lhs;
  out->rhs = v.rhs;
  copy_cstr(out->detail, sizeof out->detail, v.detail);
  return MGB_OK;
}
void mgb_verify_report_free(mgb_verify_report* r) { delete r; }

// ---- Applications

mgb_status mgb_dataset_create(const double* phi, const double* x, size_t n, double sigma, mgb_dataset** out) {
  MGB_REQUIRE(out);
  *out = nullptr;
  if (n > 0) {
    MGB_REQUIRE(phi);
    MGB_REQUIRE(x);
  }
  return guarded([&] {
    RegressionData d{std::vector<double>(phi, phi + n), std::vector<double>(x, x + n), sigma};
    d.validate();
    *out = new mgb_dataset{std::move(d)};
  });
}
mgb_status mgb_dataset_from_csv(const char* path, double sigma, mgb_dataset** out) {
  MGB_REQUIRE(path);
  MGB_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string("cannot open ") + path);
    *out = new mgb_dataset{read_regression_csv(in, sigma)};
  });
}
mgb_status mgb_dataset_simulate(const mgb_model* m, uint64_t seed, uint64_t index, mgb_dataset** out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    const auto* rm = std::get_if<RegressionModel>(&m->model.family());
    if (!rm) throw UnsupportedModel("dataset simulation needs a regression model");
    *out = new mgb_dataset{simulate_regression(*rm, seed, index)};
  });
}
mgb_status mgb_dataset_size(const mgb_dataset* d, size_t* out) {
  MGB_REQUIRE(d);
  MGB_REQUIRE(out);
  *out = d->data.covariates.size();
  return MGB_OK;
}
mgb_status mgb_dataset_columns(const mgb_dataset* d, const double** phi, const double** x, double* sigma) {
  MGB_REQUIRE(d);
  if (phi) *phi = d->data.covariates.data();
  if (x) *x = d->data.responses.data();
  if (sigma) *sigma = d->data.sigma;
  return MGB_OK;
}
void mgb_dataset_free(mgb_dataset* d) { delete d; }

mgb_status mgb_least_squares(const mgb_dataset* d, double* out) {
  MGB_REQUIRE(d);
  MGB_REQUIRE(out);
  return guarded([&] { *out = least_squares(d->data); });
}
mgb_status mgb_regression_reduction_check(const mgb_dataset* d, double theta, mgb_reduction* out) {
  MGB_REQUIRE(d);
  MGB_REQUIRE(out);
  return guarded([&] {
    const ReductionCheck r = regression_reduction_check(d->data, theta);
    *out = {r.lhs, r.rhs, r.residual, r.relative};
  });
}
mgb_status mgb_regression_epsilons(const mgb_dataset* d, mgb_noise noise, mgb_regression_eps* out) {
  MGB_REQUIRE(d);
  MGB_REQUIRE(out);
  return guarded([&] {
    const RegressionEpsilons e = regression_epsilons(d->data, to_noise(noise));
    *out = {e.eps1, e.eps2, e.eps};
  });
}
mgb_status mgb_regression_epsilons_model(const mgb_model* m, mgb_regression_eps* out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(out);
  return guarded([&] {
    const auto* rm = std::get_if<RegressionModel>(&m->model.family());
    if (!rm) throw UnsupportedModel("regression epsilons need a regression model");
    const RegressionEpsilons e = regression_epsilons(*rm);
    *out = {e.eps1, e.eps2, e.eps};
  });
}
mgb_status mgb_regression_critical_value(double eps, double level, double c, mgb_ci_inversion how, double* x_star,
                                         int* valid) {
  MGB_REQUIRE(x_star);
  MGB_REQUIRE(valid);
  return guarded([&] {
    const CriticalValue cv = regression_critical_value(eps, level, BoundConstant::absolute(c), to_inversion(how));
    *x_star = cv.x_star;
    *valid = cv.valid ? 1 : 0;
  });
}
mgb_status mgb_regression_ci(const mgb_dataset* d, double eps, double level, double c, mgb_ci_inversion how,
                             mgb_interval* out) {
  MGB_REQUIRE(d);
  MGB_REQUIRE(out);
  return guarded([&] {
    const RegressionInterval r = regression_ci(d->data, eps, level, BoundConstant::absolute(c), to_inversion(how));
    *out = {r.theta_hat, r.lo, r.hi, r.x_star, r.half_width, r.valid ? 1 : 0};
  });
}
mgb_status mgb_regression_coverage(const mgb_model* m, double level, double c, uint64_t replications, uint64_t seed,
                                   unsigned workers, uint64_t chunk_size, mgb_ci_inversion how, mgb_coverage* out) {
  MGB_REQUIRE(m);
  MGB_REQUIRE(out);
  return guarded([&] {
    const auto* rm = std::get_if<RegressionModel>(&m->model.family());
    if (!rm) throw UnsupportedModel("coverage experiments need a regression model");
    const CoverageResult r = regression_coverage(*rm, level, BoundConstant::absolute(c), replications, seed, workers,
                                                 chunk_size, to_inversion(how));
    *out = {r.level, r.replications, r.covered, r.coverage, r.std_error, r.max_eps, r.mean_x_star, r.invalid};
  });
}
mgb_status mgb_self_norm_statistic(const double* sample, size_t n, double* out) {
  MGB_REQUIRE(out);
  if (n > 0) MGB_REQUIRE(sample);
  return guarded([&] { *out = self_norm_statistic(std::vector<double>(sample, sample + n)); });
}
mgb_status mgb_self_norm_envelope(double x, double eps, double c, double* envelope, double* band_lo, double* band_hi,
                                  int* band_valid) {
  MGB_REQUIRE(envelope);
  return guarded([&] {
    const SelfNormEnvelope r = self_norm_envelope(x, eps, BoundConstant::absolute(c));
    *envelope = r.envelope.value;
    if (band_lo) *band_lo = r.band.lo;
    if (band_hi) *band_hi = r.band.hi;
    if (band_valid) *band_valid = r.band.valid && r.valid ? 1 : 0;
  });
}

}  // extern "C"

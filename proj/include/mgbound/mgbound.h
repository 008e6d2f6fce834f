/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface of the martingale bound toolkit.
 *
 * Conventions:
 *  - Every function returns an mgb_status; MGB_OK is 0. On failure the
 *    message is available from mgb_last_error() (thread-local, valid until
 *    the next failing call on the same thread).
 *  - Objects are opaque handles created by mgb_*_new/ mgb_*_create style
 *    functions and released with the matching *_free; *_free(NULL) is a no-op.
 *  - Strings are returned through caller buffers: pass buf/cap, receive the
 *    required size (including the terminating NUL) in *needed. A too-small
 *    buffer yields MGB_ERR_BUFFER and leaves buf untouched; buf = NULL with
 *    cap = 0 is a size query and returns MGB_OK.
 */
#ifndef MGBOUND_H
#define MGBOUND_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MGB_API __declspec(dllexport)
#else
#define MGB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mgb_status {
  MGB_OK = 0,
  MGB_ERR_DOMAIN = 1,      /* argument outside the mathematical domain */
  MGB_ERR_CONFIG = 2,      /* invalid configuration or model parameters */
  MGB_ERR_UNSUPPORTED = 3, /* operation not available for this model */
  MGB_ERR_IO = 4,
  MGB_ERR_NULL = 5,        /* required pointer argument was NULL */
  MGB_ERR_BUFFER = 6,      /* caller buffer too small */
  MGB_ERR_INTERNAL = 7
} mgb_status;

MGB_API const char* mgb_last_error(void);
MGB_API const char* mgb_version(void);

/* ---- Gaussian ---------------------------------------------------------- */

MGB_API mgb_status mgb_normal_cdf(double x, double* out);
MGB_API mgb_status mgb_normal_sf(double x, double* out);
MGB_API mgb_status mgb_normal_log_sf(double x, double* out);
MGB_API mgb_status mgb_normal_quantile(double p, double* out);
/* Bounds on (1 - Phi(x)) for x >= 0. */
MGB_API mgb_status mgb_mills_sandwich(double x, double* lower, double* upper);

/* ---- Closed-form bounds ------------------------------------------------ */

typedef enum mgb_envelope_kind {
  MGB_ENV_TAIL_SQ = 0,          /* exp(-xhat^2/2) */
  MGB_ENV_NONUNIFORM_BE = 1,    /* C (1+x^2)(eps|log eps| + delta/(1+|x|)) exp(-xhat^2/2) */
  MGB_ENV_STRENGTHENED = 2,     /* (1 - Phi(xhat)) [1 + C (1+xhat)(...)] */
  MGB_ENV_STRENGTHENED_F = 3,   /* F(x) exp(-xhat^2/2) */
  MGB_ENV_COROLLARY = 4,        /* aux = E|<S>_n - 1| */
  MGB_ENV_BENNETT = 5,          /* aux = v; corrected denominator */
  MGB_ENV_BENNETT_PRINTED = 6,  /* aux = v; denominator as printed */
  MGB_ENV_BERNSTEIN = 7,        /* aux = v */
  MGB_ENV_REGRESSION = 8,       /* C (1+x^2) eps|log eps| exp(-breve_x^2/2) */
  MGB_ENV_SELFNORM = 9          /* C eps|log eps| (1+x^2) exp(-x^2/2) */
} mgb_envelope_kind;

typedef struct mgb_envelope {
  double x;
  double value;
  double log_value;
  double xhat;       /* NaN when not applicable */
  double lambda_bar; /* NaN when not applicable */
} mgb_envelope;

MGB_API mgb_status mgb_envelope_eval(mgb_envelope_kind kind, double x, double epsilon, double delta, double c,
                                     double aux, mgb_envelope* out);
MGB_API mgb_status mgb_xhat(double x, double epsilon, double delta, double* out);
MGB_API mgb_status mgb_breve_x(double x, double epsilon, double* out);
MGB_API mgb_status mgb_lambda_bar(double x, double epsilon, double delta, double* out);
MGB_API mgb_status mgb_ratio_band(double x, double epsilon, double delta, double c, double* lo, double* hi,
                                  int* valid);
MGB_API mgb_status mgb_uniform_be_bound(double epsilon, double delta, double c, double* out);
MGB_API mgb_status mgb_corollary_uniform_bound(double epsilon, double qc_l1, double c, double* out);

typedef struct mgb_moment_summary {
  double third_moments_sum;
  double truncated_second;
  double truncated_third;
  double qc_deviation_moment;
  double L3n;
  double Bn2;
  double tail_prob_sum;
} mgb_moment_summary;

/* out[0] = Bikelis, out[1] = Chen-Shao, out[2] = Haeusler-Joos. */
MGB_API mgb_status mgb_classical_envelopes(double x, const mgb_moment_summary* m, double delta_m, double c,
                                           double out[3]);
MGB_API mgb_status mgb_wang_jing_bound(double x, double L3n, double tail_prob_sum, double c, double* out);
MGB_API mgb_status mgb_wang_jing_inputs(size_t n, double a, double b, double x, double* L3n,
                                        double* tail_prob_sum);

/* ---- Models ------------------------------------------------------------ */

typedef struct mgb_model mgb_model;

typedef enum mgb_noise { MGB_NOISE_RADEMACHER = 0, MGB_NOISE_THREE_POINT = 1 } mgb_noise;

MGB_API mgb_status mgb_model_scaled_rademacher(const double* weights, size_t n, mgb_model** out);
MGB_API mgb_status mgb_model_equal_weights(size_t n, mgb_model** out);
MGB_API mgb_status mgb_model_variance_switch(size_t n, double delta, mgb_model** out);
MGB_API mgb_status mgb_model_regression(double theta, size_t n, double a, double b, double sigma, mgb_noise noise,
                                        mgb_model** out);
MGB_API mgb_status mgb_model_self_normalized(size_t n, double a, double b, mgb_model** out);
MGB_API mgb_status mgb_model_from_json(const char* json, mgb_model** out);
MGB_API mgb_status mgb_model_to_json(const mgb_model* m, char* buf, size_t cap, size_t* needed);
MGB_API mgb_status mgb_model_id(const mgb_model* m, char* buf, size_t cap, size_t* needed);
MGB_API void mgb_model_free(mgb_model* m);

typedef struct mgb_model_info {
  size_t steps;
  double epsilon;
  double delta;
  int normalized;                /* <S>_n = 1 on every path */
  int deterministic_environment; /* enumerable law */
} mgb_model_info;

MGB_API mgb_status mgb_model_get_info(const mgb_model* m, mgb_model_info* out);

typedef struct mgb_a1_report {
  int pass;
  double declared_epsilon;
  double binding_epsilon;
  double worst_margin;
  size_t checks;
} mgb_a1_report;

MGB_API mgb_status mgb_verify_a1(const mgb_model* m, int max_order, double tol, mgb_a1_report* out);
MGB_API mgb_status mgb_verify_a2(const mgb_model* m, double* delta_sq_bound, int* exact);
MGB_API mgb_status mgb_noise_bernstein_constant(mgb_noise noise, double sigma, int max_order, double* out);

/* ---- Paths ------------------------------------------------------------- */

typedef struct mgb_path mgb_path;

MGB_API mgb_status mgb_simulate_path(const mgb_model* m, uint64_t seed, uint64_t path_index, mgb_path** out);
MGB_API mgb_status mgb_simulate_tilted_path(const mgb_model* m, double lambda, uint64_t seed, uint64_t path_index,
                                            mgb_path** out);
MGB_API mgb_status mgb_bolthausen_augment(const mgb_path* p, double epsilon, uint64_t seed, mgb_path** out);
MGB_API void mgb_path_free(mgb_path* p);

typedef enum mgb_path_field {
  MGB_PATH_DIFFERENCES = 0, /* n values */
  MGB_PATH_PARTIAL_SUMS = 1,/* n + 1 values */
  MGB_PATH_QC = 2           /* n + 1 values */
} mgb_path_field;

MGB_API mgb_status mgb_path_steps(const mgb_path* p, size_t* out);
MGB_API mgb_status mgb_path_copy(const mgb_path* p, mgb_path_field field, double* buf, size_t cap, size_t* needed);
MGB_API mgb_status mgb_path_sq_bracket(const mgb_path* p, double* out);
MGB_API mgb_status mgb_path_to_csv(const mgb_path* p, char* buf, size_t cap, size_t* needed);

typedef struct mgb_conjugate_stats {
  double lambda;
  double z;
  double log_z;
  double psi;
  double b_drift;
  double y;
} mgb_conjugate_stats;

MGB_API mgb_status mgb_conjugate_stats_eval(const mgb_path* p, const mgb_model* m, double lambda,
                                            mgb_conjugate_stats* out);

typedef struct mgb_lemma_report {
  int ok;
  double drift_upper_slack;
  double psi_upper_slack;
  double half_cosh_slack;
  double drift_lower_slack_c1;
  size_t violations;
} mgb_lemma_report;

MGB_API mgb_status mgb_lemma_checks(const mgb_path* p, const mgb_model* m, double lambda, mgb_lemma_report* out);

/* ---- Simulation -------------------------------------------------------- */

typedef enum mgb_enumeration { MGB_ENUM_AUTO = 0, MGB_ENUM_NEVER = 1, MGB_ENUM_ALWAYS = 2 } mgb_enumeration;

typedef struct mgb_sim_config {
  uint64_t paths;
  uint64_t seed;
  uint64_t chunk_size;
  double confidence_level;
  unsigned workers; /* 0 = one per hardware thread */
  mgb_enumeration enumeration;
} mgb_sim_config;

/* paths 100000, seed 0, chunk 4096, level 0.99, 1 worker, automatic enumeration. */
MGB_API mgb_sim_config mgb_sim_config_default(void);

typedef enum mgb_tail_method {
  MGB_TAIL_PLAIN = 0,
  MGB_TAIL_IMPORTANCE = 1,
  MGB_TAIL_EXHAUSTIVE = 2
} mgb_tail_method;

typedef struct mgb_tail_estimate {
  double x;
  double p_hat;
  double ci_lo;
  double ci_hi;
  mgb_tail_method method;
  double effective_samples;
  uint64_t seed;
  uint64_t paths;
  uint64_t hits;
  double tilt;
  double std_error;
} mgb_tail_estimate;

/* One pass over the paths for all nx thresholds. */
MGB_API mgb_status mgb_estimate_tail_plain(const mgb_model* m, const mgb_sim_config* cfg, const double* xs,
                                           size_t nx, mgb_tail_estimate* out);
/* tilt = NaN selects lambda_bar(x). */
MGB_API mgb_status mgb_estimate_tail_is(const mgb_model* m, const mgb_sim_config* cfg, double x, double tilt,
                                        mgb_tail_estimate* out);
MGB_API mgb_status mgb_exact_tail(const mgb_model* m, double x, double* out);
MGB_API mgb_status mgb_exact_tail_is(const mgb_model* m, double x, double tilt, double* out);

typedef struct mgb_be_distance {
  double d_hat;
  double argmax_x;
  double uniform_error_band;
  uint64_t paths;
  int exact;
} mgb_be_distance;

/* cdf_out (optional) receives P(S_n <= x) for each grid point. */
MGB_API mgb_status mgb_estimate_be_distance(const mgb_model* m, const mgb_sim_config* cfg, const double* grid,
                                            size_t ng, double* cdf_out, mgb_be_distance* out);

typedef struct mgb_calibration {
  double c_hat;
  double binding_x;
  double qc_l1;
  uint64_t paths;
  int exact;
} mgb_calibration;

/* envelope: "thm21", "thm22", "cor21", "brmti" or "thm33". Optional per-point
 * outputs (length ng): empirical upper value, envelope factor, required C. */
MGB_API mgb_status mgb_calibrate(const mgb_model* m, const mgb_sim_config* cfg, const char* envelope,
                                 const double* grid, size_t ng, mgb_calibration* out, double* empirical,
                                 double* unit, double* c_required);

typedef struct mgb_clt_report {
  double x;
  double lambda_bar;
  double xhat;
  int degenerate;
  double sup_u_distance;
  double sup_y_distance;
  double uniform_error_band;
  uint64_t paths;
  int exact;
} mgb_clt_report;

MGB_API mgb_status mgb_conjugate_clt_check(const mgb_model* m, const mgb_sim_config* cfg, double x,
                                           const double* u_grid, size_t nu, mgb_clt_report* out);

typedef struct mgb_z_report {
  double lambda;
  double mean;
  double std_error;
  double z_score;
  uint64_t paths;
  int exact;
} mgb_z_report;

MGB_API mgb_status mgb_z_martingale_check(const mgb_model* m, const mgb_sim_config* cfg, double lambda,
                                          mgb_z_report* out);
MGB_API mgb_status mgb_qc_deviation_l1(const mgb_model* m, const mgb_sim_config* cfg, double* out);

/* ---- Assertion suite --------------------------------------------------- */

typedef struct mgb_verify_options {
  const double* tilt_fractions; /* lambda = fraction / eps; NULL = {0.1, 0.5, 0.9} */
  size_t n_tilt_fractions;
  const double* domination_grid; /* NULL = {0.5, 1, ..., 4} */
  size_t n_domination_grid;
  uint64_t path_check_paths;    /* 0 = cfg->paths */
  int check_domination;
  int check_z_mean;
} mgb_verify_options;

MGB_API mgb_verify_options mgb_verify_options_default(void);

typedef struct mgb_verify_report mgb_verify_report;

typedef struct mgb_verify_summary {
  int ok;
  int a1_pass;
  double a1_binding_epsilon;
  double a2_delta_sq;
  uint64_t paths_checked;
  uint64_t path_violation_count;
  double min_drift_upper_slack;
  double min_psi_upper_slack;
  double min_half_cosh_slack;
  size_t n_domination;
  size_t n_z_checks;
  size_t n_violations;
} mgb_verify_summary;

typedef struct mgb_violation {
  char check[48];
  uint64_t seed;
  uint64_t path_index;
  double lambda;
  double lhs;
  double rhs;
  char detail[96];
} mgb_violation;

MGB_API mgb_status mgb_run_verification(const mgb_model* m, const mgb_sim_config* cfg,
                                        const mgb_verify_options* opts, mgb_verify_report** out);
MGB_API mgb_status mgb_verify_get_summary(const mgb_verify_report* r, mgb_verify_summary* out);
/* bound receives exp(-xhat^2/2) at the estimate's x. */
MGB_API mgb_status mgb_verify_get_domination(const mgb_verify_report* r, size_t i, mgb_tail_estimate* out,
                                             double* bound);
MGB_API mgb_status mgb_verify_get_z_check(const mgb_verify_report* r, size_t i, mgb_z_report* out);
MGB_API mgb_status mgb_verify_get_violation(const mgb_verify_report* r, size_t i, mgb_violation* out);
MGB_API void mgb_verify_report_free(mgb_verify_report* r);

/* ---- Applications ------------------------------------------------------ */

typedef struct mgb_dataset mgb_dataset;

MGB_API mgb_status mgb_dataset_create(const double* phi, const double* x, size_t n, double sigma,
                                      mgb_dataset** out);
MGB_API mgb_status mgb_dataset_from_csv(const char* path, double sigma, mgb_dataset** out);
/* Dataset generated from a regression model (see mgb_model_regression). */
MGB_API mgb_status mgb_dataset_simulate(const mgb_model* regression_model, uint64_t seed, uint64_t index,
                                        mgb_dataset** out);
MGB_API mgb_status mgb_dataset_size(const mgb_dataset* d, size_t* out);
MGB_API mgb_status mgb_dataset_columns(const mgb_dataset* d, const double** phi, const double** x, double* sigma);
MGB_API void mgb_dataset_free(mgb_dataset* d);

MGB_API mgb_status mgb_least_squares(const mgb_dataset* d, double* out);

typedef struct mgb_reduction {
  double lhs;
  double rhs;
  double residual;
  double relative;
} mgb_reduction;

MGB_API mgb_status mgb_regression_reduction_check(const mgb_dataset* d, double theta, mgb_reduction* out);

typedef struct mgb_regression_eps {
  double eps1;
  double eps2;
  double eps;
} mgb_regression_eps;

MGB_API mgb_status mgb_regression_epsilons(const mgb_dataset* d, mgb_noise noise, mgb_regression_eps* out);
MGB_API mgb_status mgb_regression_epsilons_model(const mgb_model* regression_model, mgb_regression_eps* out);

typedef enum mgb_ci_inversion { MGB_CI_RATIO_BAND = 0, MGB_CI_ENVELOPE = 1 } mgb_ci_inversion;

typedef struct mgb_interval {
  double theta_hat;
  double lo;
  double hi;
  double x_star;
  double half_width;
  int valid;
} mgb_interval;

MGB_API mgb_status mgb_regression_critical_value(double eps, double level, double c, mgb_ci_inversion how,
                                                 double* x_star, int* valid);
MGB_API mgb_status mgb_regression_ci(const mgb_dataset* d, double eps, double level, double c,
                                     mgb_ci_inversion how, mgb_interval* out);

typedef struct mgb_coverage {
  double level;
  uint64_t replications;
  uint64_t covered;
  double coverage;
  double std_error;
  double max_eps;
  double mean_x_star;
  uint64_t invalid;
} mgb_coverage;

MGB_API mgb_status mgb_regression_coverage(const mgb_model* regression_model, double level, double c,
                                           uint64_t replications, uint64_t seed, unsigned workers,
                                           uint64_t chunk_size, mgb_ci_inversion how, mgb_coverage* out);

MGB_API mgb_status mgb_self_norm_statistic(const double* sample, size_t n, double* out);
MGB_API mgb_status mgb_self_norm_envelope(double x, double eps, double c, double* envelope, double* band_lo,
                                          double* band_hi, int* band_valid);

#ifdef __cplusplus
}
#endif

#endif /* MGBOUND_H */

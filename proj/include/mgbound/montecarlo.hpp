// SPDX-License-Identifier: Apache-2.0
//
// Tail probabilities, Berry-Esseen distances and conjugate-measure checks by
// simulation or, for small models, exhaustive enumeration.
//
// Reproducibility contract: paths are split into chunks of chunk_size
// consecutive path indices; each chunk is simulated independently from the
// counter-based generator and chunk summaries are reduced in chunk-index
// order. Results therefore depend on (seed, chunk_size) but never on the
// number of worker threads.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mgbound/bounds.hpp"
#include "mgbound/martingales.hpp"

namespace mgbound {

enum class Enumeration {
  automatic,  ///< enumerate when the model's tree has at most 2^20 leaves
  never,
  always,     ///< enumerate or throw UnsupportedModel
};

struct SimulationConfig {
  explicit SimulationConfig(MartingaleModel m) : model(std::move(m)) {}

  MartingaleModel model;
  std::uint64_t paths = 100000;
  std::uint64_t seed = 0;
  std::uint64_t chunk_size = 4096;
  double confidence_level = 0.99;
  unsigned workers = 1;  ///< 0 = one per hardware thread
  Enumeration enumeration = Enumeration::automatic;

  /// Throws ConfigError.
  void validate() const;
};

/// Whether cfg resolves to exhaustive enumeration.
bool uses_enumeration(const SimulationConfig& cfg);

enum class TailMethod { plain_clopper_pearson, importance_sampled_delta, exhaustive };
std::string_view to_string(TailMethod m) noexcept;

struct TailEstimate {
  double x = 0.0;
  double p_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  TailMethod method = TailMethod::plain_clopper_pearson;
  double effective_samples = 0.0;  ///< paths (plain), Kish size of the hit weights (IS), leaves (exhaustive)
  std::uint64_t seed = 0;
  std::uint64_t paths = 0;
  std::uint64_t hits = 0;
  double tilt = 0.0;
  double std_error = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Exact binomial interval for k successes out of n at the given confidence.
Interval clopper_pearson(std::uint64_t k, std::uint64_t n, double confidence_level);

/// Half-width sqrt(log(2/alpha) / (2 paths)) of the DKW uniform band for an ECDF.
double dkw_band(std::uint64_t paths, double confidence_level);

/// P(S_n > x) with a Clopper-Pearson interval.
TailEstimate estimate_tail_plain(const SimulationConfig& cfg, double x);
/// Same, for several x from one set of paths.
std::vector<TailEstimate> estimate_tail_plain_grid(const SimulationConfig& cfg, const std::vector<double>& xs);

/// P(S_n > x) = E_l[Z_n(l)^{-1} 1{S_n > x}] sampled under the conjugate
/// measure. The tilt defaults to lambda_bar(x) for the model's (eps, delta).
TailEstimate estimate_tail_is(const SimulationConfig& cfg, double x, std::optional<double> tilt = std::nullopt);

struct BEDistanceEstimate {
  double d_hat = 0.0;
  double argmax_x = 0.0;
  std::vector<double> grid;
  std::vector<double> cdf;  ///< empirical (or exact) P(S_n <= x) on the grid
  double uniform_error_band = 0.0;
  std::uint64_t paths = 0;
  bool exact = false;
};

/// sup over the grid of |P(S_n <= x) - Phi(x)|. Grid must be sorted and nonempty.
BEDistanceEstimate estimate_be_distance(const SimulationConfig& cfg, const std::vector<double>& grid);

/// Same statistic for an arbitrary sample (ECDF of `values`).
BEDistanceEstimate be_distance_of_sample(std::vector<double> values, const std::vector<double>& grid,
                                         double confidence_level);

/// Exact P(S_n <= x) on the grid by enumeration.
std::vector<double> exact_cdf(const MartingaleModel& model, const std::vector<double>& grid);
/// Exact P(S_n > x) by enumeration.
double exact_tail(const MartingaleModel& model, double x);
/// Exact E_l[Z^{-1} 1{S_n > x}], summed over the tilted law of every leaf.
double exact_tail_is(const MartingaleModel& model, double x, double tilt);

enum class CalibrationEnvelope {
  thm21,  ///< nonuniform BE envelope C (1+x^2)(eps|log eps| + delta/(1+|x|)) e^{-xhat^2/2}
  thm22,  ///< relative tail error against (1 - Phi(xhat))
  cor21,  ///< (A1)-only envelope with E|<S>_n - 1|
  brmti,  ///< uniform bound C (eps|log eps| + delta)
  thm33,  ///< self-normalized envelope C eps|log eps| (1+x^2) e^{-x^2/2}
};
std::string_view to_string(CalibrationEnvelope e) noexcept;
std::optional<CalibrationEnvelope> parse_calibration_envelope(std::string_view s) noexcept;

/// Interval estimates of P(S_n <= x) and P(S_n > x) at one grid point.
struct EmpiricalPoint {
  double x = 0.0;
  double cdf_lo = 0.0, cdf_hi = 0.0;  ///< P(S_n <= x)
  double sf_lo = 0.0, sf_hi = 0.0;    ///< P(S_n > x)
};

struct CalibrationInputs {
  BernsteinParams params = BernsteinParams::permissive(0.0, 0.0);
  double qc_l1 = 0.0;  ///< E|<S>_n - 1|, needed for cor21
  std::vector<EmpiricalPoint> points;
};

struct CalibrationPoint {
  double x = 0.0;
  double empirical = 0.0;  ///< upper confidence end of the compared quantity
  double unit = 0.0;       ///< envelope factor multiplying C
  double c_required = 0.0;
};

struct CalibrationResult {
  CalibrationEnvelope envelope = CalibrationEnvelope::thm21;
  double c_hat = 0.0;
  double binding_x = 0.0;
  std::vector<CalibrationPoint> points;
  double qc_l1 = 0.0;
  std::uint64_t paths = 0;
  bool exact = false;
};

/// Smallest C >= 0 such that the envelope with constant C dominates the
/// empirical quantity at every grid point.
CalibrationResult calibrate_from_empirical(CalibrationEnvelope envelope, const CalibrationInputs& in);

/// Simulates (or enumerates) the model and calibrates.
CalibrationResult calibrate_constant(const SimulationConfig& cfg, CalibrationEnvelope envelope,
                                     const std::vector<double>& x_grid);

struct ConjugateCltReport {
  double x = 0.0;
  double lambda_bar = 0.0;
  double xhat = 0.0;
  bool degenerate = false;     ///< lambda_bar = 0, so U_n vanishes identically
  double sup_u_distance = 0.0; ///< sup_u |P_l(U_n <= xhat u) - Phi(u)|
  double sup_y_distance = 0.0; ///< sup_u |P_l(Y_n <= u) - Phi(u)|
  double uniform_error_band = 0.0;
  std::uint64_t paths = 0;
  bool exact = false;
};

/// Normal approximation of U_n(l) = l (Y_n(l) + B_n(l) - x) and Y_n(l) under
/// the conjugate measure at l = lambda_bar(x).
ConjugateCltReport conjugate_clt_check(const SimulationConfig& cfg, double x, const std::vector<double>& u_grid);

struct ZMartingaleReport {
  double lambda = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  double z_score = 0.0;  ///< (mean - 1) / std_error, 0 when exact
  std::uint64_t paths = 0;
  bool exact = false;
};

/// Mean of Z_n(lambda) under P.
ZMartingaleReport z_martingale_check(const SimulationConfig& cfg, double lambda);

/// E|<S>_n - 1| (exact for normalized models and by enumeration, else simulated).
double qc_deviation_l1(const SimulationConfig& cfg);

struct VerificationOptions {
  std::vector<double> tilt_fractions{0.1, 0.5, 0.9};  ///< lambda = fraction / eps
  std::vector<double> domination_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
  std::uint64_t path_check_paths = 0;  ///< 0 = cfg.paths
  double identity_tol = 1e-12;
  int a1_max_order = 12;
  bool check_domination = true;
  bool check_z_mean = true;
};

struct Violation {
  std::string check;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  double lambda = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::string model_id;
  bool a1_pass = true;
  double a1_binding_epsilon = 0.0;
  double a2_delta_sq = 0.0;
  std::uint64_t paths_checked = 0;
  std::uint64_t path_violation_count = 0;
  double min_drift_upper_slack = 0.0;
  double min_psi_upper_slack = 0.0;
  double min_half_cosh_slack = 0.0;
  std::vector<TailEstimate> domination;  ///< estimates compared with exp(-xhat^2/2)
  std::vector<ZMartingaleReport> z_checks;
  std::vector<Violation> violations;     ///< at most the first 100, in path order

  bool ok() const noexcept { return violations.empty() && path_violation_count == 0 && a1_pass; }
};

/// The full hard-assertion suite: (A1)/(A2), per-path identities and lemma
/// bounds at several tilts, bound domination and the Z-mean check.
VerificationReport run_verification(const SimulationConfig& cfg, const VerificationOptions& opts = {});

}  // namespace mgbound

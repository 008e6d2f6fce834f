// SPDX-License-Identifier: Apache-2.0
//
// Statistical applications: deviations of the least-squares estimator in
// X_k = theta phi_k + e_k, self-normalized sums, and the piecewise comparison
// bound for independent self-normalized sums.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mgbound/bounds.hpp"
#include "mgbound/martingales.hpp"

namespace mgbound {

struct RegressionData {
  std::vector<double> covariates;  ///< phi_1..phi_n
  std::vector<double> responses;   ///< X_1..X_n
  double sigma = 1.0;              ///< known noise scale

  /// Throws ConfigError on mismatched/empty/non-finite input or zero covariate energy.
  void validate() const;
};

/// sum phi_k X_k / sum phi_k^2, with compensated dot products.
double least_squares(const RegressionData& data);

struct ReductionCheck {
  double lhs = 0.0;       ///< (theta_hat - theta) sqrt(sum phi^2) / sigma
  double rhs = 0.0;       ///< sum phi_i e_i / (sigma sqrt(sum phi^2)), e_i = X_i - theta phi_i
  double residual = 0.0;  ///< |lhs - rhs|
  double relative = 0.0;  ///< residual / max(|lhs|, |rhs|), 0 when both vanish
};

/// Both sides are evaluated in double-double arithmetic and rounded, so the
/// residual reflects only the final roundings (about 1e-16 relative) unless
/// the data overflow double-double range.
ReductionCheck regression_reduction_check(const RegressionData& data, double theta);

struct RegressionEpsilons {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps = 0.0;  ///< eps1 eps2 / sigma
};

/// eps1 = max |phi_k| / sqrt(sum phi^2) from the observed covariates.
RegressionEpsilons regression_epsilons(const RegressionData& data, NoiseFamily noise);
/// eps1 = b / (a sqrt(n)) from the covariate range.
RegressionEpsilons regression_epsilons(const RegressionModel& model);

struct RegressionEnvelope {
  TailEnvelope nonuniform;  ///< C (1+x^2) eps|log eps| exp(-breve_x^2/2)
  double uniform = 0.0;     ///< C eps|log eps|
  RatioBand band;           ///< 1 -/+ C (1+x^3) eps|log eps|, valid for x <= eps^{-1/3}
  bool valid = true;        ///< eps in (0, 1/2]
};

RegressionEnvelope regression_envelope(double x, double eps, const BoundConstant& c = {});

enum class CiInversion { ratio_band, envelope };

struct CriticalValue {
  double x_star = 0.0;
  bool valid = true;
  std::string warning;
};

/// Smallest x >= 0 with 2(1 - Phi(x))(1 + C(1+x^3) eps|log eps|) <= 1 - level
/// (ratio band), or 2(1 - Phi(x)) + 2 C(1+x^2) eps|log eps| exp(-breve_x^2/2)
/// <= 1 - level (envelope). Grid scan followed by bisection.
CriticalValue regression_critical_value(double eps, double level, const BoundConstant& c = {},
                                        CiInversion how = CiInversion::ratio_band);

struct RegressionInterval {
  double theta_hat = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double x_star = 0.0;
  double half_width = 0.0;
  bool valid = true;
  std::string warning;
};

/// theta_hat +- x* sigma / sqrt(sum phi^2).
RegressionInterval regression_ci(const RegressionData& data, double eps, double level, const BoundConstant& c = {},
                                 CiInversion how = CiInversion::ratio_band);

struct RegressionReport {
  std::size_t n = 0;
  double theta_hat = 0.0;
  std::optional<double> theta;
  std::optional<double> standardized_error;
  RegressionEpsilons eps;
  bool valid = true;
  std::vector<std::pair<double, double>> envelope_at;  ///< (x, nonuniform envelope)
  std::vector<std::pair<double, RatioBand>> band_at;
  RegressionInterval interval;
};

RegressionReport regression_report(const RegressionData& data, NoiseFamily noise, std::optional<double> theta,
                                   const std::vector<double>& x_grid, double level, const BoundConstant& c = {});

/// Dataset generated from the model's path (seed, index): covariates are the
/// path environment and e_k the model's noise draws.
RegressionData simulate_regression(const RegressionModel& model, std::uint64_t seed, std::uint64_t index);

struct CoverageResult {
  double level = 0.0;
  std::uint64_t replications = 0;
  std::uint64_t covered = 0;
  double coverage = 0.0;
  double std_error = 0.0;   ///< sqrt(level (1 - level) / replications)
  double max_eps = 0.0;     ///< largest data-based eps seen
  double mean_x_star = 0.0;
  std::uint64_t invalid = 0;
};

/// Replicates simulate_regression + regression_ci (data-based eps) and counts
/// intervals containing the true theta. Deterministic in (seed, chunk_size).
CoverageResult regression_coverage(const RegressionModel& model, double level, const BoundConstant& c,
                                   std::uint64_t replications, std::uint64_t seed, unsigned workers = 1,
                                   std::uint64_t chunk_size = 256, CiInversion how = CiInversion::ratio_band);

/// Reads a CSV with header "phi,x" (LF or CRLF line endings).
RegressionData parse_regression_csv(std::string_view text, double sigma);
RegressionData read_regression_csv(std::istream& in, double sigma);

/// sum xi / sqrt(sum xi^2), evaluated in double-double and rounded once, so
/// scaling the sample by any c > 0 for which c xi is exact leaves the result
/// bit-identical.
double self_norm_statistic(const std::vector<double>& sample);

struct SelfNormEnvelope {
  TailEnvelope envelope;  ///< C eps|log eps| (1+x^2) exp(-x^2/2)
  RatioBand band;         ///< 1 -/+ C (1+x^3) eps|log eps|
  bool valid = true;
};

SelfNormEnvelope self_norm_envelope(double x, double eps, const BoundConstant& c = {});

struct SelfNormReport {
  std::size_t n = 0;
  double statistic = 0.0;
  double eps = 0.0;
  bool eps_declared = false;  ///< b/(a sqrt n) supplied, else max|xi|/sqrt([S]_n)
  bool valid = true;
  std::vector<std::pair<double, double>> envelope_at;
  std::vector<std::pair<double, RatioBand>> band_at;
};

SelfNormReport self_norm_report(const std::vector<double>& sample, std::optional<double> declared_eps,
                                const std::vector<double>& x_grid, const BoundConstant& c = {});

/// Piecewise bound: C (L3n (1+x^2) + tail_prob_sum) e^{-x^2/2} when
/// |x| <= (5 L3n^{1/3})^{-1}, else (1 + 1/(sqrt(2 pi)|x|)) e^{-x^2/2}.
double wang_jing_bound(double x, double L3n, double tail_prob_sum, const BoundConstant& c = {});

struct WangJingInputs {
  double L3n = 0.0;            ///< B_n^{-3} sum E|xi_i|^3
  double tail_prob_sum = 0.0;  ///< sum P(|xi_i| >= B_n / (6|x|))
};

/// Exact inputs for independent symmetric steps with |xi_i| ~ U[a, b].
WangJingInputs wang_jing_inputs(const SelfNormalized& model, double x);

}  // namespace mgbound

// SPDX-License-Identifier: Apache-2.0
//
// Martingale families with closed-form conditional laws.
//
// Every built-in family is, conditionally on the past (and on a per-path
// "environment" drawn up front: regression covariates or self-normalized
// magnitudes), a symmetric three-point step
//     xi_i in {-h_i, 0, +h_i},  P(+h_i) = P(-h_i) = p_i / 2,
// with p_i = 1 for Rademacher-type steps. This is what makes the exact
// (A1) moment checks, the conditional MGF cosh-type formulas and the
// conjugate-measure sampler available in closed form for all four families.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mgbound/bounds.hpp"

namespace mgbound {

/// xi_i = w_i r_i with independent Rademacher r_i; sum w_i^2 = 1, max w_i <= 1/2.
struct ScaledRademacher {
  std::vector<double> weights;
};

/// xi_i = +-sqrt(v_i), v_i = (1 + delta^2 sign(S_{i-1}))/n with sign(0) = +1.
struct VarianceSwitch {
  std::size_t n = 0;
  double delta = 0.0;
};

enum class NoiseFamily {
  rademacher_scaled,    ///< +-sigma
  truncated_symmetric,  ///< {-sqrt2 sigma, 0, +sqrt2 sigma} with masses 1/4, 1/2, 1/4
};

/// X_k = theta phi_k + e_k with phi_k ~ U[a, b] independent of the noise.
/// Differences are the normalized xi_k = phi_k e_k / (sigma sqrt(sum phi^2)).
struct RegressionModel {
  double theta = 0.0;
  std::size_t n = 0;
  double covariate_low = 1.0;
  double covariate_high = 1.0;
  double sigma = 1.0;
  NoiseFamily noise = NoiseFamily::rademacher_scaled;
};

/// Independent symmetric xi_i with |xi_i| ~ U[a, b]. Differences are the
/// self-normalized eta_i = xi_i / sqrt([S]_n), so S_n is the self-normalized sum.
struct SelfNormalized {
  std::size_t n = 0;
  double magnitude_low = 1.0;
  double magnitude_high = 1.0;
};

enum class ModelKind { scaled_rademacher, variance_switch, regression, self_normalized };

class MartingaleModel {
 public:
  using Family = std::variant<ScaledRademacher, VarianceSwitch, RegressionModel, SelfNormalized>;

  /// Validates the family invariants; throws ConfigError.
  explicit MartingaleModel(Family family);

  /// ScaledRademacher with n equal weights 1/sqrt(n).
  static MartingaleModel equal_weights(std::size_t n);

  const Family& family() const noexcept { return family_; }
  ModelKind kind() const noexcept { return static_cast<ModelKind>(family_.index()); }
  std::size_t steps() const noexcept;

  /// Declared (A1) constant.
  double epsilon() const noexcept { return epsilon_; }
  /// Declared (A2) constant.
  double delta() const noexcept;
  BernsteinParams params() const { return BernsteinParams::checked(epsilon_, delta()); }

  /// <S>_n = 1 on every path.
  bool normalized() const noexcept { return kind() != ModelKind::variance_switch; }
  /// No per-path random environment (so the law can be enumerated).
  bool deterministic_environment() const noexcept;
  /// Number of outcomes per step (2 or 3) when enumerating.
  std::size_t branching() const noexcept;

  /// Stable short identifier, e.g. "scaled_rademacher[n=4]".
  std::string id() const;

 private:
  Family family_;
  double epsilon_ = 0.0;
};

std::string_view to_string(NoiseFamily f) noexcept;

/// Ratio noise_support / sigma of the noise family (1 or sqrt 2).
double noise_support_ratio(NoiseFamily f) noexcept;
/// Probability that the noise is nonzero (1 or 1/2).
double noise_nonzero_prob(NoiseFamily f) noexcept;

/// Smallest eps2 with |E e^l| <= l!/2 eps2^{l-2} sigma^2 for 3 <= l <= max_order,
/// computed from the exact moments of the noise law.
double noise_bernstein_constant(NoiseFamily f, double sigma, int max_order = 12);

/// JSON document mirroring the tagged-union fields, e.g.
/// {"family":"variance_switch","n":100,"delta":0.3}.
std::string model_to_json(const MartingaleModel& model);
MartingaleModel model_from_json(std::string_view json);

/// Conditional law of one step: +-scale with probability nonzero_prob/2 each.
struct StepLaw {
  double scale = 0.0;
  double nonzero_prob = 1.0;

  double variance() const noexcept { return nonzero_prob * scale * scale; }
  friend bool operator==(const StepLaw&, const StepLaw&) = default;
};

struct PathSample {
  std::vector<double> differences;    ///< xi_1..xi_n
  std::vector<double> partial_sums;   ///< S_0..S_n
  std::vector<double> qc;             ///< <S>_0..<S>_n
  double sq_bracket = 0.0;            ///< [S]_n = sum xi_i^2
  std::vector<StepLaw> laws;          ///< conditional law of step i given F_{i-1}
  std::vector<std::int8_t> outcomes;  ///< sign of each step: -1, 0, +1
  std::vector<double> environment;    ///< covariates or magnitudes; empty otherwise
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  double tilt = 0.0;                  ///< lambda of the sampling measure (0 = P)
  std::string model_id;

  std::size_t steps() const noexcept { return differences.size(); }
  double terminal() const noexcept { return partial_sums.back(); }
};

/// Deterministic path for (model, seed, path_index) under P.
PathSample simulate_path(const MartingaleModel& model, std::uint64_t seed, std::uint64_t path_index = 0);

/// Path under the conjugate measure P_lambda: step i takes +h with probability
/// p e^{lh}/(2M), -h with p e^{-lh}/(2M), 0 with (1-p)/M, M = 1 - p + p cosh(lh).
/// lambda = 0 reproduces simulate_path bit for bit.
PathSample simulate_tilted_path(const MartingaleModel& model, double lambda, std::uint64_t seed,
                                std::uint64_t path_index = 0);

/// Per-step summaries of the conjugate measure for a step law.
struct TiltedMoments {
  double log_mgf = 0.0;  ///< log E[e^{l xi} | F]
  double drift = 0.0;    ///< E_l[xi | F]
  double prob_nonzero = 1.0;
  double prob_up_given_nonzero = 0.5;
};

TiltedMoments tilted_moments(const StepLaw& law, double lambda);

struct ConjugatePathStats {
  double lambda = 0.0;
  double z = 1.0;       ///< Z_n(lambda)
  double log_z = 0.0;
  double psi = 0.0;     ///< Psi_n(lambda) = sum log E[e^{l xi_i} | F_{i-1}]
  double b_drift = 0.0; ///< B_n(lambda) = sum b_i
  double y = 0.0;       ///< Y_n(lambda) = sum (xi_i - b_i)
  std::vector<double> per_step_b;
  std::vector<double> per_step_log_mgf;
};

/// Requires 0 <= lambda < 1/eps for the model's declared eps.
ConjugatePathStats conjugate_stats(const PathSample& path, const MartingaleModel& model, double lambda);

struct A1Check {
  std::size_t step = 0;  ///< 1-based step, or 0 for a worst case over a random environment
  int order = 2;
  double lhs = 0.0;      ///< |E[xi^k | F]|
  double rhs = 0.0;      ///< k!/2 eps^{k-2} E[xi^2 | F]
};

struct A1Report {
  bool pass = true;
  double declared_epsilon = 0.0;
  double binding_epsilon = 0.0;  ///< smallest eps making every checked inequality hold
  double worst_margin = 0.0;     ///< min over checks of (rhs - lhs) / rhs (1 = slack, 0 = tight)
  std::vector<A1Check> checks;
};

/// Exact check of (A1) for orders 2..max_order at the model's declared eps.
/// A check passes when lhs <= rhs (1 + tol).
A1Report verify_A1(const MartingaleModel& model, int max_order = 12, double tol = 1e-12);

struct A2Report {
  double delta_sq_bound = 0.0;
  bool exact = true;
};

A2Report verify_A2(const MartingaleModel& model);

struct LemmaViolation {
  std::string check;
  std::size_t step = 0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct LemmaReport {
  bool ok = true;
  double drift_upper_slack = 0.0;   ///< rhs - B_n for the upper drift bound
  double psi_upper_slack = 0.0;     ///< rhs - Psi_n for the log-MGF bound
  double half_cosh_slack = 0.0;     ///< min_k (l^2/2 - Psi_k), normalized models only
  double drift_lower_slack_c1 = 0.0;///< B_n - (l - l delta^2 - l^2 eps), reported with C = 1
  std::vector<LemmaViolation> violations;
};

/// Hard-asserts the explicit bounds
///   B_n(l) <= (l - l^2 eps/2)(1 + delta^2)/(1 - l eps)^2,
///   Psi_n(l) <= l^2 (1 + delta^2) / (2 (1 - l eps)),
///   Psi_k(l) <= l^2/2 for every k (models with <S>_n = 1),
/// and reports the slack of the lower drift bound with C = 1.
LemmaReport lemma_checks(const PathSample& path, const ConjugatePathStats& stats,
                         const BernsteinParams& params, bool normalized, double rel_tol = 1e-12);

/// Pads a path into one with <S'>_N = 1: stops at tau = max{k : <S>_k <= 1},
/// appends r = floor((1 - <S>_tau)/eps^2) Rademacher steps of size eps, one
/// Rademacher step of size sqrt(1 - <S>_tau - r eps^2), then zeros up to
/// N = n + floor(1/eps^2) + 1.
PathSample bolthausen_augment(const PathSample& path, double epsilon, std::uint64_t seed);

/// CSV with header "step,xi,s,qc"; row 0 is the initial state.
std::string path_to_csv(const PathSample& path);

}  // namespace mgbound

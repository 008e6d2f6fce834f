// SPDX-License-Identifier: Apache-2.0
//
// Closed-form tail bounds and normal-approximation envelopes for martingales
// under the conditional Bernstein condition
//   (A1) |E[xi_i^k | F_{i-1}]| <= k!/2 eps^{k-2} E[xi_i^2 | F_{i-1}],  k >= 2,
//   (A2) |<S>_n - 1| <= delta^2.
// The absolute constants in front of these envelopes are not known in closed
// form; every evaluator takes a BoundConstant (default C = 1) so that callers
// can plug in empirically calibrated values.
//
// Envelopes are assembled in the log domain and exponentiated last, so
// TailEnvelope::log_value stays meaningful after value underflows to 0.
#pragma once

#include <optional>
#include <string_view>

namespace mgbound {

/// The pair (epsilon, delta) from conditions (A1)/(A2).
class BernsteinParams {
 public:
  /// epsilon in (0, 1/2], delta in [0, 1]. Throws DomainError otherwise.
  static BernsteinParams checked(double epsilon, double delta);
  /// Formula-evaluation mode: additionally admits epsilon = 0 (the Gaussian
  /// limit). Never accepted by condition checkers.
  static BernsteinParams permissive(double epsilon, double delta);

  double epsilon() const noexcept { return epsilon_; }
  double delta() const noexcept { return delta_; }
  bool is_permissive() const noexcept { return permissive_; }
  /// 1 + delta^2, the almost-sure upper bound on <S>_n.
  double variance_cap() const noexcept { return 1.0 + delta_ * delta_; }

 private:
  BernsteinParams(double e, double d, bool p) : epsilon_(e), delta_(d), permissive_(p) {}
  double epsilon_;
  double delta_;
  bool permissive_;
};

enum class ConstantKind { absolute_C, C_delta, C_p };

struct BoundConstant {
  double c = 1.0;
  ConstantKind kind = ConstantKind::absolute_C;
  double p = 1.0;  ///< Only meaningful for C_p.

  static BoundConstant absolute(double c = 1.0);
  static BoundConstant c_delta(double c = 1.0);
  static BoundConstant c_p(double p, double c = 1.0);
  /// Throws DomainError if c < 0 or (kind == C_p and p < 1).
  void validate() const;
};

enum class EnvelopeSource {
  de_la_pena_bennett,             // corrected denominator
  de_la_pena_bennett_as_printed,  // printed denominator, kept for comparison
  de_la_pena_bernstein,
  tail_bound_sq,                  // exp(-xhat^2/2)
  strengthened_tail,              // (1 - Phi(xhat)) [1 + C(1+xhat)(...)]
  strengthened_tail_f_form,       // F(x) exp(-xhat^2/2)
  nonuniform_be,
  corollary_nonuniform,
  corollary_uniform,
  mourrat_uniform,
  uniform_be,
  regression_nonuniform,
  self_normalized,
  wang_jing,
};

std::string_view to_string(EnvelopeSource s) noexcept;

struct TailEnvelope {
  double x = 0.0;
  double value = 0.0;
  double log_value = 0.0;
  EnvelopeSource source = EnvelopeSource::tail_bound_sq;
  BoundConstant constant_used{};
  std::optional<double> xhat;
  std::optional<double> lambda_bar;
};

/// eps * |log eps| with the continuous extension 0 at eps = 0.
double eps_log_eps(double epsilon);

/// Deformed argument 2|x|/sqrt(1+d^2) / (1 + sqrt(1 + 2|x| eps/(1+d^2))).
double xhat(double x, const BernsteinParams& params);

/// 2|x| / (1 + sqrt(1 + 2|x| eps)); equals xhat at delta = 0.
double breve_x(double x, double epsilon);

/// Optimal conjugate tilt: the root in [0, 1/eps) of
///   (l - l^2 eps/2) / (1 - l eps)^2 = x / (1 + delta^2),
/// in closed form 2x/(1+d^2) / (1 + u + sqrt(1+u)), u = 2x eps/(1+d^2).
double lambda_bar(double x, const BernsteinParams& params);

enum class BennettForm { corrected, as_printed };

/// exp{-x^2 / (v^2 + v^2 sqrt(1 + 2x eps/v^2) + x eps)} (corrected), or the
/// printed denominator v^2 + sqrt(1 + 2x eps/v^2) + x eps.
TailEnvelope de_la_pena_bennett(double x, double v, double epsilon,
                                BennettForm form = BennettForm::corrected);

/// exp{-x^2 / (2 (v^2 + x eps))}.
TailEnvelope de_la_pena_bernstein(double x, double v, double epsilon);

/// exp(-xhat^2 / 2): constant-free tail bound on P(S_n > x) under (A1)+(A2).
TailEnvelope tail_bound_sq(double x, const BernsteinParams& params);

/// (1 - Phi(xhat)) [1 + C (1 + xhat)(lb^2 eps + lb delta^2 + eps|log eps| + delta)], x >= 0.
TailEnvelope strengthened_tail_envelope(double x, const BernsteinParams& params,
                                        const BoundConstant& c = {});

/// F(x) exp(-xhat^2/2), F(x) = C (1/(1+xhat) + lb^2 eps + lb delta^2 + eps|log eps| + delta).
TailEnvelope strengthened_tail_f_form(double x, const BernsteinParams& params,
                                      const BoundConstant& c = {});

/// C (1 + x^2)(eps|log eps| + delta/(1+|x|)) exp(-xhat^2/2), any real x.
TailEnvelope nonuniform_be_envelope(double x, const BernsteinParams& params,
                                    const BoundConstant& c = {});

struct RatioBand {
  double lo = 1.0;
  double hi = 1.0;
  bool valid = true;
};

/// 1 -/+ C (1 + x^3)(eps|log eps| + delta/(1+x)); valid iff
/// x <= min(eps^{-1/3}, delta^{-1}) (delta = 0 gives +inf). lo clamped at 0.
RatioBand cramer_ratio_band(double x, const BernsteinParams& params, const BoundConstant& c = {});

/// C [(1+x^2) eps|log eps| exp(-breve_x^2/2) + (qc_l1 + eps^2)^{1/3} exp(-x^2/6)]
/// where qc_l1 = E|<S>_n - 1|. Only (A1) is assumed.
TailEnvelope corollary_envelope(double x, double epsilon, double qc_l1, const BoundConstant& c = {});

/// C [(qc_l1)^{1/3} + eps^{2/3}].
double corollary_uniform_bound(double epsilon, double qc_l1, const BoundConstant& c = {});

/// C_p [(E|<S>_n - 1|^p)^{1/(2p+1)} + eps^{2p/(2p+1)}]. c must be of kind C_p with c.p == p.
double mourrat_envelope(double p, double qc_lp, double epsilon, const BoundConstant& c);

/// C (eps|log eps| + delta).
double uniform_be_bound(const BernsteinParams& params, const BoundConstant& c = {});

struct MomentSummary {
  double third_moments_sum = 0.0;    ///< sum_i E|xi_i|^{2+dm}
  double truncated_second = 0.0;     ///< sum_i E[xi_i^2 1{|xi_i| > 1+|x|}]
  double truncated_third = 0.0;      ///< sum_i E[|xi_i|^3 1{|xi_i| <= 1+|x|}]
  double qc_deviation_moment = 0.0;  ///< E|<S>_n - 1|^{1+dm/2}
  double L3n = 0.0;
  double Bn2 = 1.0;
  double tail_prob_sum = 0.0;
};

struct ClassicalEnvelopes {
  double bikelis = 0.0;
  double chen_shao = 0.0;
  double haeusler_joos = 0.0;
};

/// Polynomially decaying comparison bounds for independent sums and martingales.
/// delta_m is the moment excess in (0, 1].
ClassicalEnvelopes classical_envelopes(double x, const MomentSummary& moments, double delta_m,
                                       const BoundConstant& c = {});

}  // namespace mgbound

// SPDX-License-Identifier: Apache-2.0
#include "mgbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "mgbound/errors.hpp"
#include "mgbound/gaussian.hpp"

namespace mgbound {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(double v, const char* op, const char* name) {
  if (!std::isfinite(v)) {
    throw DomainError(std::string(op) + ": " + name + " must be finite");
  }
}

void require_nonnegative(double v, const char* op, const char* name) {
  require_finite(v, op, name);
  if (v < 0.0) throw DomainError(std::string(op) + ": " + name + " must be >= 0");
}

void require_epsilon_formula(double eps, const char* op) {
  require_finite(eps, op, "epsilon");
  if (eps < 0.0) throw DomainError(std::string(op) + ": epsilon must be >= 0");
}

// log(a + b) from log a and log b, tolerating -inf on either side.
double log_add(double la, double lb) {
  if (la == -kInf) return lb;
  if (lb == -kInf) return la;
  const double m = std::max(la, lb);
  return m + std::log1p(std::exp(std::min(la, lb) - m));
}

double safe_log(double v) { return v > 0.0 ? std::log(v) : -kInf; }

TailEnvelope make_envelope(double x, double log_value, EnvelopeSource src, const BoundConstant& c) {
  TailEnvelope env;
  env.x = x;
  env.log_value = log_value;
  env.value = std::exp(log_value);
  env.source = src;
  env.constant_used = c;
  return env;
}

}  // namespace

BernsteinParams BernsteinParams::checked(double epsilon, double delta) {
  if (!std::isfinite(epsilon) || !(epsilon > 0.0 && epsilon <= 0.5)) {
    std::ostringstream msg;
    msg << "epsilon = " << epsilon << " violates condition (A1): epsilon must lie in (0, 1/2]";
    throw DomainError(msg.str());
  }
  if (!std::isfinite(delta) || !(delta >= 0.0 && delta <= 1.0)) {
    std::ostringstream msg;
    msg << "delta = " << delta << " violates condition (A2): delta must lie in [0, 1]";
    throw DomainError(msg.str());
  }
  return BernsteinParams(epsilon, delta, false);
}

BernsteinParams BernsteinParams::permissive(double epsilon, double delta) {
  if (epsilon == 0.0) {
    if (!std::isfinite(delta) || !(delta >= 0.0 && delta <= 1.0)) {
      std::ostringstream msg;
      msg << "delta = " << delta << " violates condition (A2): delta must lie in [0, 1]";
      throw DomainError(msg.str());
    }
    return BernsteinParams(0.0, delta, true);
  }
  BernsteinParams p = checked(epsilon, delta);
  p.permissive_ = true;
  return p;
}

BoundConstant BoundConstant::absolute(double c) {
  BoundConstant k{c, ConstantKind::absolute_C, 1.0};
  k.validate();
  return k;
}

BoundConstant BoundConstant::c_delta(double c) {
  BoundConstant k{c, ConstantKind::C_delta, 1.0};
  k.validate();
  return k;
}

BoundConstant BoundConstant::c_p(double p, double c) {
  BoundConstant k{c, ConstantKind::C_p, p};
  k.validate();
  return k;
}

void BoundConstant::validate() const {
  if (!std::isfinite(c) || c < 0.0) throw DomainError("bound constant must be finite and >= 0");
  if (kind == ConstantKind::C_p && !(std::isfinite(p) && p >= 1.0)) {
    throw DomainError("C_p constant requires p >= 1");
  }
}

std::string_view to_string(EnvelopeSource s) noexcept {
  switch (s) {
    case EnvelopeSource::de_la_pena_bennett: return "de_la_pena_bennett";
    case EnvelopeSource::de_la_pena_bennett_as_printed: return "de_la_pena_bennett_as_printed";
    case EnvelopeSource::de_la_pena_bernstein: return "de_la_pena_bernstein";
    case EnvelopeSource::tail_bound_sq: return "tail_bound_sq";
    case EnvelopeSource::strengthened_tail: return "strengthened_tail";
    case EnvelopeSource::strengthened_tail_f_form: return "strengthened_tail_f_form";
    case EnvelopeSource::nonuniform_be: return "nonuniform_be";
    case EnvelopeSource::corollary_nonuniform: return "corollary_nonuniform";
    case EnvelopeSource::corollary_uniform: return "corollary_uniform";
    case EnvelopeSource::mourrat_uniform: return "mourrat_uniform";
    case EnvelopeSource::uniform_be: return "uniform_be";
    case EnvelopeSource::regression_nonuniform: return "regression_nonuniform";
    case EnvelopeSource::self_normalized: return "self_normalized";
    case EnvelopeSource::wang_jing: return "wang_jing";
  }
  return "unknown";
}

double eps_log_eps(double epsilon) {
  require_epsilon_formula(epsilon, "eps_log_eps");
  if (epsilon == 0.0) return 0.0;
  return epsilon * std::abs(std::log(epsilon));
}

double xhat(double x, const BernsteinParams& params) {
  require_finite(x, "xhat", "x");
  const double ax = std::abs(x);
  const double cap = params.variance_cap();
  const double u = 2.0 * ax * params.epsilon() / cap;
  return 2.0 * ax / std::sqrt(cap) / (1.0 + std::sqrt(1.0 + u));
}

double breve_x(double x, double epsilon) {
  require_finite(x, "breve_x", "x");
  require_epsilon_formula(epsilon, "breve_x");
  const double ax = std::abs(x);
  return 2.0 * ax / (1.0 + std::sqrt(1.0 + 2.0 * ax * epsilon));
}

double lambda_bar(double x, const BernsteinParams& params) {
  require_nonnegative(x, "lambda_bar", "x");
  const double cap = params.variance_cap();
  const double u = 2.0 * x * params.epsilon() / cap;
  return 2.0 * x / cap / (1.0 + u + std::sqrt(1.0 + u));
}

TailEnvelope de_la_pena_bennett(double x, double v, double epsilon, BennettForm form) {
  require_nonnegative(x, "de_la_pena_bennett", "x");
  require_finite(v, "de_la_pena_bennett", "v");
  if (!(v > 0.0)) throw DomainError("de_la_pena_bennett: v must be > 0");
  require_epsilon_formula(epsilon, "de_la_pena_bennett");
  const double v2 = v * v;
  const double root = std::sqrt(1.0 + 2.0 * x * epsilon / v2);
  const double denom =
      form == BennettForm::corrected ? v2 + v2 * root + x * epsilon : v2 + root + x * epsilon;
  const auto src = form == BennettForm::corrected ? EnvelopeSource::de_la_pena_bennett
                                                  : EnvelopeSource::de_la_pena_bennett_as_printed;
  return make_envelope(x, -(x * x) / denom, src, BoundConstant{});
}

TailEnvelope de_la_pena_bernstein(double x, double v, double epsilon) {
  require_nonnegative(x, "de_la_pena_bernstein", "x");
  require_finite(v, "de_la_pena_bernstein", "v");
  if (!(v > 0.0)) throw DomainError("de_la_pena_bernstein: v must be > 0");
  require_epsilon_formula(epsilon, "de_la_pena_bernstein");
  const double denom = 2.0 * (v * v + x * epsilon);
  return make_envelope(x, -(x * x) / denom, EnvelopeSource::de_la_pena_bernstein, BoundConstant{});
}

TailEnvelope tail_bound_sq(double x, const BernsteinParams& params) {
  require_nonnegative(x, "tail_bound_sq", "x");
  const double xh = xhat(x, params);
  TailEnvelope env = make_envelope(x, -0.5 * xh * xh, EnvelopeSource::tail_bound_sq, BoundConstant{});
  env.xhat = xh;
  env.lambda_bar = lambda_bar(x, params);
  return env;
}

namespace {

// lb^2 eps + lb delta^2 + eps|log eps| + delta
double conjugate_rate(double lb, const BernsteinParams& params) {
  const double eps = params.epsilon();
  const double d = params.delta();
  return lb * lb * eps + lb * d * d + eps_log_eps(eps) + d;
}

}  // namespace

TailEnvelope strengthened_tail_envelope(double x, const BernsteinParams& params, const BoundConstant& c) {
  require_nonnegative(x, "strengthened_tail_envelope", "x");
  c.validate();
  const double xh = xhat(x, params);
  const double lb = lambda_bar(x, params);
  const double bracket = c.c * (1.0 + xh) * conjugate_rate(lb, params);
  TailEnvelope env = make_envelope(x, std_normal_log_sf(xh) + std::log1p(bracket),
                                   EnvelopeSource::strengthened_tail, c);
  env.xhat = xh;
  env.lambda_bar = lb;
  return env;
}

TailEnvelope strengthened_tail_f_form(double x, const BernsteinParams& params, const BoundConstant& c) {
  require_nonnegative(x, "strengthened_tail_f_form", "x");
  c.validate();
  const double xh = xhat(x, params);
  const double lb = lambda_bar(x, params);
  const double f = c.c * (1.0 / (1.0 + xh) + conjugate_rate(lb, params));
  TailEnvelope env =
      make_envelope(x, safe_log(f) - 0.5 * xh * xh, EnvelopeSource::strengthened_tail_f_form, c);
  env.xhat = xh;
  env.lambda_bar = lb;
  return env;
}

TailEnvelope nonuniform_be_envelope(double x, const BernsteinParams& params, const BoundConstant& c) {
  require_finite(x, "nonuniform_be_envelope", "x");
  c.validate();
  const double ax = std::abs(x);
  const double xh = xhat(ax, params);
  const double factor = eps_log_eps(params.epsilon()) + params.delta() / (1.0 + ax);
  const double log_value = safe_log(c.c) + std::log1p(x * x) + safe_log(factor) - 0.5 * xh * xh;
  TailEnvelope env = make_envelope(x, log_value, EnvelopeSource::nonuniform_be, c);
  env.xhat = xh;
  env.lambda_bar = lambda_bar(ax, params);
  return env;
}

RatioBand cramer_ratio_band(double x, const BernsteinParams& params, const BoundConstant& c) {
  require_nonnegative(x, "cramer_ratio_band", "x");
  c.validate();
  const double eps = params.epsilon();
  const double d = params.delta();
  const double w = c.c * (1.0 + x * x * x) * (eps_log_eps(eps) + d / (1.0 + x));
  const double eps_limit = eps > 0.0 ? 1.0 / std::cbrt(eps) : kInf;
  const double delta_limit = d > 0.0 ? 1.0 / d : kInf;
  return {std::max(0.0, 1.0 - w), 1.0 + w, x <= std::min(eps_limit, delta_limit)};
}

TailEnvelope corollary_envelope(double x, double epsilon, double qc_l1, const BoundConstant& c) {
  require_finite(x, "corollary_envelope", "x");
  require_epsilon_formula(epsilon, "corollary_envelope");
  require_nonnegative(qc_l1, "corollary_envelope", "qc_l1");
  c.validate();
  const double bx = breve_x(x, epsilon);
  const double first = std::log1p(x * x) + safe_log(eps_log_eps(epsilon)) - 0.5 * bx * bx;
  const double second = safe_log(qc_l1 + epsilon * epsilon) / 3.0 - x * x / 6.0;
  TailEnvelope env = make_envelope(x, safe_log(c.c) + log_add(first, second),
                                   EnvelopeSource::corollary_nonuniform, c);
  env.xhat = bx;
  return env;
}

double corollary_uniform_bound(double epsilon, double qc_l1, const BoundConstant& c) {
  require_epsilon_formula(epsilon, "corollary_uniform_bound");
  require_nonnegative(qc_l1, "corollary_uniform_bound", "qc_l1");
  c.validate();
  return c.c * (std::cbrt(qc_l1) + std::cbrt(epsilon * epsilon));
}

double mourrat_envelope(double p, double qc_lp, double epsilon, const BoundConstant& c) {
  require_finite(p, "mourrat_envelope", "p");
  if (p < 1.0) throw DomainError("mourrat_envelope: p must be >= 1");
  require_nonnegative(qc_lp, "mourrat_envelope", "qc_lp");
  require_epsilon_formula(epsilon, "mourrat_envelope");
  c.validate();
  if (c.kind != ConstantKind::C_p || c.p != p) {
    throw DomainError("mourrat_envelope: constant must be of kind C_p with matching p");
  }
  const double denom = 2.0 * p + 1.0;
  return c.c * (std::pow(qc_lp, 1.0 / denom) + std::pow(epsilon, 2.0 * p / denom));
}

double uniform_be_bound(const BernsteinParams& params, const BoundConstant& c) {
  c.validate();
  return c.c * (eps_log_eps(params.epsilon()) + params.delta());
}

ClassicalEnvelopes classical_envelopes(double x, const MomentSummary& m, double delta_m,
                                       const BoundConstant& c) {
  require_finite(x, "classical_envelopes", "x");
  if (!std::isfinite(delta_m) || !(delta_m > 0.0 && delta_m <= 1.0)) {
    throw DomainError("classical_envelopes: moment excess delta must lie in (0, 1]");
  }
  require_nonnegative(m.third_moments_sum, "classical_envelopes", "third_moments_sum");
  require_nonnegative(m.truncated_second, "classical_envelopes", "truncated_second");
  require_nonnegative(m.truncated_third, "classical_envelopes", "truncated_third");
  require_nonnegative(m.qc_deviation_moment, "classical_envelopes", "qc_deviation_moment");
  c.validate();
  const double ax = std::abs(x);
  const double one_plus = 1.0 + ax;
  ClassicalEnvelopes out;
  out.bikelis = c.c * m.third_moments_sum / std::pow(one_plus, 2.0 + delta_m);
  out.chen_shao =
      c.c * (m.truncated_second / (one_plus * one_plus) + m.truncated_third / (one_plus * one_plus * one_plus));
  out.haeusler_joos = c.c * std::pow(m.third_moments_sum + m.qc_deviation_moment, 1.0 / (3.0 + delta_m)) /
                      (1.0 + std::pow(ax, 2.0 + delta_m));
  return out;
}

}  // namespace mgbound

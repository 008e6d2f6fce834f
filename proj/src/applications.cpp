// SPDX-License-Identifier: Apache-2.0
#include "mgbound/applications.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <iterator>
#include <limits>
#include <sstream>

#include "ddouble.hpp"
#include "mgbound/errors.hpp"
#include "mgbound/gaussian.hpp"
#include "parallel.hpp"

namespace mgbound {

using detail::DD;

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

DD dd_dot(const std::vector<double>& a, const std::vector<double>& b) {
  DD acc;
  for (std::size_t i = 0; i < a.size(); ++i) acc = acc + detail::two_prod(a[i], b[i]);
  return acc;
}

void check_eps_value(double eps) {
  if (!std::isfinite(eps) || !(eps > 0.0)) throw DomainError("eps must be a positive real");
}

// log of C (1 + x^2) eps|log eps| exp(-y^2 / 2)
double log_poly_envelope(double x, double y, double eps, double c) {
  return std::log(c) + std::log1p(x * x) + std::log(eps * std::fabs(std::log(eps))) - 0.5 * y * y;
}

TailEnvelope envelope_from_log(double x, double log_value, EnvelopeSource src, const BoundConstant& c) {
  TailEnvelope e;
  e.x = x;
  e.log_value = log_value;
  e.value = std::exp(log_value);
  e.source = src;
  e.constant_used = c;
  return e;
}

RatioBand poly_band(double x, double eps, double c) {
  RatioBand b;
  const double ax = std::fabs(x);
  const double w = c * (1.0 + ax * ax * ax) * eps * std::fabs(std::log(eps));
  b.lo = std::max(0.0, 1.0 - w);
  b.hi = 1.0 + w;
  b.valid = eps <= 0.5 && ax <= std::cbrt(1.0 / eps);
  return b;
}

double breve(double x, double eps) {
  const double ax = std::fabs(x);
  return 2.0 * ax / (1.0 + std::sqrt(1.0 + 2.0 * ax * eps));
}

}  // namespace

void RegressionData::validate() const {
  if (covariates.empty()) throw ConfigError("regression data must contain at least one observation");
  if (covariates.size() != responses.size()) throw ConfigError("covariates and responses differ in length");
  if (!std::isfinite(sigma) || !(sigma > 0.0)) throw ConfigError("sigma must be positive and finite");
  double energy = 0.0;
  for (std::size_t i = 0; i < covariates.size(); ++i) {
    if (!std::isfinite(covariates[i]) || !std::isfinite(responses[i]))
      throw ConfigError("regression data must be finite");
    energy += covariates[i] * covariates[i];
  }
  if (!(energy > 0.0)) throw ConfigError("covariates have zero energy");
}

double least_squares(const RegressionData& data) {
  data.validate();
  const DD num = dd_dot(data.covariates, data.responses);
  const DD den = dd_dot(data.covariates, data.covariates);
  return detail::to_double(num / den);
}

ReductionCheck regression_reduction_check(const RegressionData& data, double theta) {
  data.validate();
  if (!std::isfinite(theta)) throw ConfigError("theta must be finite");
  const DD energy = dd_dot(data.covariates, data.covariates);
  const DD root = detail::dd_sqrt(energy);
  const DD theta_hat = dd_dot(data.covariates, data.responses) / energy;
  const DD sigma{data.sigma, 0.0};

  ReductionCheck r;
  r.lhs = detail::to_double((theta_hat - DD{theta, 0.0}) * root / sigma);
  DD cross;
  for (std::size_t i = 0; i < data.covariates.size(); ++i) {
    const DD e = DD{data.responses[i], 0.0} - detail::two_prod(theta, data.covariates[i]);
    cross = cross + e * DD{data.covariates[i], 0.0};
  }
  r.rhs = detail::to_double(cross / (sigma * root));
  r.residual = std::fabs(r.lhs - r.rhs);
  const double scale = std::max(std::fabs(r.lhs), std::fabs(r.rhs));
  r.relative = scale > 0.0 ? r.residual / scale : 0.0;
  return r;
}

RegressionEpsilons regression_epsilons(const RegressionData& data, NoiseFamily noise) {
  data.validate();
  double mx = 0.0;
  for (double v : data.covariates) mx = std::max(mx, std::fabs(v));
  const double root = detail::to_double(detail::dd_sqrt(dd_dot(data.covariates, data.covariates)));
  RegressionEpsilons e;
  e.eps1 = mx / root;
  e.eps2 = noise_bernstein_constant(noise, data.sigma);
  e.eps = e.eps1 * e.eps2 / data.sigma;
  return e;
}

RegressionEpsilons regression_epsilons(const RegressionModel& m) {
  if (!(m.covariate_low > 0.0) || m.n == 0) throw ConfigError("regression model needs a > 0 and n >= 1");
  RegressionEpsilons e;
  e.eps1 = m.covariate_high / (m.covariate_low * std::sqrt(static_cast<double>(m.n)));
  e.eps2 = noise_bernstein_constant(m.noise, m.sigma);
  e.eps = e.eps1 * e.eps2 / m.sigma;
  return e;
}

RegressionEnvelope regression_envelope(double x, double eps, const BoundConstant& c) {
  check_eps_value(eps);
  c.validate();
  if (std::isnan(x)) throw DomainError("x must not be NaN");
  RegressionEnvelope r;
  r.valid = eps <= 0.5;
  r.nonuniform = envelope_from_log(x, log_poly_envelope(x, breve(x, eps), eps, c.c),
                                   EnvelopeSource::regression_nonuniform, c);
  r.nonuniform.xhat = breve(x, eps);
  r.uniform = c.c * eps * std::fabs(std::log(eps));
  r.band = poly_band(x, eps, c.c);
  return r;
}

CriticalValue regression_critical_value(double eps, double level, const BoundConstant& c, CiInversion how) {
  check_eps_value(eps);
  c.validate();
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  const double target = 1.0 - level;
  const double L = eps * std::fabs(std::log(eps));
  // Two-sided tail bound as a function of x.
  auto bound = [&](double x) {
    const double tail = 2.0 * std_normal_sf(x);
    if (how == CiInversion::ratio_band) return tail * (1.0 + c.c * (1.0 + x * x * x) * L);
    const double y = breve(x, eps);
    return tail + 2.0 * c.c * (1.0 + x * x) * L * std::exp(-0.5 * y * y);
  };

  CriticalValue cv;
  const double step = 1.0 / 64.0, x_max = 40.0;
  double prev = 0.0;
  double hit = -1.0;
  if (bound(0.0) <= target) {
    hit = 0.0;
  } else {
    for (double x = step; x <= x_max; x += step) {
      if (bound(x) <= target) {
        hit = x;
        break;
      }
      prev = x;
    }
  }
  if (hit < 0.0) {
    cv.x_star = HUGE_VAL;
    cv.valid = false;
    cv.warning = "no finite critical value below x = 40";
    return cv;
  }
  if (hit > 0.0) {
    double lo = prev, hi = hit;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (bound(mid) <= target ? hi : lo) = mid;
    }
    hit = hi;
  }
  cv.x_star = hit;
  if (eps > 0.5) {
    cv.valid = false;
    cv.warning = "eps exceeds 1/2";
  } else if (how == CiInversion::ratio_band && hit > std::cbrt(1.0 / eps)) {
    cv.valid = false;
    cv.warning = "critical value lies outside the ratio band's validity range x <= eps^(-1/3)";
  }
  return cv;
}

RegressionInterval regression_ci(const RegressionData& data, double eps, double level, const BoundConstant& c,
                                 CiInversion how) {
  data.validate();
  const CriticalValue cv = regression_critical_value(eps, level, c, how);
  RegressionInterval r;
  r.theta_hat = least_squares(data);
  r.x_star = cv.x_star;
  r.valid = cv.valid;
  r.warning = cv.warning;
  const double root = detail::to_double(detail::dd_sqrt(dd_dot(data.covariates, data.covariates)));
  r.half_width = cv.x_star * data.sigma / root;
  r.lo = r.theta_hat - r.half_width;
  r.hi = r.theta_hat + r.half_width;
  return r;
}

RegressionReport regression_report(const RegressionData& data, NoiseFamily noise, std::optional<double> theta,
                                   const std::vector<double>& x_grid, double level, const BoundConstant& c) {
  RegressionReport r;
  r.n = data.covariates.size();
  r.theta_hat = least_squares(data);
  r.eps = regression_epsilons(data, noise);
  r.valid = r.eps.eps <= 0.5;
  if (theta) {
    r.theta = theta;
    r.standardized_error = regression_reduction_check(data, *theta).lhs;
  }
  for (double x : x_grid) {
    const RegressionEnvelope env = regression_envelope(x, r.eps.eps, c);
    r.envelope_at.emplace_back(x, env.nonuniform.value);
    r.band_at.emplace_back(x, env.band);
  }
  r.interval = regression_ci(data, r.eps.eps, level, c);
  return r;
}

RegressionData simulate_regression(const RegressionModel& model, std::uint64_t seed, std::uint64_t index) {
  const MartingaleModel mm{model};
  const PathSample path = simulate_path(mm, seed, index);
  RegressionData d;
  d.sigma = model.sigma;
  d.covariates = path.environment;
  const double c = noise_support_ratio(model.noise) * model.sigma;
  d.responses.resize(model.n);
  for (std::size_t k = 0; k < model.n; ++k)
    d.responses[k] = model.theta * d.covariates[k] + path.outcomes[k] * c;
  return d;
}

CoverageResult regression_coverage(const RegressionModel& model, double level, const BoundConstant& c,
                                   std::uint64_t replications, std::uint64_t seed, unsigned workers,
                                   std::uint64_t chunk_size, CiInversion how) {
  if (replications == 0) throw ConfigError("replications must be at least 1");
  if (chunk_size == 0) throw ConfigError("chunk_size must be at least 1");
  const MartingaleModel validated{model};
  (void)validated;
  struct Acc {
    std::uint64_t n = 0, covered = 0, invalid = 0;
    double max_eps = 0.0, sum_x = 0.0;
    void merge(const Acc& o) {
      n += o.n;
      covered += o.covered;
      invalid += o.invalid;
      max_eps = std::max(max_eps, o.max_eps);
      sum_x += o.sum_x;
    }
  };
  const Acc acc = detail::run_chunks<Acc>(
      replications, chunk_size, workers, [] { return Acc{}; },
      [&] {
        return [&](Acc& a, std::uint64_t r) {
          const RegressionData d = simulate_regression(model, seed, r);
          const RegressionEpsilons e = regression_epsilons(d, model.noise);
          const RegressionInterval ci = regression_ci(d, e.eps, level, c, how);
          ++a.n;
          a.covered += ci.lo <= model.theta && model.theta <= ci.hi;
          a.invalid += !ci.valid;
          a.max_eps = std::max(a.max_eps, e.eps);
          a.sum_x += ci.x_star;
        };
      });
  CoverageResult r;
  r.level = level;
  r.replications = acc.n;
  r.covered = acc.covered;
  r.coverage = static_cast<double>(acc.covered) / static_cast<double>(acc.n);
  r.std_error = std::sqrt(level * (1.0 - level) / static_cast<double>(acc.n));
  r.max_eps = acc.max_eps;
  r.mean_x_star = acc.sum_x / static_cast<double>(acc.n);
  r.invalid = acc.invalid;
  return r;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_field(std::string_view f, std::size_t line) {
  f = trim(f);
  if (!f.empty() && f.front() == '+') f.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v))
    throw IoError("line " + std::to_string(line) + ": cannot parse number '" + std::string(f) + "'");
  return v;
}

}  // namespace

RegressionData parse_regression_csv(std::string_view text, double sigma) {
  RegressionData d;
  d.sigma = sigma;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
      throw IoError("line " + std::to_string(line_no) + ": expected two comma-separated fields");
    if (!header_seen) {
      if (trim(line.substr(0, comma)) != "phi" || trim(line.substr(comma + 1)) != "x")
        throw IoError("regression CSV must start with the header 'phi,x'");
      header_seen = true;
      continue;
    }
    d.covariates.push_back(parse_field(line.substr(0, comma), line_no));
    d.responses.push_back(parse_field(line.substr(comma + 1), line_no));
  }
  if (!header_seen) throw IoError("regression CSV is empty");
  d.validate();
  return d;
}

RegressionData read_regression_csv(std::istream& in, double sigma) {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw IoError("failed to read regression CSV");
  return parse_regression_csv(text, sigma);
}

double self_norm_statistic(const std::vector<double>& sample) {
  if (sample.empty()) throw DomainError("self-normalized statistic of an empty sample");
  double peak = 0.0;
  for (double v : sample) {
    if (!std::isfinite(v)) throw DomainError("sample values must be finite");
    peak = std::max(peak, std::fabs(v));
  }
  if (peak == 0.0) throw DomainError("self-normalized statistic of an all-zero sample");
  // Rescale by a power of two so that the largest magnitude lies in [1/2, 1).
  int shift = 0;
  std::frexp(peak, &shift);
  DD sum, sq;
  for (double raw : sample) {
    const double v = std::ldexp(raw, -shift);
    sum = sum + DD{v, 0.0};
    sq = sq + detail::two_prod(v, v);
  }
  return detail::to_double(sum / detail::dd_sqrt(sq));
}

SelfNormEnvelope self_norm_envelope(double x, double eps, const BoundConstant& c) {
  check_eps_value(eps);
  c.validate();
  if (std::isnan(x)) throw DomainError("x must not be NaN");
  SelfNormEnvelope r;
  r.valid = eps <= 0.5;
  r.envelope = envelope_from_log(x, log_poly_envelope(x, x, eps, c.c), EnvelopeSource::self_normalized, c);
  r.band = poly_band(x, eps, c.c);
  return r;
}

SelfNormReport self_norm_report(const std::vector<double>& sample, std::optional<double> declared_eps,
                                const std::vector<double>& x_grid, const BoundConstant& c) {
  SelfNormReport r;
  r.n = sample.size();
  r.statistic = self_norm_statistic(sample);
  if (declared_eps) {
    r.eps = *declared_eps;
    r.eps_declared = true;
  } else {
    double mx = 0.0;
    DD sq;
    for (double v : sample) {
      mx = std::max(mx, std::fabs(v));
      sq = sq + detail::two_prod(v, v);
    }
    r.eps = mx / detail::to_double(detail::dd_sqrt(sq));
  }
  r.valid = r.eps <= 0.5;
  for (double x : x_grid) {
    const SelfNormEnvelope env = self_norm_envelope(x, r.eps, c);
    r.envelope_at.emplace_back(x, env.envelope.value);
    r.band_at.emplace_back(x, env.band);
  }
  return r;
}

double wang_jing_bound(double x, double L3n, double tail_prob_sum, const BoundConstant& c) {
  if (std::isnan(x)) throw DomainError("x must not be NaN");
  if (!std::isfinite(L3n) || L3n < 0.0) throw DomainError("L3n must be a nonnegative real");
  if (!std::isfinite(tail_prob_sum) || tail_prob_sum < 0.0)
    throw DomainError("tail probability sum must be a nonnegative real");
  c.validate();
  const double ax = std::fabs(x);
  const double threshold = L3n == 0.0 ? HUGE_VAL : 1.0 / (5.0 * std::cbrt(L3n));
  const double gauss = std::exp(-0.5 * x * x);
  if (ax <= threshold) return c.c * (L3n * (1.0 + x * x) + tail_prob_sum) * gauss;
  return (1.0 + kInvSqrt2Pi / ax) * gauss;
}

WangJingInputs wang_jing_inputs(const SelfNormalized& m, double x) {
  const MartingaleModel validated{m};
  (void)validated;
  const double a = m.magnitude_low, b = m.magnitude_high;
  const double n = static_cast<double>(m.n);
  double second, third;
  if (a == b) {
    second = a * a;
    third = a * a * a;
  } else {
    second = (b * b * b - a * a * a) / (3.0 * (b - a));
    third = (b * b * b * b - a * a * a * a) / (4.0 * (b - a));
  }
  const double Bn = std::sqrt(n * second);
  WangJingInputs w;
  w.L3n = n * third / (Bn * Bn * Bn);
  if (x != 0.0) {
    const double t = Bn / (6.0 * std::fabs(x));
    double p;
    if (a == b)
      p = a >= t ? 1.0 : 0.0;
    else
      p = std::clamp((b - t) / (b - a), 0.0, 1.0);
    w.tail_prob_sum = n * p;
  }
  return w;
}

}  // namespace mgbound

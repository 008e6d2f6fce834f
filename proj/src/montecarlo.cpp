// SPDX-License-Identifier: Apache-2.0
#include "mgbound/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <boost/math/special_functions/beta.hpp>

#include "engine.hpp"
#include "parallel.hpp"
#include "mgbound/errors.hpp"
#include "mgbound/gaussian.hpp"

namespace mgbound {

namespace {

constexpr std::size_t kMaxLeaves = std::size_t{1} << 20;
constexpr std::size_t kMaxViolations = 100;

// Path summaries under P (tilted = false) or P_lambda, with Psi and B at lambda.
template <class Acc, class MakeAcc>
Acc run_summaries(const SimulationConfig& cfg, double lambda, bool tilted, MakeAcc make_acc) {
  return detail::run_chunks<Acc>(cfg.paths, cfg.chunk_size, cfg.workers, make_acc, [&] {
    return [src = detail::LawSource(cfg.model), cache = detail::TiltCache(lambda), tilted,
            seed = cfg.seed](Acc& a, std::uint64_t p) mutable { a.add(detail::run_path(src, cache, tilted, seed, p)); };
  });
}

struct ExceedanceAcc {
  std::vector<double> xs;
  std::vector<std::uint64_t> above;  // #{S_n > x}
  std::uint64_t n = 0;

  explicit ExceedanceAcc(std::vector<double> grid) : xs(std::move(grid)), above(xs.size(), 0) {}
  void add(const detail::PathSummary& r) {
    ++n;
    for (std::size_t j = 0; j < xs.size(); ++j) above[j] += r.s > xs[j];
  }
  void merge(const ExceedanceAcc& o) {
    n += o.n;
    for (std::size_t j = 0; j < xs.size(); ++j) above[j] += o.above[j];
  }
};

struct WeightAcc {
  double x;
  double lambda;
  double sum_w = 0.0, sum_w2 = 0.0, max_w = 0.0;
  std::uint64_t hits = 0, n = 0;

  void add(const detail::PathSummary& r) {
    ++n;
    if (!(r.s > x)) return;
    const double w = std::exp(r.psi - lambda * r.s);
    ++hits;
    sum_w += w;
    sum_w2 += w * w;
    max_w = std::max(max_w, w);
  }
  void merge(const WeightAcc& o) {
    sum_w += o.sum_w;
    sum_w2 += o.sum_w2;
    max_w = std::max(max_w, o.max_w);
    hits += o.hits;
    n += o.n;
  }
};

struct MomentAcc {
  double lambda;
  double sum = 0.0, sum2 = 0.0;
  std::uint64_t n = 0;

  void add(const detail::PathSummary& r) {
    const double z = std::exp(lambda * r.s - r.psi);
    sum += z;
    sum2 += z * z;
    ++n;
  }
  void merge(const MomentAcc& o) {
    sum += o.sum;
    sum2 += o.sum2;
    n += o.n;
  }
};

struct QcAcc {
  double sum = 0.0;
  std::uint64_t n = 0;
  void add(const detail::PathSummary& r) {
    sum += std::fabs(r.qc - 1.0);
    ++n;
  }
  void merge(const QcAcc& o) {
    sum += o.sum;
    n += o.n;
  }
};

struct CltAcc {
  double x, lambda, xh;
  std::vector<double> grid;
  std::vector<std::uint64_t> u_below, y_below;
  std::uint64_t n = 0;

  CltAcc(double x_, double l, double h, std::vector<double> g)
      : x(x_), lambda(l), xh(h), grid(std::move(g)), u_below(grid.size(), 0), y_below(grid.size(), 0) {}
  void add(const detail::PathSummary& r) {
    ++n;
    const double u = lambda * (r.s - x);
    const double y = r.s - r.drift;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      u_below[j] += u <= xh * grid[j];
      y_below[j] += y <= grid[j];
    }
  }
  void merge(const CltAcc& o) {
    n += o.n;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      u_below[j] += o.u_below[j];
      y_below[j] += o.y_below[j];
    }
  }
};

double neumaier_add(double& sum, double& comp, double v) {
  const double t = sum + v;
  if (std::fabs(sum) >= std::fabs(v))
    comp += (sum - t) + v;
  else
    comp += (v - t) + sum;
  sum = t;
  return sum;
}

void check_tilt(const MartingaleModel& model, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0) throw DomainError("tilt must be a nonnegative real");
  if (lambda * model.epsilon() >= 1.0) throw DomainError("tilt must be below 1/epsilon of the model");
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("grid must be nonempty");
  for (double g : grid)
    if (!std::isfinite(g)) throw ConfigError("grid values must be finite");
  if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("grid must be sorted");
}

double two_sided_z(double level) { return std_normal_quantile(0.5 * (1.0 + level)); }

std::vector<detail::Leaf> leaves_for(const MartingaleModel& model, double lambda) {
  return detail::enumerate_leaves(model, lambda, kMaxLeaves);
}

}  // namespace

void SimulationConfig::validate() const {
  if (paths < 1) throw ConfigError("paths must be at least 1");
  if (chunk_size < 1) throw ConfigError("chunk_size must be at least 1");
  if (!(confidence_level > 0.0 && confidence_level < 1.0))
    throw ConfigError("confidence_level must lie in (0, 1)");
}

bool uses_enumeration(const SimulationConfig& cfg) {
  switch (cfg.enumeration) {
    case Enumeration::never:
      return false;
    case Enumeration::always:
      if (!cfg.model.deterministic_environment() || detail::leaf_count(cfg.model) > kMaxLeaves)
        throw UnsupportedModel("exhaustive enumeration is not available for " + cfg.model.id());
      return true;
    case Enumeration::automatic:
    default:
      return cfg.model.deterministic_environment() && detail::leaf_count(cfg.model) <= kMaxLeaves;
  }
}

std::string_view to_string(TailMethod m) noexcept {
  switch (m) {
    case TailMethod::plain_clopper_pearson: return "plain_clopper_pearson";
    case TailMethod::importance_sampled_delta: return "importance_sampled_delta";
    case TailMethod::exhaustive: return "exhaustive";
  }
  return "?";
}

Interval clopper_pearson(std::uint64_t k, std::uint64_t n, double level) {
  if (n == 0) throw ConfigError("Clopper-Pearson interval needs at least one trial");
  if (k > n) throw ConfigError("Clopper-Pearson: successes exceed trials");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
  const double alpha = 1.0 - level;
  const double kd = static_cast<double>(k), nd = static_cast<double>(n);
  Interval iv;
  iv.lo = k == 0 ? 0.0 : boost::math::ibeta_inv(kd, nd - kd + 1.0, 0.5 * alpha);
  iv.hi = k == n ? 1.0 : boost::math::ibeta_inv(kd + 1.0, nd - kd, 1.0 - 0.5 * alpha);
  return iv;
}

double dkw_band(std::uint64_t paths, double level) {
  if (paths == 0) throw ConfigError("DKW band needs at least one path");
  return std::sqrt(std::log(2.0 / (1.0 - level)) / (2.0 * static_cast<double>(paths)));
}

// ---------------------------------------------------------------------------
// Exact oracles

std::vector<double> exact_cdf(const MartingaleModel& model, const std::vector<double>& grid) {
  auto leaves = leaves_for(model, 0.0);
  std::sort(leaves.begin(), leaves.end(), [](const auto& a, const auto& b) { return a.s < b.s; });
  std::vector<double> prefix(leaves.size() + 1, 0.0);
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    neumaier_add(sum, comp, leaves[i].prob);
    prefix[i + 1] = sum + comp;
  }
  std::vector<double> out;
  out.reserve(grid.size());
  for (double x : grid) {
    const auto it = std::upper_bound(leaves.begin(), leaves.end(), x, [](double v, const auto& l) { return v < l.s; });
    out.push_back(std::min(1.0, prefix[static_cast<std::size_t>(it - leaves.begin())]));
  }
  return out;
}

double exact_tail(const MartingaleModel& model, double x) {
  double sum = 0.0, comp = 0.0;
  for (const auto& l : leaves_for(model, 0.0))
    if (l.s > x) neumaier_add(sum, comp, l.prob);
  return sum + comp;
}

double exact_tail_is(const MartingaleModel& model, double x, double tilt) {
  check_tilt(model, tilt);
  double sum = 0.0, comp = 0.0;
  for (const auto& l : leaves_for(model, tilt))
    if (l.s > x) neumaier_add(sum, comp, l.tilted_prob * std::exp(l.psi - tilt * l.s));
  return sum + comp;
}

// ---------------------------------------------------------------------------
// Tail estimates

std::vector<TailEstimate> estimate_tail_plain_grid(const SimulationConfig& cfg, const std::vector<double>& xs) {
  cfg.validate();
  for (double x : xs)
    if (std::isnan(x)) throw ConfigError("x must not be NaN");
  std::vector<TailEstimate> out;
  out.reserve(xs.size());
  if (uses_enumeration(cfg)) {
    const auto leaves = leaves_for(cfg.model, 0.0);
    for (double x : xs) {
      double sum = 0.0, comp = 0.0;
      std::uint64_t above = 0;
      for (const auto& l : leaves)
        if (l.s > x) {
          neumaier_add(sum, comp, l.prob);
          ++above;
        }
      TailEstimate e;
      e.x = x;
      e.paths = leaves.size();
      e.hits = above;
      e.p_hat = e.ci_lo = e.ci_hi = std::min(1.0, sum + comp);
      e.method = TailMethod::exhaustive;
      e.effective_samples = static_cast<double>(leaves.size());
      e.seed = cfg.seed;
      out.push_back(e);
    }
    return out;
  }
  const auto acc = run_summaries<ExceedanceAcc>(cfg, 0.0, false, [&] { return ExceedanceAcc(xs); });
  for (std::size_t j = 0; j < xs.size(); ++j) {
    TailEstimate e;
    e.x = xs[j];
    e.hits = acc.above[j];
    e.paths = acc.n;
    e.p_hat = static_cast<double>(e.hits) / static_cast<double>(e.paths);
    const Interval iv = clopper_pearson(e.hits, e.paths, cfg.confidence_level);
    e.ci_lo = std::min(iv.lo, e.p_hat);
    e.ci_hi = std::max(iv.hi, e.p_hat);
    e.method = TailMethod::plain_clopper_pearson;
    e.effective_samples = static_cast<double>(e.paths);
    e.seed = cfg.seed;
    e.std_error = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(e.paths));
    out.push_back(e);
  }
  return out;
}

TailEstimate estimate_tail_plain(const SimulationConfig& cfg, double x) {
  return estimate_tail_plain_grid(cfg, {x}).front();
}

TailEstimate estimate_tail_is(const SimulationConfig& cfg, double x, std::optional<double> tilt) {
  cfg.validate();
  if (!std::isfinite(x) || x < 0.0) throw DomainError("importance sampling needs a finite x >= 0");
  const double lambda = tilt ? *tilt : lambda_bar(x, cfg.model.params());
  check_tilt(cfg.model, lambda);

  TailEstimate e;
  e.x = x;
  e.tilt = lambda;
  e.seed = cfg.seed;
  if (uses_enumeration(cfg)) {
    e.p_hat = e.ci_lo = e.ci_hi = exact_tail_is(cfg.model, x, lambda);
    e.method = TailMethod::exhaustive;
    e.effective_samples = static_cast<double>(detail::leaf_count(cfg.model));
    e.paths = detail::leaf_count(cfg.model);
    return e;
  }
  const auto acc = run_summaries<WeightAcc>(cfg, lambda, true, [&] { return WeightAcc{x, lambda}; });
  const double m = static_cast<double>(acc.n);
  e.paths = acc.n;
  e.hits = acc.hits;
  e.p_hat = acc.sum_w / m;
  const double var = std::max(0.0, acc.sum_w2 / m - e.p_hat * e.p_hat);
  e.std_error = std::sqrt(var / m);
  const double z = two_sided_z(cfg.confidence_level);
  e.ci_lo = std::max(0.0, e.p_hat - z * e.std_error);
  e.ci_hi = e.p_hat + z * e.std_error;
  e.effective_samples = acc.sum_w2 > 0.0 ? acc.sum_w * acc.sum_w / acc.sum_w2 : 0.0;
  e.method = TailMethod::importance_sampled_delta;
  return e;
}

// ---------------------------------------------------------------------------
// Berry-Esseen distance

namespace {

void fill_distance(BEDistanceEstimate& r) {
  r.d_hat = 0.0;
  r.argmax_x = r.grid.front();
  for (std::size_t j = 0; j < r.grid.size(); ++j) {
    const double d = std::fabs(r.cdf[j] - std_normal_cdf(r.grid[j]));
    if (d > r.d_hat) {
      r.d_hat = d;
      r.argmax_x = r.grid[j];
    }
  }
}

}  // namespace

BEDistanceEstimate estimate_be_distance(const SimulationConfig& cfg, const std::vector<double>& grid) {
  cfg.validate();
  check_grid(grid);
  BEDistanceEstimate r;
  r.grid = grid;
  if (uses_enumeration(cfg)) {
    r.cdf = exact_cdf(cfg.model, grid);
    r.exact = true;
    r.uniform_error_band = 0.0;
  } else {
    const auto acc = run_summaries<ExceedanceAcc>(cfg, 0.0, false, [&] { return ExceedanceAcc(grid); });
    r.paths = acc.n;
    for (std::size_t j = 0; j < grid.size(); ++j)
      r.cdf.push_back(static_cast<double>(acc.n - acc.above[j]) / static_cast<double>(acc.n));
    r.uniform_error_band = dkw_band(acc.n, cfg.confidence_level);
  }
  fill_distance(r);
  return r;
}

BEDistanceEstimate be_distance_of_sample(std::vector<double> values, const std::vector<double>& grid,
                                         double level) {
  check_grid(grid);
  if (values.empty()) throw ConfigError("sample must be nonempty");
  std::sort(values.begin(), values.end());
  BEDistanceEstimate r;
  r.grid = grid;
  r.paths = values.size();
  for (double x : grid) {
    const auto k = std::upper_bound(values.begin(), values.end(), x) - values.begin();
    r.cdf.push_back(static_cast<double>(k) / static_cast<double>(values.size()));
  }
  r.uniform_error_band = dkw_band(values.size(), level);
  fill_distance(r);
  return r;
}

// ---------------------------------------------------------------------------
// Calibration

std::string_view to_string(CalibrationEnvelope e) noexcept {
  switch (e) {
    case CalibrationEnvelope::thm21: return "thm21";
    case CalibrationEnvelope::thm22: return "thm22";
    case CalibrationEnvelope::cor21: return "cor21";
    case CalibrationEnvelope::brmti: return "brmti";
    case CalibrationEnvelope::thm33: return "thm33";
  }
  return "?";
}

std::optional<CalibrationEnvelope> parse_calibration_envelope(std::string_view s) noexcept {
  for (auto e : {CalibrationEnvelope::thm21, CalibrationEnvelope::thm22, CalibrationEnvelope::cor21,
                 CalibrationEnvelope::brmti, CalibrationEnvelope::thm33})
    if (to_string(e) == s) return e;
  return std::nullopt;
}

CalibrationResult calibrate_from_empirical(CalibrationEnvelope envelope, const CalibrationInputs& in) {
  const BernsteinParams& params = in.params;
  const double eps = params.epsilon();
  CalibrationResult res;
  res.envelope = envelope;
  res.qc_l1 = in.qc_l1;
  const BoundConstant one = BoundConstant::absolute(1.0);
  for (const auto& pt : in.points) {
    CalibrationPoint cp;
    cp.x = pt.x;
    double log_unit = 0.0;
    if (envelope == CalibrationEnvelope::thm22) {
      if (pt.x < 0.0) throw ConfigError("thm22 calibration needs x >= 0");
      const double xh = xhat(pt.x, params);
      const double lb = lambda_bar(pt.x, params);
      const double d = params.delta();
      const double k = lb * lb * eps + lb * d * d + eps_log_eps(eps) + d;
      const double base = std_normal_sf(xh);
      cp.empirical = pt.sf_hi;
      cp.unit = (1.0 + xh) * k * base;
      const double excess = cp.empirical / base - 1.0;
      cp.c_required = excess <= 0.0 ? 0.0 : excess / ((1.0 + xh) * k);
    } else {
      const double phi = std_normal_cdf(pt.x);
      cp.empirical = std::max(std::fabs(pt.cdf_hi - phi), std::fabs(pt.cdf_lo - phi));
      switch (envelope) {
        case CalibrationEnvelope::thm21: {
          const auto env = nonuniform_be_envelope(pt.x, params, one);
          cp.unit = env.value;
          log_unit = env.log_value;
          break;
        }
        case CalibrationEnvelope::cor21: {
          const auto env = corollary_envelope(pt.x, eps, in.qc_l1, one);
          cp.unit = env.value;
          log_unit = env.log_value;
          break;
        }
        case CalibrationEnvelope::brmti:
          cp.unit = uniform_be_bound(params, one);
          log_unit = std::log(cp.unit);
          break;
        case CalibrationEnvelope::thm33:
        default:
          log_unit = std::log(eps_log_eps(eps)) + std::log1p(pt.x * pt.x) - 0.5 * pt.x * pt.x;
          cp.unit = std::exp(log_unit);
          break;
      }
      if (cp.empirical <= 0.0)
        cp.c_required = 0.0;
      else if (!(log_unit > -std::numeric_limits<double>::infinity()))
        cp.c_required = std::numeric_limits<double>::infinity();
      else
        cp.c_required = std::exp(std::log(cp.empirical) - log_unit);
    }
    if (cp.c_required > res.c_hat || res.points.empty()) {
      if (cp.c_required > res.c_hat) res.binding_x = cp.x;
      if (res.points.empty()) res.binding_x = cp.x;
      res.c_hat = std::max(res.c_hat, cp.c_required);
    }
    res.points.push_back(cp);
  }
  return res;
}

double qc_deviation_l1(const SimulationConfig& cfg) {
  cfg.validate();
  if (cfg.model.normalized()) return 0.0;
  if (uses_enumeration(cfg)) {
    double sum = 0.0, comp = 0.0;
    for (const auto& l : leaves_for(cfg.model, 0.0)) neumaier_add(sum, comp, l.prob * std::fabs(l.qc - 1.0));
    return sum + comp;
  }
  const auto acc = run_summaries<QcAcc>(cfg, 0.0, false, [] { return QcAcc{}; });
  return acc.sum / static_cast<double>(acc.n);
}

CalibrationResult calibrate_constant(const SimulationConfig& cfg, CalibrationEnvelope envelope,
                                     const std::vector<double>& x_grid) {
  cfg.validate();
  check_grid(x_grid);
  CalibrationInputs in;
  in.params = cfg.model.params();
  if (envelope == CalibrationEnvelope::cor21) in.qc_l1 = qc_deviation_l1(cfg);
  const bool exact = uses_enumeration(cfg);
  std::uint64_t paths = 0;
  if (exact) {
    const auto cdf = exact_cdf(cfg.model, x_grid);
    for (std::size_t j = 0; j < x_grid.size(); ++j)
      in.points.push_back({x_grid[j], cdf[j], cdf[j], 1.0 - cdf[j], 1.0 - cdf[j]});
  } else {
    const auto acc = run_summaries<ExceedanceAcc>(cfg, 0.0, false, [&] { return ExceedanceAcc(x_grid); });
    paths = acc.n;
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
      const Interval iv = clopper_pearson(acc.n - acc.above[j], acc.n, cfg.confidence_level);
      in.points.push_back({x_grid[j], iv.lo, iv.hi, 1.0 - iv.hi, 1.0 - iv.lo});
    }
  }
  CalibrationResult res = calibrate_from_empirical(envelope, in);
  res.paths = paths;
  res.exact = exact;
  return res;
}

// ---------------------------------------------------------------------------
// Conjugate-measure checks

ConjugateCltReport conjugate_clt_check(const SimulationConfig& cfg, double x, const std::vector<double>& u_grid) {
  cfg.validate();
  check_grid(u_grid);
  if (!std::isfinite(x) || x < 0.0) throw DomainError("conjugate CLT check needs a finite x >= 0");
  const BernsteinParams params = cfg.model.params();
  ConjugateCltReport r;
  r.x = x;
  r.lambda_bar = lambda_bar(x, params);
  r.xhat = xhat(x, params);
  r.degenerate = r.lambda_bar == 0.0;
  check_tilt(cfg.model, r.lambda_bar);

  std::vector<double> u_cdf(u_grid.size()), y_cdf(u_grid.size());
  if (uses_enumeration(cfg)) {
    r.exact = true;
    for (const auto& l : leaves_for(cfg.model, r.lambda_bar)) {
      const double u = r.lambda_bar * (l.s - x);
      const double y = l.s - l.drift;
      for (std::size_t j = 0; j < u_grid.size(); ++j) {
        if (u <= r.xhat * u_grid[j]) u_cdf[j] += l.tilted_prob;
        if (y <= u_grid[j]) y_cdf[j] += l.tilted_prob;
      }
    }
  } else {
    const auto acc = run_summaries<CltAcc>(cfg, r.lambda_bar, true,
                                           [&] { return CltAcc(x, r.lambda_bar, r.xhat, u_grid); });
    r.paths = acc.n;
    for (std::size_t j = 0; j < u_grid.size(); ++j) {
      u_cdf[j] = static_cast<double>(acc.u_below[j]) / static_cast<double>(acc.n);
      y_cdf[j] = static_cast<double>(acc.y_below[j]) / static_cast<double>(acc.n);
    }
    r.uniform_error_band = dkw_band(acc.n, cfg.confidence_level);
  }
  for (std::size_t j = 0; j < u_grid.size(); ++j) {
    const double phi = std_normal_cdf(u_grid[j]);
    r.sup_u_distance = std::max(r.sup_u_distance, std::fabs(u_cdf[j] - phi));
    r.sup_y_distance = std::max(r.sup_y_distance, std::fabs(y_cdf[j] - phi));
  }
  return r;
}

ZMartingaleReport z_martingale_check(const SimulationConfig& cfg, double lambda) {
  cfg.validate();
  check_tilt(cfg.model, lambda);
  ZMartingaleReport r;
  r.lambda = lambda;
  if (uses_enumeration(cfg)) {
    double sum = 0.0, comp = 0.0;
    for (const auto& l : leaves_for(cfg.model, lambda))
      neumaier_add(sum, comp, l.prob * std::exp(lambda * l.s - l.psi));
    r.mean = sum + comp;
    r.exact = true;
    return r;
  }
  const auto acc = run_summaries<MomentAcc>(cfg, lambda, false, [&] { return MomentAcc{lambda}; });
  const double m = static_cast<double>(acc.n);
  r.paths = acc.n;
  r.mean = acc.sum / m;
  const double var = std::max(0.0, acc.sum2 / m - r.mean * r.mean) * m / std::max(1.0, m - 1.0);
  r.std_error = std::sqrt(var / m);
  r.z_score = r.std_error > 0.0 ? (r.mean - 1.0) / r.std_error : (r.mean == 1.0 ? 0.0 : HUGE_VAL);
  return r;
}

// ---------------------------------------------------------------------------
// Assertion suite

namespace {

struct PathCheckAcc {
  std::uint64_t n = 0;
  std::uint64_t violation_count = 0;
  double min_drift = HUGE_VAL, min_psi = HUGE_VAL, min_half = HUGE_VAL;
  std::vector<Violation> violations;

  void note(Violation v) {
    ++violation_count;
    if (violations.size() < kMaxViolations) violations.push_back(std::move(v));
  }
  void merge(const PathCheckAcc& o) {
    n += o.n;
    violation_count += o.violation_count;
    min_drift = std::min(min_drift, o.min_drift);
    min_psi = std::min(min_psi, o.min_psi);
    min_half = std::min(min_half, o.min_half);
    for (const auto& v : o.violations)
      if (violations.size() < kMaxViolations) violations.push_back(v);
  }
};

void check_path_structure(const PathSample& p, const MartingaleModel& model, double tol, PathCheckAcc& acc) {
  auto fail = [&](const char* name, double lhs, double rhs) {
    acc.note({name, p.seed, p.path_index, 0.0, lhs, rhs, p.model_id});
  };
  if (p.partial_sums[0] != 0.0) fail("initial_sum", p.partial_sums[0], 0.0);
  double sq = 0.0;
  for (std::size_t k = 0; k < p.steps(); ++k) {
    if (p.partial_sums[k + 1] != p.partial_sums[k] + p.differences[k])
      fail("partial_sum_recursion", p.partial_sums[k + 1], p.partial_sums[k] + p.differences[k]);
    if (p.qc[k + 1] < p.qc[k]) fail("qc_monotone", p.qc[k + 1], p.qc[k]);
    sq += p.differences[k] * p.differences[k];
  }
  if (sq != p.sq_bracket) fail("square_bracket", p.sq_bracket, sq);
  const double qn = p.qc.back();
  const double d2 = model.delta() * model.delta();
  const double slack = d2 + tol * (1.0 + d2);
  if (std::fabs(qn - 1.0) > slack) fail("qc_condition_A2", std::fabs(qn - 1.0), d2);
}

}  // namespace

VerificationReport run_verification(const SimulationConfig& cfg, const VerificationOptions& opts) {
  cfg.validate();
  const MartingaleModel& model = cfg.model;
  const BernsteinParams params = model.params();
  const double eps = model.epsilon();
  VerificationReport rep;
  rep.model_id = model.id();

  const A1Report a1 = verify_A1(model, opts.a1_max_order);
  rep.a1_pass = a1.pass;
  rep.a1_binding_epsilon = a1.binding_epsilon;
  if (!a1.pass) rep.violations.push_back({"condition_A1", cfg.seed, 0, 0.0, a1.binding_epsilon, eps, rep.model_id});
  rep.a2_delta_sq = verify_A2(model).delta_sq_bound;

  std::vector<double> lambdas;
  for (double f : opts.tilt_fractions) {
    const double l = f / eps;
    check_tilt(model, l);
    lambdas.push_back(l);
  }

  const std::uint64_t npaths = opts.path_check_paths ? opts.path_check_paths : cfg.paths;
  const bool normalized = model.normalized();
  const auto acc = detail::run_chunks<PathCheckAcc>(
      npaths, cfg.chunk_size, cfg.workers, [] { return PathCheckAcc{}; },
      [&] {
        return [&](PathCheckAcc& a, std::uint64_t p) {
          const PathSample path = simulate_path(model, cfg.seed, p);
          ++a.n;
          check_path_structure(path, model, opts.identity_tol, a);
          for (double l : lambdas) {
            const ConjugatePathStats st = conjugate_stats(path, model, l);
            const LemmaReport lr = lemma_checks(path, st, params, normalized, opts.identity_tol);
            a.min_drift = std::min(a.min_drift, lr.drift_upper_slack);
            a.min_psi = std::min(a.min_psi, lr.psi_upper_slack);
            if (normalized) a.min_half = std::min(a.min_half, lr.half_cosh_slack);
            for (const auto& v : lr.violations)
              a.note({v.check, cfg.seed, p, l, v.lhs, v.rhs, "step " + std::to_string(v.step)});
          }
        };
      });
  rep.paths_checked = acc.n;
  rep.path_violation_count = acc.violation_count;
  rep.min_drift_upper_slack = acc.min_drift;
  rep.min_psi_upper_slack = acc.min_psi;
  rep.min_half_cosh_slack = normalized ? acc.min_half : 0.0;
  for (const auto& v : acc.violations)
    if (rep.violations.size() < kMaxViolations) rep.violations.push_back(v);

  if (opts.check_domination && !opts.domination_grid.empty()) {
    std::vector<double> plain_x, is_x;
    for (double x : opts.domination_grid) (x <= 2.0 ? plain_x : is_x).push_back(x);
    std::vector<TailEstimate> est;
    if (!plain_x.empty()) est = estimate_tail_plain_grid(cfg, plain_x);
    for (double x : is_x) est.push_back(estimate_tail_is(cfg, x));
    for (const auto& e : est) {
      const double bound = tail_bound_sq(e.x, params).value;
      if (e.ci_hi > bound * (1.0 + 1e-12))
        rep.violations.push_back({"tail_domination", cfg.seed, 0, e.tilt, e.ci_hi, bound,
                                  "x = " + std::to_string(e.x) + " via " + std::string(to_string(e.method))});
    }
    rep.domination = std::move(est);
  }

  if (opts.check_z_mean)
    for (double l : lambdas) rep.z_checks.push_back(z_martingale_check(cfg, l));
  return rep;
}

}  // namespace mgbound

// SPDX-License-Identifier: Apache-2.0
#include "mgbound/martingales.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "engine.hpp"
#include "json.hpp"
#include "mgbound/errors.hpp"
#include "mgbound/rng.hpp"

namespace mgbound {

namespace {

std::string short_num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

double half_factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f / 2.0;
}

// Largest normalized step phi_k / sqrt(sum phi^2) attainable with phi in [a, b].
double worst_normalized_step(std::size_t n, double a, double b) {
  if (n == 1) return 1.0;
  return b / std::sqrt(b * b + static_cast<double>(n - 1) * a * a);
}

void check_epsilon_cap(double eps, const std::string& what) {
  if (!(eps <= 0.5))
    throw ConfigError(what + ": declared epsilon = " + short_num(eps) +
                      " violates condition (A1): epsilon must lie in (0, 1/2]");
}

}  // namespace

std::string_view to_string(NoiseFamily f) noexcept {
  return f == NoiseFamily::rademacher_scaled ? "rademacher_scaled" : "truncated_symmetric";
}

double noise_support_ratio(NoiseFamily f) noexcept {
  return f == NoiseFamily::rademacher_scaled ? 1.0 : std::sqrt(2.0);
}

double noise_nonzero_prob(NoiseFamily f) noexcept {
  return f == NoiseFamily::rademacher_scaled ? 1.0 : 0.5;
}

double noise_bernstein_constant(NoiseFamily f, double sigma, int max_order) {
  if (!finite_positive(sigma)) throw ConfigError("noise sigma must be positive and finite");
  if (max_order < 4) throw ConfigError("max_order must be at least 4");
  const double c = noise_support_ratio(f) * sigma;
  const double p = noise_nonzero_prob(f);
  const double var = p * c * c;
  double eps2 = 0.0;
  for (int l = 3; l <= max_order; ++l) {
    if (l % 2 != 0) continue;  // symmetric law: odd moments vanish
    const double moment = p * std::pow(c, l);
    eps2 = std::max(eps2, std::pow(moment / (half_factorial(l) * var), 1.0 / (l - 2)));
  }
  return eps2;
}

MartingaleModel::MartingaleModel(Family family) : family_(std::move(family)) {
  std::visit(
      overloaded{
          [&](const ScaledRademacher& m) {
            require(!m.weights.empty(), "scaled_rademacher: weights must be nonempty");
            double ss = 0.0, mx = 0.0;
            for (double w : m.weights) {
              require(finite_positive(w), "scaled_rademacher: weights must be positive and finite");
              ss += w * w;
              mx = std::max(mx, w);
            }
            require(std::fabs(ss - 1.0) <= 1e-12,
                    "scaled_rademacher: squared weights must sum to 1 (got " + short_num(ss) + ")");
            epsilon_ = mx;
            check_epsilon_cap(epsilon_, "scaled_rademacher");
          },
          [&](const VarianceSwitch& m) {
            require(m.n >= 1, "variance_switch: n must be at least 1");
            require(std::isfinite(m.delta) && m.delta >= 0.0 && m.delta <= 1.0,
                    "variance_switch: delta must lie in [0, 1]");
            epsilon_ = std::sqrt((1.0 + m.delta * m.delta) / static_cast<double>(m.n));
            check_epsilon_cap(epsilon_, "variance_switch");
          },
          [&](const RegressionModel& m) {
            require(m.n >= 1, "regression: n must be at least 1");
            require(std::isfinite(m.theta), "regression: theta must be finite");
            require(finite_positive(m.covariate_low) && finite_positive(m.covariate_high) &&
                        m.covariate_low <= m.covariate_high,
                    "regression: need 0 < covariate_low <= covariate_high");
            require(finite_positive(m.sigma), "regression: sigma must be positive and finite");
            const double eps1 = m.covariate_high / (m.covariate_low * std::sqrt(static_cast<double>(m.n)));
            epsilon_ = eps1 * noise_bernstein_constant(m.noise, m.sigma) / m.sigma;
            check_epsilon_cap(epsilon_, "regression");
          },
          [&](const SelfNormalized& m) {
            require(m.n >= 1, "self_normalized: n must be at least 1");
            require(finite_positive(m.magnitude_low) && finite_positive(m.magnitude_high) &&
                        m.magnitude_low <= m.magnitude_high,
                    "self_normalized: need 0 < magnitude_low <= magnitude_high");
            epsilon_ = m.magnitude_high / (m.magnitude_low * std::sqrt(static_cast<double>(m.n)));
            check_epsilon_cap(epsilon_, "self_normalized");
          },
      },
      family_);
}

MartingaleModel MartingaleModel::equal_weights(std::size_t n) {
  if (n == 0) throw ConfigError("scaled_rademacher: n must be at least 1");
  return MartingaleModel(ScaledRademacher{std::vector<double>(n, 1.0 / std::sqrt(static_cast<double>(n)))});
}

std::size_t MartingaleModel::steps() const noexcept {
  return std::visit(overloaded{[](const ScaledRademacher& m) { return m.weights.size(); },
                               [](const auto& m) { return m.n; }},
                    family_);
}

double MartingaleModel::delta() const noexcept {
  if (const auto* m = std::get_if<VarianceSwitch>(&family_)) return m->delta;
  return 0.0;
}

bool MartingaleModel::deterministic_environment() const noexcept {
  if (const auto* m = std::get_if<RegressionModel>(&family_)) return m->covariate_low == m->covariate_high;
  if (const auto* m = std::get_if<SelfNormalized>(&family_)) return m->magnitude_low == m->magnitude_high;
  return true;
}

std::size_t MartingaleModel::branching() const noexcept {
  if (const auto* m = std::get_if<RegressionModel>(&family_))
    return m->noise == NoiseFamily::truncated_symmetric ? 3 : 2;
  return 2;
}

std::string MartingaleModel::id() const {
  return std::visit(
      overloaded{
          [](const ScaledRademacher& m) { return "scaled_rademacher[n=" + std::to_string(m.weights.size()) + "]"; },
          [](const VarianceSwitch& m) {
            return "variance_switch[n=" + std::to_string(m.n) + ",delta=" + short_num(m.delta) + "]";
          },
          [](const RegressionModel& m) {
            return "regression[n=" + std::to_string(m.n) + ",theta=" + short_num(m.theta) +
                   ",a=" + short_num(m.covariate_low) + ",b=" + short_num(m.covariate_high) +
                   ",sigma=" + short_num(m.sigma) + ",noise=" + std::string(to_string(m.noise)) + "]";
          },
          [](const SelfNormalized& m) {
            return "self_normalized[n=" + std::to_string(m.n) + ",a=" + short_num(m.magnitude_low) +
                   ",b=" + short_num(m.magnitude_high) + "]";
          },
      },
      family_);
}

// ---------------------------------------------------------------------------
// JSON

std::string model_to_json(const MartingaleModel& model) {
  using nlohmann::json;
  json j = std::visit(
      overloaded{
          [](const ScaledRademacher& m) { return json{{"family", "scaled_rademacher"}, {"weights", m.weights}}; },
          [](const VarianceSwitch& m) { return json{{"family", "variance_switch"}, {"n", m.n}, {"delta", m.delta}}; },
          [](const RegressionModel& m) {
            return json{{"family", "regression"},           {"theta", m.theta},
                        {"n", m.n},                          {"covariate_low", m.covariate_low},
                        {"covariate_high", m.covariate_high}, {"sigma", m.sigma},
                        {"noise", std::string(to_string(m.noise))}};
          },
          [](const SelfNormalized& m) {
            return json{{"family", "self_normalized"},
                        {"n", m.n},
                        {"magnitude_low", m.magnitude_low},
                        {"magnitude_high", m.magnitude_high}};
          },
      },
      model.family());
  return j.dump();
}

MartingaleModel model_from_json(std::string_view text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model JSON: ") + e.what());
  }
  try {
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "scaled_rademacher")
      return MartingaleModel(ScaledRademacher{j.at("weights").get<std::vector<double>>()});
    if (fam == "variance_switch")
      return MartingaleModel(VarianceSwitch{j.at("n").get<std::size_t>(), j.at("delta").get<double>()});
    if (fam == "regression") {
      RegressionModel m;
      m.theta = j.at("theta").get<double>();
      m.n = j.at("n").get<std::size_t>();
      m.covariate_low = j.at("covariate_low").get<double>();
      m.covariate_high = j.at("covariate_high").get<double>();
      m.sigma = j.at("sigma").get<double>();
      const std::string noise = j.at("noise").get<std::string>();
      if (noise == "rademacher_scaled")
        m.noise = NoiseFamily::rademacher_scaled;
      else if (noise == "truncated_symmetric")
        m.noise = NoiseFamily::truncated_symmetric;
      else
        throw ConfigError("model JSON: unknown noise family '" + noise + "'");
      return MartingaleModel(m);
    }
    if (fam == "self_normalized")
      return MartingaleModel(SelfNormalized{j.at("n").get<std::size_t>(), j.at("magnitude_low").get<double>(),
                                            j.at("magnitude_high").get<double>()});
    throw ConfigError("model JSON: unknown family '" + fam + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Conditional laws and the conjugate measure

TiltedMoments tilted_moments(const StepLaw& law, double lambda) {
  const double p = law.nonzero_prob;
  const double h = law.scale;
  const double t = lambda * h;
  TiltedMoments r;
  if (t < 20.0) {
    const double sh = std::sinh(0.5 * t);
    const double mgf = 1.0 + 2.0 * p * sh * sh;
    r.log_mgf = std::log1p(2.0 * p * sh * sh);
    r.drift = p * h * std::sinh(t) / mgf;
    r.prob_nonzero = p * std::cosh(t) / mgf;
  } else {
    const double e = std::exp(-t);
    const double e2 = e * e;
    const double denom = 0.5 * p * (1.0 + e2) + (1.0 - p) * e;
    r.log_mgf = t + std::log(denom);
    r.drift = 0.5 * p * h * (1.0 - e2) / denom;
    r.prob_nonzero = 0.5 * p * (1.0 + e2) / denom;
  }
  if (p >= 1.0) r.prob_nonzero = 1.0;
  r.prob_up_given_nonzero = 1.0 / (1.0 + std::exp(-2.0 * t));
  return r;
}

namespace detail {

TiltedLaw make_tilted_law(const StepLaw& law, double lambda) {
  TiltedLaw t;
  t.base = law;
  t.lambda = lambda;
  t.moments = tilted_moments(law, lambda);
  t.nonzero_plain = BernoulliThreshold::from_probability(law.nonzero_prob);
  t.nonzero_tilted = BernoulliThreshold::from_probability(t.moments.prob_nonzero);
  t.up_tilted = BernoulliThreshold::from_probability(t.moments.prob_up_given_nonzero);
  return t;
}

LawSource::LawSource(const MartingaleModel& model) : kind_(model.kind()), n_(model.steps()) {
  std::visit(overloaded{
                 [&](const ScaledRademacher& m) { scales_ = m.weights; },
                 [&](const VarianceSwitch& m) {
                   const double n = static_cast<double>(m.n);
                   const double d2 = m.delta * m.delta;
                   hi_ = std::sqrt((1.0 + d2) / n);
                   lo_ = std::sqrt((1.0 - d2) / n);
                 },
                 [&](const RegressionModel& m) {
                   env_low_ = m.covariate_low;
                   env_high_ = m.covariate_high;
                   support_ratio_ = noise_support_ratio(m.noise);
                   nonzero_prob_ = noise_nonzero_prob(m.noise);
                 },
                 [&](const SelfNormalized& m) {
                   env_low_ = m.magnitude_low;
                   env_high_ = m.magnitude_high;
                 },
             },
             model.family());
  if (kind_ == ModelKind::regression || kind_ == ModelKind::self_normalized) {
    random_env_ = env_low_ != env_high_;
    env_.assign(n_, env_low_);
    scales_.resize(n_);
    fill_scales();
  }
}

void LawSource::begin_path(std::uint64_t seed, std::uint64_t path_index) {
  if (!random_env_) return;
  CounterRng rng(seed, path_index, RngStream::environment);
  const double width = env_high_ - env_low_;
  for (auto& v : env_) v = env_low_ + width * rng.uniform();
  fill_scales();
}

void LawSource::fill_scales() {
  double ss = 0.0;
  for (double v : env_) ss += v * v;
  const double inv = support_ratio_ / std::sqrt(ss);
  for (std::size_t i = 0; i < n_; ++i) scales_[i] = env_[i] * inv;
}

std::size_t leaf_count(const MartingaleModel& model) noexcept {
  const std::size_t b = model.branching();
  std::size_t count = 1;
  for (std::size_t i = 0; i < model.steps(); ++i) {
    if (count > std::numeric_limits<std::size_t>::max() / b) return std::numeric_limits<std::size_t>::max();
    count *= b;
  }
  return count;
}

namespace {

struct Enumerator {
  LawSource& src;
  TiltCache& cache;
  std::vector<Leaf>& out;

  void walk(std::size_t i, double s, double qc, double prob, double tprob, double psi, double drift) {
    if (i == src.steps()) {
      out.push_back({s, qc, prob, tprob, psi, drift});
      return;
    }
    const TiltedLaw& t = cache.get(src.law(i, s));
    const StepLaw law = t.base;
    const TiltedMoments m = t.moments;
    const double q = qc + law.variance();
    const double ps = psi + m.log_mgf;
    const double dr = drift + m.drift;
    const double half = 0.5 * law.nonzero_prob;
    const double up = m.prob_up_given_nonzero;
    walk(i + 1, s - law.scale, q, prob * half, tprob * m.prob_nonzero * (1.0 - up), ps, dr);
    if (law.nonzero_prob < 1.0)
      walk(i + 1, s, q, prob * (1.0 - law.nonzero_prob), tprob * (1.0 - m.prob_nonzero), ps, dr);
    walk(i + 1, s + law.scale, q, prob * half, tprob * m.prob_nonzero * up, ps, dr);
  }
};

}  // namespace

std::vector<Leaf> enumerate_leaves(const MartingaleModel& model, double lambda, std::size_t max_leaves) {
  if (!model.deterministic_environment())
    throw UnsupportedModel("exhaustive enumeration needs a deterministic environment (" + model.id() + ")");
  const std::size_t count = leaf_count(model);
  if (count > max_leaves)
    throw UnsupportedModel("exhaustive enumeration of " + model.id() + " exceeds " +
                           std::to_string(max_leaves) + " leaves");
  LawSource src(model);
  TiltCache cache(lambda);
  std::vector<Leaf> out;
  out.reserve(count);
  Enumerator{src, cache, out}.walk(0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Paths

namespace {

void check_tilt(const MartingaleModel& model, double lambda) {
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw DomainError("tilt lambda = " + short_num(lambda) + " must be a nonnegative real");
  if (lambda * model.epsilon() >= 1.0)
    throw DomainError("tilt lambda = " + short_num(lambda) + " must be below 1/epsilon = " +
                      short_num(1.0 / model.epsilon()));
}

PathSample simulate_impl(const MartingaleModel& model, double lambda, bool tilted, std::uint64_t seed,
                         std::uint64_t path_index) {
  detail::LawSource src(model);
  detail::TiltCache cache(lambda);
  src.begin_path(seed, path_index);
  CounterRng rng(seed, path_index, RngStream::steps);

  const std::size_t n = model.steps();
  PathSample p;
  p.seed = seed;
  p.path_index = path_index;
  p.tilt = tilted ? lambda : 0.0;
  p.model_id = model.id();
  p.differences.reserve(n);
  p.partial_sums.reserve(n + 1);
  p.qc.reserve(n + 1);
  p.laws.reserve(n);
  p.outcomes.reserve(n);
  p.environment = src.environment();
  p.partial_sums.push_back(0.0);
  p.qc.push_back(0.0);
  double s = 0.0, q = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const detail::TiltedLaw& t = cache.get(src.law(i, s));
    const int o = detail::sample_step(rng, t, tilted);
    const double xi = o * t.base.scale;
    s += xi;
    q += t.base.variance();
    sq += xi * xi;
    p.differences.push_back(xi);
    p.partial_sums.push_back(s);
    p.qc.push_back(q);
    p.laws.push_back(t.base);
    p.outcomes.push_back(static_cast<std::int8_t>(o));
  }
  p.sq_bracket = sq;
  return p;
}

}  // namespace

PathSample simulate_path(const MartingaleModel& model, std::uint64_t seed, std::uint64_t path_index) {
  return simulate_impl(model, 0.0, false, seed, path_index);
}

PathSample simulate_tilted_path(const MartingaleModel& model, double lambda, std::uint64_t seed,
                                std::uint64_t path_index) {
  check_tilt(model, lambda);
  return simulate_impl(model, lambda, true, seed, path_index);
}

ConjugatePathStats conjugate_stats(const PathSample& path, const MartingaleModel& model, double lambda) {
  check_tilt(model, lambda);
  if (path.laws.size() != path.differences.size())
    throw UnsupportedModel("path carries no conditional laws");
  ConjugatePathStats st;
  st.lambda = lambda;
  const std::size_t n = path.steps();
  st.per_step_b.reserve(n);
  st.per_step_log_mgf.reserve(n);
  double log_z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const TiltedMoments m = tilted_moments(path.laws[i], lambda);
    const double xi = path.differences[i];
    st.per_step_b.push_back(m.drift);
    st.per_step_log_mgf.push_back(m.log_mgf);
    st.psi += m.log_mgf;
    st.b_drift += m.drift;
    st.y += xi - m.drift;
    log_z += lambda * xi - m.log_mgf;
  }
  st.log_z = log_z;
  st.z = std::exp(log_z);
  return st;
}

// ---------------------------------------------------------------------------
// Conditions

A1Report verify_A1(const MartingaleModel& model, int max_order, double tol) {
  if (max_order < 2) throw ConfigError("verify_A1: max_order must be at least 2");
  if (!(tol >= 0.0)) throw ConfigError("verify_A1: tol must be nonnegative");
  const double eps = model.epsilon();

  // Worst-case law at each step; step 0 stands for "any environment".
  std::vector<std::pair<std::size_t, StepLaw>> laws;
  std::visit(overloaded{
                 [&](const ScaledRademacher& m) {
                   for (std::size_t i = 0; i < m.weights.size(); ++i) laws.push_back({i + 1, {m.weights[i], 1.0}});
                 },
                 [&](const VarianceSwitch& m) {
                   // Larger steps dominate every moment ratio; the + branch is reachable at every step.
                   const double hi = std::sqrt((1.0 + m.delta * m.delta) / static_cast<double>(m.n));
                   for (std::size_t i = 0; i < m.n; ++i) laws.push_back({i + 1, {hi, 1.0}});
                 },
                 [&](const RegressionModel& m) {
                   const double h = noise_support_ratio(m.noise) *
                                    worst_normalized_step(m.n, m.covariate_low, m.covariate_high);
                   laws.push_back({0, {h, noise_nonzero_prob(m.noise)}});
                 },
                 [&](const SelfNormalized& m) {
                   laws.push_back({0, {worst_normalized_step(m.n, m.magnitude_low, m.magnitude_high), 1.0}});
                 },
             },
             model.family());

  A1Report rep;
  rep.declared_epsilon = eps;
  rep.worst_margin = 1.0;
  for (const auto& [step, law] : laws) {
    const double var = law.variance();
    for (int k = 2; k <= max_order; ++k) {
      A1Check c;
      c.step = step;
      c.order = k;
      c.lhs = (k % 2 == 0) ? law.nonzero_prob * std::pow(law.scale, k) : 0.0;
      c.rhs = half_factorial(k) * std::pow(eps, k - 2) * var;
      if (c.lhs > c.rhs * (1.0 + tol)) rep.pass = false;
      const double margin = c.rhs > 0.0 ? (c.rhs - c.lhs) / c.rhs : 1.0;
      rep.worst_margin = std::min(rep.worst_margin, margin);
      if (k >= 3 && c.lhs > 0.0 && var > 0.0)
        rep.binding_epsilon =
            std::max(rep.binding_epsilon, std::pow(c.lhs / (half_factorial(k) * var), 1.0 / (k - 2)));
      rep.checks.push_back(c);
    }
  }
  return rep;
}

A2Report verify_A2(const MartingaleModel& model) {
  const double d = model.delta();
  return {d * d, true};
}

LemmaReport lemma_checks(const PathSample& path, const ConjugatePathStats& st, const BernsteinParams& params,
                         bool normalized, double rel_tol) {
  LemmaReport rep;
  const double l = st.lambda;
  const double eps = params.epsilon();
  const double cap = params.variance_cap();
  const double d2 = params.delta() * params.delta();
  auto check = [&](const char* name, std::size_t step, double lhs, double rhs, double scale) {
    if (lhs > rhs + rel_tol * scale) {
      rep.ok = false;
      rep.violations.push_back({name, step, lhs, rhs});
    }
  };

  const double one_minus = 1.0 - l * eps;
  const double b_rhs = (l - 0.5 * l * l * eps) * cap / (one_minus * one_minus);
  rep.drift_upper_slack = b_rhs - st.b_drift;
  check("drift_upper", 0, st.b_drift, b_rhs, std::fabs(b_rhs));

  const double psi_rhs = l * l * cap / (2.0 * one_minus);
  rep.psi_upper_slack = psi_rhs - st.psi;
  check("log_mgf_upper", 0, st.psi, psi_rhs, std::fabs(psi_rhs));

  rep.drift_lower_slack_c1 = st.b_drift - (l - l * d2 - l * l * eps);

  // Exact per-path identities.
  const double s = path.terminal();
  double mag = 0.0;
  for (std::size_t i = 0; i < path.steps(); ++i) mag += std::fabs(path.differences[i]) + std::fabs(st.per_step_b[i]);
  check("decomposition", 0, std::fabs(s - (st.y + st.b_drift)), 0.0, mag + std::fabs(s));
  const double lz = l * s - st.psi;
  check("log_z_identity", 0, std::fabs(st.log_z - lz), 0.0, l * mag + std::fabs(st.psi) + std::fabs(lz));

  if (normalized) {
    const double half = 0.5 * l * l;
    double psi_k = 0.0;
    rep.half_cosh_slack = half;
    for (std::size_t k = 0; k < st.per_step_log_mgf.size(); ++k) {
      psi_k += st.per_step_log_mgf[k];
      rep.half_cosh_slack = std::min(rep.half_cosh_slack, half - psi_k);
      check("half_cosh", k + 1, psi_k, half, half);
    }
  }
  return rep;
}

PathSample bolthausen_augment(const PathSample& path, double epsilon, std::uint64_t seed) {
  if (!std::isfinite(epsilon) || epsilon <= 0.0)
    throw DomainError("augmentation epsilon = " + short_num(epsilon) + " must be positive");
  const std::size_t n = path.steps();
  const double inv_e2 = 1.0 / (epsilon * epsilon);
  if (!(inv_e2 < 1e8)) throw DomainError("augmentation epsilon too small: padding block would exceed 1e8 steps");
  const std::size_t block = static_cast<std::size_t>(std::floor(inv_e2));
  const std::size_t N = n + block + 1;

  // tau = last k with <S>_k <= 1; <S>_k is nondecreasing.
  std::size_t tau = 0;
  for (std::size_t k = 0; k <= n; ++k)
    if (path.qc[k] <= 1.0 + 1e-12) tau = k;
  const double base = std::min(path.qc[tau], 1.0);
  const double rem = 1.0 - base;
  std::size_t r = static_cast<std::size_t>(std::max(0.0, std::floor(rem * inv_e2 + 1e-9)));
  r = std::min(r, block);
  const double last = std::sqrt(std::max(0.0, rem - static_cast<double>(r) * epsilon * epsilon));

  PathSample out;
  out.seed = path.seed;
  out.path_index = path.path_index;
  out.tilt = path.tilt;
  out.model_id = path.model_id + "+augmented";
  out.environment = path.environment;
  out.differences.assign(path.differences.begin(), path.differences.begin() + tau);
  out.partial_sums.assign(path.partial_sums.begin(), path.partial_sums.begin() + tau + 1);
  out.qc.assign(path.qc.begin(), path.qc.begin() + tau + 1);
  if (!path.laws.empty()) out.laws.assign(path.laws.begin(), path.laws.begin() + tau);
  if (!path.outcomes.empty()) out.outcomes.assign(path.outcomes.begin(), path.outcomes.begin() + tau);

  CounterRng rng(seed, path.path_index, RngStream::padding);
  double s = out.partial_sums.back();
  double q = out.qc.back();
  auto push = [&](double scale, int sign) {
    const double xi = sign * scale;
    s += xi;
    q += scale * scale;
    out.differences.push_back(xi);
    out.partial_sums.push_back(s);
    out.qc.push_back(q);
    out.laws.push_back({scale, 1.0});
    out.outcomes.push_back(static_cast<std::int8_t>(scale > 0.0 ? sign : 0));
  };
  for (std::size_t j = 0; j < r; ++j) push(epsilon, rng.next_bit() ? 1 : -1);
  // Final step carries an independent sign so that it stays a martingale difference.
  push(last, rng.next_bit() ? 1 : -1);
  while (out.differences.size() < N) push(0.0, 1);

  double sq = 0.0;
  for (double xi : out.differences) sq += xi * xi;
  out.sq_bracket = sq;
  return out;
}

std::string path_to_csv(const PathSample& path) {
  std::string out = "step,xi,s,qc\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "0,0,%.17g,%.17g\n", path.partial_sums[0], path.qc[0]);
  out += buf;
  for (std::size_t i = 0; i < path.steps(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i + 1, path.differences[i], path.partial_sums[i + 1],
                  path.qc[i + 1]);
    out += buf;
  }
  return out;
}

}  // namespace mgbound
